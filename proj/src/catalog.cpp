#include "tapsynth/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tapsynth/error.hpp"

namespace tapsynth {

using nlohmann::ordered_json;

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "ok";
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::DuplicateId: return "duplicate-id";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::KindMismatch: return "kind-mismatch";
        case ErrorCode::DimMismatch: return "dim-mismatch";
        case ErrorCode::CorruptFile: return "corrupt-file";
        case ErrorCode::UnknownId: return "unknown-id";
        case ErrorCode::Provider: return "provider";
        case ErrorCode::Backend: return "backend";
        case ErrorCode::Exhausted: return "exhausted";
        case ErrorCode::Io: return "io";
        case ErrorCode::Config: return "config";
        case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

const char* kind_name(FunctionKind kind) noexcept {
    return kind == FunctionKind::Trigger ? "trigger" : "action";
}

FunctionKind parse_kind(std::string_view name) {
    if (name == "trigger" || name == "Trigger") return FunctionKind::Trigger;
    if (name == "action" || name == "Action") return FunctionKind::Action;
    throw Error(ErrorCode::InvalidArgument, "unknown function kind '" + std::string(name) + "'");
}

namespace {

std::string squash(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

}  // namespace

DataType DataType::parse(std::string_view text, bool* recognized) {
    static const std::pair<const char*, Tag> kKnown[] = {
        {"string", Tag::String},      {"text", Tag::String},
        {"number", Tag::Number},      {"integer", Tag::Number},
        {"boolean", Tag::Boolean},    {"bool", Tag::Boolean},
        {"date", Tag::Date},          {"datewithtime", Tag::DateWithTime},
        {"datetime", Tag::DateWithTime}, {"url", Tag::Url},
        {"weburl", Tag::Url},         {"imageurl", Tag::ImageUrl},
    };
    const std::string key = squash(text);
    for (const auto& [name, tag] : kKnown) {
        if (key == name) {
            if (recognized) *recognized = true;
            return DataType{tag, {}};
        }
    }
    if (recognized) *recognized = false;
    return DataType{Tag::Other, std::string(text)};
}

std::string DataType::to_string() const {
    switch (tag) {
        case Tag::String: return "String";
        case Tag::Number: return "Number";
        case Tag::Boolean: return "Boolean";
        case Tag::Date: return "Date";
        case Tag::DateWithTime: return "Date with time";
        case Tag::Url: return "Url";
        case Tag::ImageUrl: return "Image url";
        case Tag::Other: return other_name;
    }
    return other_name;
}

const IngredientSpec* FunctionEntry::find_ingredient(std::string_view slug) const {
    for (const auto& i : ingredients) {
        if (i.slug == slug) return &i;
    }
    return nullptr;
}

const FieldSpec* FunctionEntry::find_field(std::string_view slug) const {
    for (const auto& f : fields) {
        if (f.slug == slug) return &f;
    }
    return nullptr;
}

namespace {

void validate_entry(const FunctionEntry& e, FunctionKind expected, const std::string& where) {
    if (e.id.empty()) throw Error(ErrorCode::Parse, where + ".id: must be non-empty");
    if (e.kind != expected) {
        throw Error(ErrorCode::KindMismatch, where + ": entry '" + e.id + "' has kind " +
                                                 kind_name(e.kind) + ", expected " +
                                                 kind_name(expected));
    }
    if (e.kind == FunctionKind::Action && !e.ingredients.empty()) {
        throw Error(ErrorCode::Parse, where + ": action entry '" + e.id + "' carries ingredients");
    }
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < e.ingredients.size(); ++i) {
        const auto& slug = e.ingredients[i].slug;
        if (slug.empty()) {
            throw Error(ErrorCode::Parse,
                        where + ".ingredients[" + std::to_string(i) + "].slug: must be non-empty");
        }
        if (!seen.insert(slug).second) {
            throw Error(ErrorCode::DuplicateId,
                        where + ": duplicate ingredient slug '" + slug + "' in '" + e.id + "'");
        }
    }
    seen.clear();
    for (std::size_t i = 0; i < e.fields.size(); ++i) {
        const auto& slug = e.fields[i].slug;
        if (slug.empty()) {
            throw Error(ErrorCode::Parse,
                        where + ".fields[" + std::to_string(i) + "].slug: must be non-empty");
        }
        if (!seen.insert(slug).second) {
            throw Error(ErrorCode::DuplicateId,
                        where + ": duplicate field slug '" + slug + "' in '" + e.id + "'");
        }
    }
}

}  // namespace

Catalog::Catalog(std::vector<FunctionEntry> triggers, std::vector<FunctionEntry> actions,
                 std::set<std::string> categories)
    : triggers_(std::move(triggers)), actions_(std::move(actions)), categories_(std::move(categories)) {
    for (FunctionKind kind : {FunctionKind::Trigger, FunctionKind::Action}) {
        const auto& list = entries(kind);
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = std::string(kind_name(kind)) + "s[" + std::to_string(i) + "]";
            validate_entry(list[i], kind, where);
            if (!categories_.count(list[i].category)) {
                throw Error(ErrorCode::Parse, where + ".category: '" + list[i].category +
                                                  "' is not a declared category");
            }
            if (!by_id_.emplace(list[i].id, std::make_pair(kind, i)).second) {
                throw Error(ErrorCode::DuplicateId, "duplicate id '" + list[i].id + "'");
            }
        }
    }
}

const std::vector<FunctionEntry>& Catalog::entries(FunctionKind kind) const {
    return kind == FunctionKind::Trigger ? triggers_ : actions_;
}

const FunctionEntry* Catalog::find(std::string_view id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return nullptr;
    return &entries(it->second.first)[it->second.second];
}

const FunctionEntry& Catalog::lookup(std::string_view id) const {
    const FunctionEntry* e = find(id);
    if (!e) throw Error(ErrorCode::NotFound, "no catalog entry with id '" + std::string(id) + "'");
    return *e;
}

const FunctionEntry& Catalog::lookup(std::string_view id, FunctionKind kind) const {
    const FunctionEntry& e = lookup(id);
    if (e.kind != kind) {
        throw Error(ErrorCode::KindMismatch, "entry '" + std::string(id) + "' is a " +
                                                 kind_name(e.kind) + ", not a " + kind_name(kind));
    }
    return e;
}

// ---------------------------------------------------------------------------
// JSON document

namespace {

class Reader {
public:
    explicit Reader(std::vector<std::string>* warnings) : warnings_(warnings) {}

    std::string string_at(const ordered_json& obj, const char* key, const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end()) throw Error(ErrorCode::Parse, path + "." + key + ": missing");
        if (!it->is_string()) throw Error(ErrorCode::Parse, path + "." + key + ": expected string");
        return it->get<std::string>();
    }

    std::optional<std::string> optional_string(const ordered_json& obj, const char* key,
                                               const std::string& path) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw Error(ErrorCode::Parse, path + "." + key + ": expected string");
        return it->get<std::string>();
    }

    const ordered_json& array_at(const ordered_json& obj, const char* key, const std::string& path,
                                 bool optional) {
        static const ordered_json kEmpty = ordered_json::array();
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (optional) return kEmpty;
            throw Error(ErrorCode::Parse, path + "." + key + ": missing");
        }
        if (!it->is_array()) throw Error(ErrorCode::Parse, path + "." + key + ": expected array");
        return *it;
    }

    DataType data_type(const ordered_json& obj, const std::string& path) {
        const std::string raw = string_at(obj, "data_type", path);
        bool known = false;
        DataType t = DataType::parse(raw, &known);
        if (!known && warnings_) {
            warnings_->push_back(path + ".data_type: unknown type '" + raw + "' kept as Other");
        }
        return t;
    }

    FunctionEntry entry(const ordered_json& obj, FunctionKind kind, const std::string& path) {
        if (!obj.is_object()) throw Error(ErrorCode::Parse, path + ": expected object");
        FunctionEntry e;
        e.kind = kind;
        e.id = string_at(obj, "id", path);
        e.function_name = string_at(obj, "function_name", path);
        e.channel = string_at(obj, "channel", path);
        e.category = string_at(obj, "category", path);
        e.description = string_at(obj, "description", path);

        const auto& fields = array_at(obj, "fields", path, true);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::string fp = path + ".fields[" + std::to_string(i) + "]";
            const auto& f = fields[i];
            if (!f.is_object()) throw Error(ErrorCode::Parse, fp + ": expected object");
            FieldSpec spec;
            spec.label = string_at(f, "label", fp);
            spec.slug = string_at(f, "slug", fp);
            auto req = f.find("required");
            if (req == f.end() || !req->is_boolean()) {
                throw Error(ErrorCode::Parse, fp + ".required: expected boolean");
            }
            spec.required = req->get<bool>();
            spec.helper_text = optional_string(f, "helper_text", fp);
            spec.data_type = data_type(f, fp);
            e.fields.push_back(std::move(spec));
        }

        if (obj.contains("ingredients") && kind == FunctionKind::Action) {
            const auto& ing = obj.at("ingredients");
            if (!ing.is_array() || !ing.empty()) {
                throw Error(ErrorCode::Parse, path + ": action entry '" + e.id + "' carries ingredients");
            }
        }
        if (kind == FunctionKind::Trigger) {
            const auto& ingredients = array_at(obj, "ingredients", path, true);
            for (std::size_t i = 0; i < ingredients.size(); ++i) {
                const std::string ip = path + ".ingredients[" + std::to_string(i) + "]";
                const auto& item = ingredients[i];
                if (!item.is_object()) throw Error(ErrorCode::Parse, ip + ": expected object");
                IngredientSpec spec;
                spec.slug = string_at(item, "slug", ip);
                spec.data_type = data_type(item, ip);
                spec.example = optional_string(item, "example", ip);
                spec.filter_code = optional_string(item, "filter_code", ip);
                e.ingredients.push_back(std::move(spec));
            }
        }
        return e;
    }

private:
    std::vector<std::string>* warnings_;
};

std::string position_context(std::string_view doc, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < doc.size(); ++i) {
        if (doc[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Catalog parse_catalog(std::string_view document, std::vector<std::string>* warnings) {
    ordered_json root;
    try {
        root = ordered_json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, "syntax error at " + position_context(document, e.byte) +
                                          ": " + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::Parse, "$: expected an object with triggers/actions");

    Reader reader(warnings);
    std::vector<FunctionEntry> triggers, actions;
    const auto& t = reader.array_at(root, "triggers", "$", false);
    for (std::size_t i = 0; i < t.size(); ++i) {
        triggers.push_back(reader.entry(t[i], FunctionKind::Trigger, "triggers[" + std::to_string(i) + "]"));
    }
    const auto& a = reader.array_at(root, "actions", "$", false);
    for (std::size_t i = 0; i < a.size(); ++i) {
        actions.push_back(reader.entry(a[i], FunctionKind::Action, "actions[" + std::to_string(i) + "]"));
    }
    if (triggers.empty()) throw Error(ErrorCode::InvalidArgument, "empty trigger catalog");
    if (actions.empty()) throw Error(ErrorCode::InvalidArgument, "empty action catalog");

    std::set<std::string> categories;
    if (root.contains("categories")) {
        const auto& c = reader.array_at(root, "categories", "$", false);
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!c[i].is_string()) {
                throw Error(ErrorCode::Parse, "categories[" + std::to_string(i) + "]: expected string");
            }
            categories.insert(c[i].get<std::string>());
        }
    } else {
        for (const auto* list : {&triggers, &actions}) {
            for (const auto& e : *list) categories.insert(e.category);
        }
    }
    return Catalog(std::move(triggers), std::move(actions), std::move(categories));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Catalog load_catalog(const std::string& path, std::vector<std::string>* warnings) {
    return parse_catalog(read_text_file(path), warnings);
}

std::string serialize_catalog(const Catalog& catalog) {
    ordered_json root = ordered_json::object();
    root["categories"] = ordered_json::array();
    for (const auto& c : catalog.categories()) root["categories"].push_back(c);
    for (FunctionKind kind : {FunctionKind::Trigger, FunctionKind::Action}) {
        ordered_json list = ordered_json::array();
        for (const auto& e : catalog.entries(kind)) {
            ordered_json obj;
            obj["id"] = e.id;
            obj["function_name"] = e.function_name;
            obj["channel"] = e.channel;
            obj["category"] = e.category;
            obj["description"] = e.description;
            obj["fields"] = ordered_json::array();
            for (const auto& f : e.fields) {
                ordered_json fj;
                fj["label"] = f.label;
                fj["slug"] = f.slug;
                fj["required"] = f.required;
                fj["data_type"] = f.data_type.to_string();
                if (f.helper_text) fj["helper_text"] = *f.helper_text;
                obj["fields"].push_back(std::move(fj));
            }
            if (kind == FunctionKind::Trigger) {
                obj["ingredients"] = ordered_json::array();
                for (const auto& i : e.ingredients) {
                    ordered_json ij;
                    ij["slug"] = i.slug;
                    ij["data_type"] = i.data_type.to_string();
                    if (i.example) ij["example"] = *i.example;
                    if (i.filter_code) ij["filter_code"] = *i.filter_code;
                    obj["ingredients"].push_back(std::move(ij));
                }
            }
            list.push_back(std::move(obj));
        }
        root[kind == FunctionKind::Trigger ? "triggers" : "actions"] = std::move(list);
    }
    return root.dump(2) + "\n";
}

std::string render_text(const FunctionEntry& entry) {
    std::string out;
    out.reserve(128);
    out += "[" + entry.channel + "] [" + entry.category + "] " + entry.function_name + ". " +
           entry.description + " || ";
    if (entry.kind == FunctionKind::Trigger) {
        // Trigger configuration fields are not part of the embedded schema.
        out += "Provides: ";
        for (std::size_t i = 0; i < entry.ingredients.size(); ++i) {
            if (i) out += ", ";
            out += entry.ingredients[i].slug + " (" + entry.ingredients[i].data_type.to_string() + ")";
        }
    } else {
        out += "Requires: ";
        for (std::size_t i = 0; i < entry.fields.size(); ++i) {
            if (i) out += ", ";
            out += entry.fields[i].label + (entry.fields[i].required ? " (required)" : " (optional)");
        }
    }
    return out;
}

}  // namespace tapsynth
