#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tapsynth {

using FunctionId = std::string;

enum class FunctionKind { Trigger, Action };

const char* kind_name(FunctionKind kind) noexcept;
FunctionKind parse_kind(std::string_view name);

// Value type of an ingredient or field. Anything outside the known set is
// carried through verbatim as Other.
struct DataType {
    enum class Tag { String, Number, Boolean, Date, DateWithTime, Url, ImageUrl, Other };

    Tag tag = Tag::String;
    std::string other_name;

    static DataType parse(std::string_view text, bool* recognized = nullptr);
    std::string to_string() const;

    friend bool operator==(const DataType&, const DataType&) = default;
};

struct IngredientSpec {
    std::string slug;
    DataType data_type;
    std::optional<std::string> example;
    std::optional<std::string> filter_code;

    friend bool operator==(const IngredientSpec&, const IngredientSpec&) = default;
};

struct FieldSpec {
    std::string label;
    std::string slug;
    bool required = false;
    std::optional<std::string> helper_text;
    DataType data_type;

    friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

// A trigger or action. Trigger fields are configuration inputs and
// ingredients are its outputs; actions never carry ingredients.
struct FunctionEntry {
    FunctionId id;
    FunctionKind kind = FunctionKind::Trigger;
    std::string function_name;
    std::string channel;
    std::string category;
    std::string description;
    std::vector<IngredientSpec> ingredients;
    std::vector<FieldSpec> fields;

    const IngredientSpec* find_ingredient(std::string_view slug) const;
    const FieldSpec* find_field(std::string_view slug) const;

    friend bool operator==(const FunctionEntry&, const FunctionEntry&) = default;
};

// Immutable after construction; safe to share across threads.
class Catalog {
public:
    Catalog() = default;

    // Validates every invariant except non-emptiness, which is checked by
    // parse_catalog and by index construction.
    Catalog(std::vector<FunctionEntry> triggers, std::vector<FunctionEntry> actions,
            std::set<std::string> categories);

    const std::vector<FunctionEntry>& triggers() const { return triggers_; }
    const std::vector<FunctionEntry>& actions() const { return actions_; }
    const std::vector<FunctionEntry>& entries(FunctionKind kind) const;
    const std::set<std::string>& categories() const { return categories_; }
    std::size_t size() const { return triggers_.size() + actions_.size(); }

    const FunctionEntry* find(std::string_view id) const;
    const FunctionEntry& lookup(std::string_view id) const;
    const FunctionEntry& lookup(std::string_view id, FunctionKind kind) const;

    friend bool operator==(const Catalog& a, const Catalog& b) {
        return a.triggers_ == b.triggers_ && a.actions_ == b.actions_ &&
               a.categories_ == b.categories_;
    }

private:
    std::vector<FunctionEntry> triggers_;
    std::vector<FunctionEntry> actions_;
    std::set<std::string> categories_;
    std::map<std::string, std::pair<FunctionKind, std::size_t>, std::less<>> by_id_;
};

// Parses the JSON catalog document. Unknown data types become Other(name)
// and are reported through `warnings` when provided.
Catalog parse_catalog(std::string_view document, std::vector<std::string>* warnings = nullptr);
Catalog load_catalog(const std::string& path, std::vector<std::string>* warnings = nullptr);
std::string serialize_catalog(const Catalog& catalog);

// "[channel] [category] name. desc || Provides: a (Type), ..." for triggers,
// "... || Requires: f (required), g (optional)" for actions.
std::string render_text(const FunctionEntry& entry);

std::string read_text_file(const std::string& path);

}  // namespace tapsynth
