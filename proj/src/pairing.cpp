#include "tapsynth/pairing.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "tapsynth/error.hpp"

namespace tapsynth {

std::string normalize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size() + 4);
    auto is_upper = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
    auto is_lower = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
    auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    auto separate = [&out] {
        if (!out.empty() && out.back() != ' ') out.push_back(' ');
    };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (!std::isalnum(static_cast<unsigned char>(c))) {
            separate();
            continue;
        }
        if (is_upper(c) && i > 0) {
            const char prev = raw[i - 1];
            const bool after_lower = is_lower(prev) || is_digit(prev);
            // "URLPath": split before the last capital of an acronym run.
            const bool acronym_end = is_upper(prev) && i + 1 < raw.size() && is_lower(raw[i + 1]);
            if (after_lower || acronym_end) separate();
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view normalized) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (start < normalized.size()) {
        auto end = normalized.find(' ', start);
        if (end == std::string_view::npos) end = normalized.size();
        if (end > start) tokens.push_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

bool contains_run(const std::vector<std::string_view>& hay, const std::vector<std::string_view>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

// ---------------------------------------------------------------------------

SynonymTable SynonymTable::defaults() {
    SynonymTable t;
    t.add_group({"message", "body", "content", "text"});
    t.add_group({"name", "title", "label"});
    t.add_group({"url", "link", "address"});
    t.add_group({"time", "date", "timestamp"});
    t.add_group({"image", "photo", "picture"});
    return t;
}

void SynonymTable::add_group(const std::vector<std::string>& names) {
    std::vector<std::string> normalized;
    std::set<int> absorbed;
    for (const auto& n : names) {
        auto norm = normalize_name(n);
        if (norm.empty()) continue;
        if (auto it = group_of_.find(norm); it != group_of_.end()) absorbed.insert(it->second);
        normalized.push_back(std::move(norm));
    }
    if (normalized.empty()) return;
    const int id = next_group_++;
    for (auto& [name, group] : group_of_) {
        if (absorbed.count(group)) group = id;
    }
    for (auto& n : normalized) group_of_[n] = id;
}

bool SynonymTable::equivalent(std::string_view a, std::string_view b) const {
    auto ia = group_of_.find(a);
    if (ia == group_of_.end()) return false;
    auto ib = group_of_.find(b);
    return ib != group_of_.end() && ia->second == ib->second;
}

std::vector<std::set<std::string>> SynonymTable::groups() const {
    std::map<int, std::set<std::string>> by_id;
    for (const auto& [name, group] : group_of_) by_id[group].insert(name);
    std::vector<std::set<std::string>> out;
    for (auto& [id, members] : by_id) out.push_back(std::move(members));
    std::sort(out.begin(), out.end());
    return out;
}

SynonymTable SynonymTable::from_json(std::string_view document) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(document.begin(), document.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("synonym table: ") + e.what());
    }
    const nlohmann::json* groups = &root;
    if (root.is_object()) {
        if (!root.contains("groups")) throw Error(ErrorCode::Parse, "synonym table: missing 'groups'");
        groups = &root["groups"];
    }
    if (!groups->is_array()) throw Error(ErrorCode::Parse, "synonym table: 'groups' must be an array");
    SynonymTable t;
    for (std::size_t i = 0; i < groups->size(); ++i) {
        const auto& g = (*groups)[i];
        if (!g.is_array()) {
            throw Error(ErrorCode::Parse, "synonym table: groups[" + std::to_string(i) + "] must be an array");
        }
        std::vector<std::string> names;
        for (const auto& n : g) {
            if (!n.is_string()) {
                throw Error(ErrorCode::Parse, "synonym table: groups[" + std::to_string(i) + "] holds a non-string");
            }
            names.push_back(n.get<std::string>());
        }
        t.add_group(names);
    }
    return t;
}

SynonymTable SynonymTable::load(const std::string& path) { return from_json(read_text_file(path)); }

// ---------------------------------------------------------------------------

const char* match_kind_name(MatchKind kind) noexcept {
    switch (kind) {
        case MatchKind::None: return "none";
        case MatchKind::Direct: return "direct";
        case MatchKind::Substring: return "substring";
        case MatchKind::Semantic: return "semantic";
    }
    return "none";
}

MatchKind match_names(std::string_view ingredient_slug, std::string_view field_slug, const SynonymTable& syn) {
    const std::string a = normalize_name(ingredient_slug);
    const std::string b = normalize_name(field_slug);
    if (a.empty() || b.empty()) return MatchKind::None;
    if (a == b) return MatchKind::Direct;

    const auto ta = split_tokens(a);
    const auto tb = split_tokens(b);
    if (contains_run(ta, tb) || contains_run(tb, ta)) return MatchKind::Substring;

    auto with_whole = [](std::vector<std::string_view> tokens, std::string_view whole) {
        if (tokens.size() > 1) tokens.push_back(whole);
        return tokens;
    };
    for (auto x : with_whole(ta, a)) {
        for (auto y : with_whole(tb, b)) {
            if (syn.equivalent(x, y)) return MatchKind::Semantic;
        }
    }
    return MatchKind::None;
}

MatchKind match_ingredient_field(const IngredientSpec& i, const FieldSpec& f, const SynonymTable& syn) {
    return match_names(i.slug, f.slug, syn);
}

double coverage(const FunctionEntry& trigger, const FunctionEntry& action, const SynonymTable& syn) {
    std::size_t required = 0, satisfied = 0;
    for (const auto& f : action.fields) {
        if (!f.required) continue;
        ++required;
        const bool hit = std::any_of(trigger.ingredients.begin(), trigger.ingredients.end(),
                                     [&](const IngredientSpec& i) {
                                         return match_ingredient_field(i, f, syn) != MatchKind::None;
                                     });
        if (hit) ++satisfied;
    }
    if (required == 0) return 1.0;
    return static_cast<double>(satisfied) / static_cast<double>(required);
}

double pair_score(double coverage, double sim_t, double sim_a) {
    return kCoverageWeight * coverage + kSimilarityWeight * (sim_t + sim_a) / 2.0;
}

std::vector<PairCandidate> rank_pairs(const std::vector<Candidate>& triggers,
                                      const std::vector<Candidate>& actions, const Catalog& catalog,
                                      const SynonymTable& syn) {
    if (triggers.empty() || actions.empty()) {
        throw Error(ErrorCode::InvalidArgument, "rank_pairs needs non-empty trigger and action candidates");
    }
    std::vector<const FunctionEntry*> t_entries, a_entries;
    for (const auto& c : triggers) t_entries.push_back(&catalog.lookup(c.entry_id, FunctionKind::Trigger));
    for (const auto& c : actions) a_entries.push_back(&catalog.lookup(c.entry_id, FunctionKind::Action));

    std::vector<PairCandidate> pairs;
    pairs.reserve(triggers.size() * actions.size());
    for (std::size_t i = 0; i < triggers.size(); ++i) {
        for (std::size_t j = 0; j < actions.size(); ++j) {
            PairCandidate p;
            p.trigger_id = triggers[i].entry_id;
            p.action_id = actions[j].entry_id;
            p.coverage = coverage(*t_entries[i], *a_entries[j], syn);
            p.sim_t = std::clamp(triggers[i].similarity, 0.0, 1.0);
            p.sim_a = std::clamp(actions[j].similarity, 0.0, 1.0);
            p.score = pair_score(p.coverage, p.sim_t, p.sim_a);
            pairs.push_back(std::move(p));
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairCandidate& x, const PairCandidate& y) {
        if (x.score != y.score) return x.score > y.score;
        const double sx = x.sim_t + x.sim_a, sy = y.sim_t + y.sim_a;
        if (sx != sy) return sx > sy;
        if (x.trigger_id != y.trigger_id) return x.trigger_id < y.trigger_id;
        return x.action_id < y.action_id;
    });
    for (std::size_t r = 0; r < pairs.size(); ++r) pairs[r].queue_rank = static_cast<int>(r + 1);
    return pairs;
}

}  // namespace tapsynth
