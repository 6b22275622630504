#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tapsynth/catalog.hpp"
#include "tapsynth/vector_index.hpp"

namespace tapsynth {

// Lowercase, split camelCase and any run of non-alphanumerics, join the
// tokens with single spaces. "StockName" -> "stock name".
std::string normalize_name(std::string_view raw);

// Equivalence classes of normalized names. Adding a group that shares a name
// with existing groups merges them, so no name ever sits in two groups.
class SynonymTable {
public:
    SynonymTable() = default;

    static SynonymTable defaults();
    static SynonymTable from_json(std::string_view document);
    static SynonymTable load(const std::string& path);

    void add_group(const std::vector<std::string>& names);
    bool equivalent(std::string_view a, std::string_view b) const;
    std::vector<std::set<std::string>> groups() const;

private:
    std::map<std::string, int, std::less<>> group_of_;
    int next_group_ = 0;
};

enum class MatchKind { None = 0, Direct = 1, Substring = 2, Semantic = 3 };

const char* match_kind_name(MatchKind kind) noexcept;

// Rules are tried in order: equal normalized names, contiguous token
// containment either way, then synonym equivalence on whole names or tokens.
MatchKind match_names(std::string_view ingredient_slug, std::string_view field_slug, const SynonymTable& syn);
MatchKind match_ingredient_field(const IngredientSpec& i, const FieldSpec& f, const SynonymTable& syn);

// Fraction of the action's required fields matched by at least one trigger
// ingredient; 1.0 when the action has no required fields.
double coverage(const FunctionEntry& trigger, const FunctionEntry& action, const SynonymTable& syn);

inline constexpr double kCoverageWeight = 0.7;
inline constexpr double kSimilarityWeight = 0.3;

struct PairCandidate {
    FunctionId trigger_id;
    FunctionId action_id;
    double coverage = 0.0;
    double sim_t = 0.0;  // clamped to [0, 1]
    double sim_a = 0.0;  // clamped to [0, 1]
    double score = 0.0;
    int queue_rank = 0;  // 1-based

    friend bool operator==(const PairCandidate&, const PairCandidate&) = default;
};

double pair_score(double coverage, double sim_t, double sim_a);

// Scores all |triggers| x |actions| pairs and orders them by score, then
// sim_t + sim_a, then (trigger_id, action_id).
std::vector<PairCandidate> rank_pairs(const std::vector<Candidate>& triggers,
                                      const std::vector<Candidate>& actions, const Catalog& catalog,
                                      const SynonymTable& syn);

}  // namespace tapsynth
