#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tapsynth/agents.hpp"
#include "tapsynth/catalog.hpp"

namespace tapsynth {

enum class Split { Gold, Noisy, OneShot };

const char* split_name(Split split) noexcept;
Split parse_split(std::string_view name);

struct GoldRecord {
    std::string query;
    FunctionId true_trigger_id;
    FunctionId true_action_id;
    std::set<std::string> reference_categories;
    Split split = Split::Gold;
};

struct PredictionRecord {
    std::string query;
    std::vector<std::pair<FunctionId, FunctionId>> ranked_pairs;  // top-1 is the system output
    std::optional<AppletConfig> applet;
    std::optional<int> trigger_rank;  // 1-based rank of the true trigger in the retrieved list
    std::optional<int> action_rank;
};

enum class Side { Trigger, Action, Joint };

// Retrieval ranks of the true items for one query; nullopt = not retrieved.
struct RankObservation {
    std::optional<int> trigger_rank;
    std::optional<int> action_rank;
};

// Fraction of observations whose true item(s) sit at rank <= K. Joint needs both.
double recall_at_k(std::span<const RankObservation> obs, int k, Side side);

// Mean of 1/rank for rank <= K, else 0. The Joint rank of an observation is
// the larger of its two ranks (the depth at which both items are found).
double mrr_at_k(std::span<const RankObservation> obs, int k, Side side);

// Compares function ids, or parent channels when `service_level` is set.
struct Comparator {
    const Catalog* catalog = nullptr;
    bool service_level = false;

    bool same(const FunctionId& predicted, const FunctionId& truth) const;
};

// 1.0 both correct, 0.5 exactly one, 0.0 neither (top-1 pair).
double goal_accuracy(const GoldRecord& gold, const PredictionRecord& pred, const Comparator& cmp = {});

struct Evaluated {
    const GoldRecord* gold;
    const PredictionRecord* prediction;
};

double trigger_accuracy(std::span<const Evaluated> records, const Comparator& cmp = {});
double action_accuracy(std::span<const Evaluated> records, const Comparator& cmp = {});
double joint_accuracy(std::span<const Evaluated> records, const Comparator& cmp = {});
double mean_goal_accuracy(std::span<const Evaluated> records, const Comparator& cmp = {});
double success_rate(std::span<const Evaluated> records, const Comparator& cmp = {});

// Schema-grounded claims: two per ingredient binding, one per static binding,
// one per trigger field value. 1.0 when there are no claims.
double faithfulness(const AppletConfig& applet, const Catalog& catalog);

// Fraction of applets whose trigger and action categories both lie in the
// reference categories. Records lacking an applet or reference categories
// are skipped; skipped reference-less records are reported in `warnings`.
// nullopt when nothing qualifies.
std::optional<double> topic_adherence(std::span<const Evaluated> records, const Catalog& catalog,
                                      std::vector<std::string>* warnings = nullptr);

struct SideValues {
    double trigger = 0.0;
    double action = 0.0;
    double joint = 0.0;
};

struct SplitMetrics {
    std::size_t count = 0;
    std::map<int, SideValues> recall_at;
    std::map<int, SideValues> mrr_at;
    std::optional<double> pair_mrr;  // end-to-end MRR over ranked pairs at pair_mrr_k
    double trigger_acc = 0.0;
    double action_acc = 0.0;
    double joint_acc = 0.0;
    double goal_acc = 0.0;
    double success_rate = 0.0;
    std::optional<double> faithfulness;
    std::optional<double> topic_adherence;
};

struct MetricsReport {
    SplitMetrics overall;
    std::map<std::string, SplitMetrics> per_split;
    int pair_mrr_k = 3;
    bool internal_error = false;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
};

struct EvalOptions {
    std::vector<int> ks{1, 3, 5};
    int pair_mrr_k = 3;
    bool service_level = false;
};

// Joins predictions to golds by position (queries must agree).
MetricsReport evaluate_run(std::span<const PredictionRecord> predictions, std::span<const GoldRecord> golds,
                           const Catalog& catalog, const EvalOptions& options = {});

// success_rate >= goal >= joint; appends violations and returns false when broken.
bool check_ordering(const SplitMetrics& m, const std::string& label, std::vector<std::string>* violations);

std::vector<GoldRecord> parse_gold_jsonl(std::string_view text);
std::vector<PredictionRecord> parse_predictions_jsonl(std::string_view text);
nlohmann::ordered_json prediction_to_json(const PredictionRecord& p);
nlohmann::ordered_json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
std::string report_table(const MetricsReport& report);

}  // namespace tapsynth
