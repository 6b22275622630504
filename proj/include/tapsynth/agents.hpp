#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tapsynth/catalog.hpp"
#include "tapsynth/embedding.hpp"
#include "tapsynth/llm.hpp"
#include "tapsynth/pairing.hpp"
#include "tapsynth/vector_index.hpp"

namespace tapsynth {

enum class BindingSource { Ingredient, Static };

// Action field -> trigger ingredient slug, or -> literal.
struct Binding {
    std::string field_slug;
    BindingSource source = BindingSource::Static;
    std::string value;

    friend bool operator==(const Binding&, const Binding&) = default;
};

inline std::string placeholder_for(const std::string& slug) { return "TODO_" + slug; }

struct ReasoningEntry {
    std::string agent;
    std::string trace;

    friend bool operator==(const ReasoningEntry&, const ReasoningEntry&) = default;
};

// One agreement decision, kept so override soundness can be audited.
struct AgreementRecord {
    std::string agent;
    FunctionId rag_choice;
    FunctionId llm_choice;
    double ratio = 1.0;
    double threshold = 1.0;
    bool overrode = false;
    int attempt = 0;
};

struct SearchIntents {
    std::string trigger_query;
    std::string action_query;
};

struct SelectedTrigger {
    FunctionId trigger_id;
    std::vector<IngredientSpec> ingredients;
    std::map<std::string, std::string> field_values;
};

struct SelectedAction {
    FunctionId action_id;
    std::vector<Binding> bindings;
};

struct VerifierVerdict {
    double score = 0.0;
    double binding_quality = 0.0;
    double completeness = 0.0;
    double executability = 0.0;
    std::string critique;
    bool via_rule_fallback = false;
};

// Shared state all agents read and write. Within an attempt fields only get
// filled in; reset_for_attempt is the one place that clears them.
struct PipelineState {
    std::string query;
    std::vector<Candidate> trigger_candidates;
    std::vector<Candidate> action_candidates;
    std::optional<SearchIntents> search_intents;
    std::optional<SelectedTrigger> selected_trigger;
    std::optional<SelectedAction> bindings;
    std::optional<VerifierVerdict> verdict;
    bool llm_overrode_rag = false;
    int attempt_index = 0;
    std::vector<ReasoningEntry> reasoning_log;
    std::vector<AgreementRecord> agreements;
    std::vector<std::string> warnings;

    void log(std::string agent, std::string trace) {
        reasoning_log.push_back({std::move(agent), std::move(trace)});
    }
    void warn(std::string message);
    void reset_for_attempt();
};

struct AgentContext {
    const Catalog& catalog;
    const SynonymTable& synonyms;
    LlmConversation* llm = nullptr;  // nullptr: deterministic LLM-off behaviour
    int reasks = 1;                  // extra asks after an unparseable reply
    int backend_retries = 2;         // extra tries after Error(Backend)
};

// s_RAG(llm) / s_RAG(rag) over the candidate list. 1.0 when both picks are the
// same; when the denominator is not positive the ratio is 1.0 if the LLM pick
// scores at least as high, else 0.0.
double agreement_ratio(const std::vector<Candidate>& candidates, const FunctionId& rag_choice,
                       const FunctionId& llm_choice);

void analyze_intent(PipelineState& state, const AgentContext& ctx);

// `rag_choice` plays the retrieval top candidate (the current pair's trigger).
// With allow_override=false the LLM is not consulted.
void select_trigger(PipelineState& state, const AgentContext& ctx, const FunctionId& rag_choice,
                    double tau_t = 0.95, bool allow_override = true);

void select_action(PipelineState& state, const AgentContext& ctx, const FunctionId& rag_choice,
                   double tau_a = 0.80, bool allow_override = true);

// Required fields first, then optional ones, each in declaration order.
// Matched fields bind to the best ingredient (direct > substring > semantic,
// then declaration order); unmatched required fields take the proposed
// literal or TODO_<slug>; unmatched optional fields stay unbound.
std::vector<Binding> generate_bindings(const FunctionEntry& trigger, const FunctionEntry& action,
                                       const SynonymTable& syn,
                                       const std::map<std::string, std::string>& static_values = {});

void verify(PipelineState& state, const AgentContext& ctx);

// Mean of presence, required-field coverage and binding validity.
VerifierVerdict rule_based_verify(const PipelineState& state, const Catalog& catalog);

struct PipelineConfig {
    std::size_t k = 5;
    double tau_t = 0.95;
    double tau_a = 0.80;
    double theta_v = 0.5;
    bool reretrieve_with_intents = false;
};

void validate(const PipelineConfig& config);

struct AppletConfig {
    std::string query;
    FunctionId trigger_id;
    FunctionId action_id;
    std::map<std::string, std::string> trigger_field_values;
    std::vector<Binding> bindings;
    double verifier_score = 0.0;
    std::string verifier_critique;
    int attempts_used = 0;
    std::vector<ReasoningEntry> reasoning_log;
};

struct AttemptRecord {
    FunctionId pair_trigger_id;
    FunctionId pair_action_id;
    FunctionId trigger_id;
    FunctionId action_id;
    double score = 0.0;
    int queue_rank = 0;
    bool rag_retry = false;
};

struct PipelineOutcome {
    std::optional<AppletConfig> applet;
    std::vector<AttemptRecord> attempts;
    std::vector<PairCandidate> queue;
    // Accepted pair first (if any), then the remaining queue order.
    std::vector<std::pair<FunctionId, FunctionId>> ranked_pairs;
    PipelineState state;

    bool accepted() const { return applet.has_value(); }
};

struct Retriever {
    const VectorIndex& triggers;
    const VectorIndex& actions;
    const EmbeddingProvider& trigger_encoder;
    const EmbeddingProvider& action_encoder;

    std::vector<Candidate> triggers_for(const std::string& text, std::size_t k) const;
    std::vector<Candidate> actions_for(const std::string& text, std::size_t k) const;
};

// Stage 2 over given candidate lists.
PipelineOutcome run_stage2(const std::string& query, std::vector<Candidate> trigger_candidates,
                           std::vector<Candidate> action_candidates, const Catalog& catalog,
                           const SynonymTable& syn, const LlmBackend* backend, const PipelineConfig& config,
                           const Retriever* retriever = nullptr);

// Retrieval with the raw query, then Stage 2.
PipelineOutcome run_pipeline(const std::string& query, const Catalog& catalog, const Retriever& retriever,
                             const SynonymTable& syn, const LlmBackend* backend, const PipelineConfig& config);

nlohmann::ordered_json applet_to_json(const AppletConfig& applet);
AppletConfig applet_from_json(const nlohmann::json& j);
nlohmann::ordered_json outcome_to_json(const PipelineOutcome& outcome);

const char* binding_source_name(BindingSource source) noexcept;

}  // namespace tapsynth
