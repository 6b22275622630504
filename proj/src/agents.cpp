#include "tapsynth/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "tapsynth/error.hpp"

namespace tapsynth {

namespace {

std::string fmt3(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

bool is_unit(const nlohmann::json& j) {
    return j.is_number() && j.get<double>() >= 0.0 && j.get<double>() <= 1.0;
}

LlmRequest make_request(const std::string& agent, const std::map<std::string, std::string>& vars) {
    const PromptTemplate& t = prompt_template(agent);
    return {agent, fill_template(t.system, vars), fill_template(t.user, vars), t.schema};
}

std::string call_backend(const AgentContext& ctx, const LlmRequest& req) {
    for (int attempt = 0;; ++attempt) {
        try {
            return ctx.llm->complete(req);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Backend || attempt >= ctx.backend_retries) throw;
        }
    }
}

// Asks once plus ctx.reasks more times; returns nullopt when no reply parses
// and passes `valid`.
std::optional<AgentResponse> consult(PipelineState& state, const AgentContext& ctx, LlmRequest req,
                                     const std::function<bool(const nlohmann::json&)>& valid) {
    for (int ask = 0; ask <= ctx.reasks; ++ask) {
        const std::string reply = call_backend(ctx, req);
        auto parsed = parse_agent_response(reply);
        if (parsed && valid(parsed->decision)) return parsed;
        state.warn(req.agent + ": reply " + std::to_string(ask + 1) + " did not match the response schema");
        if (ask == 0) {
            req.user_prompt += "\n\nYour previous reply could not be parsed. Reply with THINKING, then "
                               "DECISION: and one JSON object matching the schema.";
        }
    }
    return std::nullopt;
}

std::string describe_candidates(const std::vector<Candidate>& candidates, const Catalog& catalog,
                                const std::map<FunctionId, double>* coverage) {
    std::string out;
    for (const auto& c : candidates) {
        out += "- id=" + c.entry_id + " | similarity=" + fmt3(c.similarity);
        if (coverage) out += " | coverage=" + fmt3(coverage->at(c.entry_id));
        out += " | " + render_text(catalog.lookup(c.entry_id)) + "\n";
    }
    return out;
}

std::string ingredient_list(const std::vector<IngredientSpec>& ingredients) {
    std::string out = "[";
    for (std::size_t i = 0; i < ingredients.size(); ++i) {
        if (i) out += ", ";
        out += ingredients[i].slug + " (" + ingredients[i].data_type.to_string() + ")";
    }
    return out + "]";
}

const Candidate* find_candidate(const std::vector<Candidate>& candidates, const FunctionId& id) {
    for (const auto& c : candidates) {
        if (c.entry_id == id) return &c;
    }
    return nullptr;
}

bool selected_id_valid(const nlohmann::json& d) {
    return d.contains("selected_id") && d["selected_id"].is_string() && !d["selected_id"].get<std::string>().empty();
}

// Shared agreement logic of both selectors. Returns the final choice.
FunctionId agree(PipelineState& state, const AgentContext& ctx, const std::string& agent,
                 const std::vector<Candidate>& candidates, const FunctionId& rag_choice, double tau,
                 bool allow_override, const LlmRequest& request) {
    AgreementRecord record{agent, rag_choice, rag_choice, 1.0, tau, false, state.attempt_index};
    FunctionId chosen = rag_choice;

    if (!ctx.llm || !allow_override) {
        state.log(agent, std::string(ctx.llm ? "RAG retry" : "LLM off") + ": keeping retrieval choice " + rag_choice);
        state.agreements.push_back(record);
        return chosen;
    }

    auto reply = consult(state, ctx, request, selected_id_valid);
    if (!reply) {
        state.warn(agent + ": no usable LLM decision, keeping retrieval choice " + rag_choice);
        state.log(agent, "Unparseable LLM reply; keeping retrieval choice " + rag_choice);
        state.agreements.push_back(record);
        return chosen;
    }

    const FunctionId llm_choice = reply->decision["selected_id"].get<std::string>();
    record.llm_choice = llm_choice;
    std::string trace = reply->thinking.empty() ? std::string() : reply->thinking + "\n";
    if (!find_candidate(candidates, llm_choice)) {
        record.ratio = 0.0;
        state.warn(agent + ": LLM picked '" + llm_choice + "' which is not a candidate; keeping " + rag_choice);
        trace += "LLM picked " + llm_choice + " outside the candidate list; keeping " + rag_choice;
    } else {
        record.ratio = agreement_ratio(candidates, rag_choice, llm_choice);
        if (llm_choice == rag_choice) {
            trace += "LLM agrees with retrieval on " + rag_choice;
        } else if (record.ratio >= tau) {
            record.overrode = true;
            chosen = llm_choice;
            trace += "LLM picked " + llm_choice + " over " + rag_choice + "; agreement ratio " + fmt3(record.ratio) +
                     " >= " + fmt3(tau) + ", override accepted";
        } else {
            trace += "LLM picked " + llm_choice + " over " + rag_choice + "; agreement ratio " + fmt3(record.ratio) +
                     " < " + fmt3(tau) + ", keeping " + rag_choice;
        }
    }
    state.log(agent, std::move(trace));
    if (record.overrode) state.llm_overrode_rag = true;
    state.agreements.push_back(record);
    return chosen;
}

struct StaticProposals {
    std::map<std::string, std::string> action_fields;
    std::map<std::string, std::string> trigger_fields;
};

StaticProposals propose_static_values(PipelineState& state, const AgentContext& ctx, const FunctionEntry& trigger,
                                      const FunctionEntry& action, const std::vector<std::string>& unbound) {
    StaticProposals out;
    if (!ctx.llm || (unbound.empty() && trigger.fields.empty())) return out;

    auto join_fields = [](const FunctionEntry& e, const std::vector<std::string>* only) {
        std::string s;
        for (const auto& f : e.fields) {
            if (only && std::find(only->begin(), only->end(), f.slug) == only->end()) continue;
            if (!s.empty()) s += ", ";
            s += f.slug + " (" + f.label + (f.required ? ", required" : ", optional") + ")";
        }
        return s.empty() ? std::string("none") : s;
    };
    const auto request = make_request("binder", {{"query", state.query},
                                                 {"trigger", render_text(trigger)},
                                                 {"trigger_fields", join_fields(trigger, nullptr)},
                                                 {"action", render_text(action)},
                                                 {"action_fields", join_fields(action, &unbound)}});
    auto string_map = [](const nlohmann::json& d, const char* key) {
        if (!d.contains(key)) return true;
        if (!d[key].is_object()) return false;
        return std::all_of(d[key].begin(), d[key].end(), [](const nlohmann::json& v) { return v.is_string(); });
    };
    auto reply = consult(state, ctx, request, [&](const nlohmann::json& d) {
        return string_map(d, "static_values") && string_map(d, "trigger_field_values");
    });
    if (!reply) {
        state.warn("binder: no usable static values, using placeholders");
        return out;
    }
    if (reply->decision.contains("static_values")) {
        for (const auto& [slug, v] : reply->decision["static_values"].items()) {
            if (std::find(unbound.begin(), unbound.end(), slug) == unbound.end()) continue;
            if (!v.get<std::string>().empty()) out.action_fields[slug] = v.get<std::string>();
        }
    }
    if (reply->decision.contains("trigger_field_values")) {
        for (const auto& [slug, v] : reply->decision["trigger_field_values"].items()) {
            if (trigger.find_field(slug) && !v.get<std::string>().empty()) out.trigger_fields[slug] = v.get<std::string>();
        }
    }
    if (!reply->thinking.empty()) state.log("binder", reply->thinking);
    return out;
}

std::string describe_bindings(const std::vector<Binding>& bindings) {
    std::string out;
    for (const auto& b : bindings) {
        out += "- " + b.field_slug + " <- " + binding_source_name(b.source) + " \"" + b.value + "\"\n";
    }
    return out.empty() ? "(none)\n" : out;
}

}  // namespace

const char* binding_source_name(BindingSource source) noexcept {
    return source == BindingSource::Ingredient ? "ingredient" : "static";
}

void PipelineState::warn(std::string message) { warnings.push_back(std::move(message)); }

void PipelineState::reset_for_attempt() {
    selected_trigger.reset();
    bindings.reset();
    verdict.reset();
    llm_overrode_rag = false;
    ++attempt_index;
}

double agreement_ratio(const std::vector<Candidate>& candidates, const FunctionId& rag_choice,
                       const FunctionId& llm_choice) {
    const Candidate* rag = find_candidate(candidates, rag_choice);
    const Candidate* llm = find_candidate(candidates, llm_choice);
    if (!rag || !llm) {
        throw Error(ErrorCode::NotFound, "agreement ratio needs both '" + rag_choice + "' and '" + llm_choice +
                                             "' in the candidate list");
    }
    if (rag_choice == llm_choice) return 1.0;
    if (rag->similarity <= 0.0) return llm->similarity >= rag->similarity ? 1.0 : 0.0;
    return llm->similarity / rag->similarity;
}

void analyze_intent(PipelineState& state, const AgentContext& ctx) {
    if (state.query.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "query must be non-empty");
    }
    if (!ctx.llm) {
        state.search_intents = SearchIntents{state.query, state.query};
        state.log("analyzer", "LLM off: trigger and action searches both use the raw query");
        return;
    }
    auto non_empty = [](const nlohmann::json& d, const char* key) {
        return d.contains(key) && d[key].is_string() && !d[key].get<std::string>().empty();
    };
    auto reply = consult(state, ctx, make_request("analyzer", {{"query", state.query}}), [&](const nlohmann::json& d) {
        return non_empty(d, "trigger_query") && non_empty(d, "action_query");
    });
    if (!reply) {
        state.warn("analyzer: falling back to the raw query for both intents");
        state.search_intents = SearchIntents{state.query, state.query};
        state.log("analyzer", "Unparseable LLM reply; trigger and action searches use the raw query");
        return;
    }
    state.search_intents = SearchIntents{reply->decision["trigger_query"].get<std::string>(),
                                         reply->decision["action_query"].get<std::string>()};
    std::string trace = reply->thinking.empty() ? std::string() : reply->thinking + "\n";
    trace += "Trigger intent: \"" + state.search_intents->trigger_query + "\"; action intent: \"" +
             state.search_intents->action_query + "\"";
    state.log("analyzer", std::move(trace));
}

void select_trigger(PipelineState& state, const AgentContext& ctx, const FunctionId& rag_choice, double tau_t,
                    bool allow_override) {
    if (state.trigger_candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no trigger candidates");
    if (!find_candidate(state.trigger_candidates, rag_choice)) {
        throw Error(ErrorCode::NotFound, "trigger '" + rag_choice + "' is not among the candidates");
    }
    ctx.catalog.lookup(rag_choice, FunctionKind::Trigger);

    LlmRequest request;
    if (ctx.llm && allow_override) {
        const std::string intent = state.search_intents ? state.search_intents->trigger_query : state.query;
        request = make_request("trigger_selector",
                               {{"query", state.query},
                                {"trigger_intent", intent},
                                {"candidates", describe_candidates(state.trigger_candidates, ctx.catalog, nullptr)}});
    }
    const FunctionId chosen =
        agree(state, ctx, "trigger_selector", state.trigger_candidates, rag_choice, tau_t, allow_override, request);

    const FunctionEntry& entry = ctx.catalog.lookup(chosen, FunctionKind::Trigger);
    state.selected_trigger = SelectedTrigger{chosen, entry.ingredients, {}};
    state.log("trigger_selector", "Selected " + chosen + "; ingredients " + ingredient_list(entry.ingredients));
}

void select_action(PipelineState& state, const AgentContext& ctx, const FunctionId& rag_choice, double tau_a,
                   bool allow_override) {
    if (!state.selected_trigger) throw Error(ErrorCode::InvalidArgument, "select_action requires a selected trigger");
    if (state.action_candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no action candidates");
    if (!find_candidate(state.action_candidates, rag_choice)) {
        throw Error(ErrorCode::NotFound, "action '" + rag_choice + "' is not among the candidates");
    }
    const FunctionEntry& trigger = ctx.catalog.lookup(state.selected_trigger->trigger_id, FunctionKind::Trigger);

    std::map<FunctionId, double> coverage_by_id;
    for (const auto& c : state.action_candidates) {
        coverage_by_id[c.entry_id] = coverage(trigger, ctx.catalog.lookup(c.entry_id, FunctionKind::Action), ctx.synonyms);
    }

    LlmRequest request;
    if (ctx.llm && allow_override) {
        const std::string intent = state.search_intents ? state.search_intents->action_query : state.query;
        request = make_request(
            "action_selector",
            {{"query", state.query},
             {"action_intent", intent},
             {"trigger", render_text(trigger)},
             {"ingredients", ingredient_list(trigger.ingredients)},
             {"candidates", describe_candidates(state.action_candidates, ctx.catalog, &coverage_by_id)}});
    }
    const FunctionId chosen =
        agree(state, ctx, "action_selector", state.action_candidates, rag_choice, tau_a, allow_override, request);
    const FunctionEntry& action = ctx.catalog.lookup(chosen, FunctionKind::Action);

    std::vector<std::string> unbound;
    for (const auto& f : action.fields) {
        if (!f.required) continue;
        const bool matched = std::any_of(trigger.ingredients.begin(), trigger.ingredients.end(), [&](const auto& i) {
            return match_ingredient_field(i, f, ctx.synonyms) != MatchKind::None;
        });
        if (!matched) unbound.push_back(f.slug);
    }
    const StaticProposals proposals = propose_static_values(state, ctx, trigger, action, unbound);

    auto bindings = generate_bindings(trigger, action, ctx.synonyms, proposals.action_fields);
    for (const auto& f : trigger.fields) {
        if (auto it = proposals.trigger_fields.find(f.slug); it != proposals.trigger_fields.end()) {
            state.selected_trigger->field_values[f.slug] = it->second;
        } else if (f.required) {
            state.selected_trigger->field_values[f.slug] = placeholder_for(f.slug);
        }
    }
    state.log("action_selector", "Selected " + chosen + " (coverage " + fmt3(coverage_by_id.at(chosen)) +
                                     "); bindings:\n" + describe_bindings(bindings));
    state.bindings = SelectedAction{chosen, std::move(bindings)};
}

std::vector<Binding> generate_bindings(const FunctionEntry& trigger, const FunctionEntry& action,
                                       const SynonymTable& syn, const std::map<std::string, std::string>& static_values) {
    std::vector<const FieldSpec*> order;
    for (const auto& f : action.fields) {
        if (f.required) order.push_back(&f);
    }
    for (const auto& f : action.fields) {
        if (!f.required) order.push_back(&f);
    }

    std::vector<Binding> out;
    for (const FieldSpec* f : order) {
        const IngredientSpec* best = nullptr;
        MatchKind best_kind = MatchKind::None;
        for (const auto& i : trigger.ingredients) {
            const MatchKind k = match_ingredient_field(i, *f, syn);
            if (k == MatchKind::None) continue;
            if (!best || static_cast<int>(k) < static_cast<int>(best_kind)) {
                best = &i;
                best_kind = k;
            }
        }
        if (best) {
            out.push_back({f->slug, BindingSource::Ingredient, best->slug});
        } else if (f->required) {
            auto it = static_values.find(f->slug);
            const bool proposed = it != static_values.end() && !it->second.empty();
            out.push_back({f->slug, BindingSource::Static, proposed ? it->second : placeholder_for(f->slug)});
        }
    }
    return out;
}

VerifierVerdict rule_based_verify(const PipelineState& state, const Catalog& catalog) {
    VerifierVerdict v;
    v.via_rule_fallback = true;
    const FunctionEntry* trigger = state.selected_trigger ? catalog.find(state.selected_trigger->trigger_id) : nullptr;
    const FunctionEntry* action = state.bindings ? catalog.find(state.bindings->action_id) : nullptr;
    if (trigger && trigger->kind != FunctionKind::Trigger) trigger = nullptr;
    if (action && action->kind != FunctionKind::Action) action = nullptr;

    std::vector<std::string> issues;
    v.executability = (trigger && action) ? 1.0 : 0.0;
    if (!trigger) issues.push_back("no valid trigger selected");
    if (!action) issues.push_back("no valid action selected");

    if (action) {
        const auto& bindings = state.bindings->bindings;
        std::size_t required = 0, bound = 0;
        for (const auto& f : action->fields) {
            if (!f.required) continue;
            ++required;
            const bool has = std::any_of(bindings.begin(), bindings.end(),
                                         [&](const Binding& b) { return b.field_slug == f.slug; });
            if (has) {
                ++bound;
            } else {
                issues.push_back("required field '" + f.slug + "' is unbound");
            }
        }
        v.completeness = required == 0 ? 1.0 : static_cast<double>(bound) / static_cast<double>(required);

        if (bindings.empty()) {
            v.binding_quality = required == 0 ? 1.0 : 0.0;
        } else {
            std::size_t valid = 0;
            for (const auto& b : bindings) {
                bool ok = action->find_field(b.field_slug) != nullptr;
                if (ok && b.source == BindingSource::Ingredient) ok = trigger && trigger->find_ingredient(b.value);
                if (ok) {
                    ++valid;
                } else {
                    issues.push_back("binding for '" + b.field_slug + "' references an unknown slug");
                }
            }
            v.binding_quality = static_cast<double>(valid) / static_cast<double>(bindings.size());
        }
    }
    v.score = (v.executability + v.completeness + v.binding_quality) / 3.0;
    if (issues.empty()) {
        v.critique = "Rule check: trigger and action present, all required fields bound, all bindings resolve.";
    } else {
        v.critique = "Rule check: ";
        for (std::size_t i = 0; i < issues.size(); ++i) v.critique += (i ? "; " : "") + issues[i];
        v.critique += ".";
    }
    return v;
}

void verify(PipelineState& state, const AgentContext& ctx) {
    if (!state.bindings || !state.selected_trigger) {
        throw Error(ErrorCode::InvalidArgument, "verify requires a selected trigger and bindings");
    }
    std::optional<AgentResponse> reply;
    if (ctx.llm) {
        const FunctionEntry& trigger = ctx.catalog.lookup(state.selected_trigger->trigger_id);
        const FunctionEntry& action = ctx.catalog.lookup(state.bindings->action_id);
        auto request = make_request("verifier", {{"query", state.query},
                                                 {"trigger", render_text(trigger)},
                                                 {"action", render_text(action)},
                                                 {"bindings", describe_bindings(state.bindings->bindings)}});
        try {
            reply = consult(state, ctx, request, [](const nlohmann::json& d) {
                if (!d.contains("score") || !is_unit(d["score"])) return false;
                for (const char* key : {"binding_quality", "completeness", "executability"}) {
                    if (d.contains(key) && !is_unit(d[key])) return false;
                }
                return !d.contains("critique") || d["critique"].is_string();
            });
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Backend) throw;
            state.warn(std::string("verifier: backend unavailable (") + e.what() + "), using rule check");
        }
    }
    if (!reply) {
        state.verdict = rule_based_verify(state, ctx.catalog);
        state.log("verifier", state.verdict->critique + " Score " + fmt3(state.verdict->score) + ".");
        return;
    }
    const auto& d = reply->decision;
    VerifierVerdict v;
    v.score = d["score"].get<double>();
    v.binding_quality = d.value("binding_quality", v.score);
    v.completeness = d.value("completeness", v.score);
    v.executability = d.value("executability", v.score);
    v.critique = d.value("critique", std::string());
    state.verdict = v;
    std::string trace = reply->thinking.empty() ? std::string() : reply->thinking + "\n";
    state.log("verifier", trace + "Score " + fmt3(v.score) + ". " + v.critique);
}

// ---------------------------------------------------------------------------

void validate(const PipelineConfig& c) {
    if (c.k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
    if (!(c.tau_t > 0.0 && c.tau_t <= 1.0)) throw Error(ErrorCode::Config, "tau_t must lie in (0, 1]");
    if (!(c.tau_a > 0.0 && c.tau_a <= 1.0)) throw Error(ErrorCode::Config, "tau_a must lie in (0, 1]");
    if (!(c.theta_v >= 0.0 && c.theta_v <= 1.0)) throw Error(ErrorCode::Config, "theta_v must lie in [0, 1]");
}

std::vector<Candidate> Retriever::triggers_for(const std::string& text, std::size_t k) const {
    return search(triggers, trigger_encoder.embed(text, EmbedRole::Query), k);
}

std::vector<Candidate> Retriever::actions_for(const std::string& text, std::size_t k) const {
    return search(actions, action_encoder.embed(text, EmbedRole::Query), k);
}

PipelineOutcome run_stage2(const std::string& query, std::vector<Candidate> trigger_candidates,
                           std::vector<Candidate> action_candidates, const Catalog& catalog, const SynonymTable& syn,
                           const LlmBackend* backend, const PipelineConfig& config, const Retriever* retriever) {
    validate(config);
    PipelineOutcome outcome;
    PipelineState& state = outcome.state;
    state.query = query;
    state.trigger_candidates = std::move(trigger_candidates);
    state.action_candidates = std::move(action_candidates);

    std::unique_ptr<LlmConversation> conversation = backend ? backend->start() : nullptr;
    AgentContext ctx{catalog, syn, conversation.get()};

    analyze_intent(state, ctx);
    if (config.reretrieve_with_intents && retriever && state.search_intents) {
        state.trigger_candidates = retriever->triggers_for(state.search_intents->trigger_query, config.k);
        state.action_candidates = retriever->actions_for(state.search_intents->action_query, config.k);
        state.log("router", "Re-retrieved candidates with the analyzer's search intents");
    }

    outcome.queue = rank_pairs(state.trigger_candidates, state.action_candidates, catalog, syn);
    const std::size_t max_attempts = config.k * config.k;
    auto run_attempt = [&](const PairCandidate& pair, bool rag_retry) {
        if (!outcome.attempts.empty()) state.reset_for_attempt();
        state.log("router", std::string(rag_retry ? "RAG retry" : "Attempt") + " " +
                                std::to_string(state.attempt_index + 1) + ": pair #" + std::to_string(pair.queue_rank) +
                                " (" + pair.trigger_id + ", " + pair.action_id + "), score " + fmt3(pair.score));
        select_trigger(state, ctx, pair.trigger_id, config.tau_t, !rag_retry);
        select_action(state, ctx, pair.action_id, config.tau_a, !rag_retry);
        verify(state, ctx);
        outcome.attempts.push_back({pair.trigger_id, pair.action_id, state.selected_trigger->trigger_id,
                                    state.bindings->action_id, state.verdict->score, pair.queue_rank, rag_retry});
        const bool ok = state.verdict->score >= config.theta_v;
        state.log("router", "Verifier score " + fmt3(state.verdict->score) + (ok ? " >= " : " < ") +
                                fmt3(config.theta_v) + (ok ? ", accepted" : ", rejected"));
        return ok;
    };

    bool accepted = false;
    for (const auto& pair : outcome.queue) {
        if (outcome.attempts.size() >= max_attempts) break;
        accepted = run_attempt(pair, false);
        if (accepted) break;
        if (state.llm_overrode_rag && outcome.attempts.size() < max_attempts) {
            accepted = run_attempt(pair, true);
            if (accepted) break;
        }
    }

    if (accepted) {
        AppletConfig applet;
        applet.query = query;
        applet.trigger_id = state.selected_trigger->trigger_id;
        applet.action_id = state.bindings->action_id;
        applet.trigger_field_values = state.selected_trigger->field_values;
        applet.bindings = state.bindings->bindings;
        applet.verifier_score = state.verdict->score;
        applet.verifier_critique = state.verdict->critique;
        applet.attempts_used = static_cast<int>(outcome.attempts.size());
        applet.reasoning_log = state.reasoning_log;
        outcome.ranked_pairs.emplace_back(applet.trigger_id, applet.action_id);
        outcome.applet = std::move(applet);
    } else {
        state.log("router", "No pair passed verification after " + std::to_string(outcome.attempts.size()) + " attempts");
    }
    for (const auto& p : outcome.queue) {
        std::pair<FunctionId, FunctionId> key{p.trigger_id, p.action_id};
        if (std::find(outcome.ranked_pairs.begin(), outcome.ranked_pairs.end(), key) == outcome.ranked_pairs.end()) {
            outcome.ranked_pairs.push_back(std::move(key));
        }
    }
    return outcome;
}

PipelineOutcome run_pipeline(const std::string& query, const Catalog& catalog, const Retriever& retriever,
                             const SynonymTable& syn, const LlmBackend* backend, const PipelineConfig& config) {
    validate(config);
    if (retriever.triggers.kind != FunctionKind::Trigger || retriever.actions.kind != FunctionKind::Action) {
        throw Error(ErrorCode::KindMismatch, "retriever indexes are bound to the wrong kinds");
    }
    if (retriever.triggers.records.size() != catalog.triggers().size() ||
        retriever.actions.records.size() != catalog.actions().size()) {
        throw Error(ErrorCode::UnknownId, "vector indexes do not match the catalog");
    }
    auto triggers = retriever.triggers_for(query, config.k);
    auto actions = retriever.actions_for(query, config.k);
    return run_stage2(query, std::move(triggers), std::move(actions), catalog, syn, backend, config, &retriever);
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json applet_to_json(const AppletConfig& a) {
    nlohmann::ordered_json j;
    j["query"] = a.query;
    j["trigger"]["id"] = a.trigger_id;
    j["trigger"]["field_values"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : a.trigger_field_values) j["trigger"]["field_values"][k] = v;
    j["action"]["id"] = a.action_id;
    j["action"]["bindings"] = nlohmann::ordered_json::array();
    for (const auto& b : a.bindings) {
        j["action"]["bindings"].push_back({{"field", b.field_slug}, {"source", binding_source_name(b.source)}, {"value", b.value}});
    }
    j["verifier"]["score"] = a.verifier_score;
    j["verifier"]["critique"] = a.verifier_critique;
    j["attempts"] = a.attempts_used;
    j["log"] = nlohmann::ordered_json::array();
    for (const auto& e : a.reasoning_log) j["log"].push_back({{"agent", e.agent}, {"trace", e.trace}});
    return j;
}

AppletConfig applet_from_json(const nlohmann::json& j) {
    try {
        AppletConfig a;
        a.query = j.value("query", std::string());
        a.trigger_id = j.at("trigger").at("id").get<std::string>();
        if (j["trigger"].contains("field_values")) {
            for (const auto& [k, v] : j["trigger"]["field_values"].items()) a.trigger_field_values[k] = v.get<std::string>();
        }
        a.action_id = j.at("action").at("id").get<std::string>();
        for (const auto& b : j["action"].value("bindings", nlohmann::json::array())) {
            const std::string source = b.at("source").get<std::string>();
            if (source != "ingredient" && source != "static") throw Error(ErrorCode::Parse, "unknown binding source '" + source + "'");
            a.bindings.push_back({b.at("field").get<std::string>(),
                                  source == "ingredient" ? BindingSource::Ingredient : BindingSource::Static,
                                  b.at("value").get<std::string>()});
        }
        if (j.contains("verifier")) {
            a.verifier_score = j["verifier"].value("score", 0.0);
            a.verifier_critique = j["verifier"].value("critique", std::string());
        }
        a.attempts_used = j.value("attempts", 0);
        for (const auto& e : j.value("log", nlohmann::json::array())) {
            a.reasoning_log.push_back({e.at("agent").get<std::string>(), e.at("trace").get<std::string>()});
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed applet: ") + e.what());
    }
}

nlohmann::ordered_json outcome_to_json(const PipelineOutcome& outcome) {
    if (outcome.applet) return applet_to_json(*outcome.applet);
    nlohmann::ordered_json j;
    j["query"] = outcome.state.query;
    j["status"] = "failed";
    j["attempts"] = nlohmann::ordered_json::array();
    for (const auto& a : outcome.attempts) {
        j["attempts"].push_back({{"pair", {a.pair_trigger_id, a.pair_action_id}},
                                 {"trigger", a.trigger_id},
                                 {"action", a.action_id},
                                 {"score", a.score},
                                 {"rag_retry", a.rag_retry}});
    }
    j["log"] = nlohmann::ordered_json::array();
    for (const auto& e : outcome.state.reasoning_log) j["log"].push_back({{"agent", e.agent}, {"trace", e.trace}});
    return j;
}

}  // namespace tapsynth
