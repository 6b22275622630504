#include "tapsynth/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "tapsynth/error.hpp"

namespace tapsynth {

const char* split_name(Split split) noexcept {
    switch (split) {
        case Split::Gold: return "gold";
        case Split::Noisy: return "noisy";
        case Split::OneShot: return "one_shot";
    }
    return "gold";
}

Split parse_split(std::string_view name) {
    if (name == "gold" || name == "Gold") return Split::Gold;
    if (name == "noisy" || name == "Noisy") return Split::Noisy;
    if (name == "one_shot" || name == "OneShot" || name == "one-shot") return Split::OneShot;
    throw Error(ErrorCode::Parse, "unknown split '" + std::string(name) + "'");
}

namespace {

void require_k(int k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
}

template <typename T>
void require_nonempty(std::span<const T> s, const char* what) {
    if (s.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": empty record set");
}

std::optional<int> side_rank(const RankObservation& o, Side side) {
    switch (side) {
        case Side::Trigger: return o.trigger_rank;
        case Side::Action: return o.action_rank;
        case Side::Joint:
            if (!o.trigger_rank || !o.action_rank) return std::nullopt;
            return std::max(*o.trigger_rank, *o.action_rank);
    }
    return std::nullopt;
}

}  // namespace

double recall_at_k(std::span<const RankObservation> obs, int k, Side side) {
    require_k(k);
    require_nonempty(obs, "recall_at_k");
    std::size_t hits = 0;
    for (const auto& o : obs) {
        const auto r = side_rank(o, side);
        if (r && *r >= 1 && *r <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(obs.size());
}

double mrr_at_k(std::span<const RankObservation> obs, int k, Side side) {
    require_k(k);
    require_nonempty(obs, "mrr_at_k");
    double sum = 0.0;
    for (const auto& o : obs) {
        const auto r = side_rank(o, side);
        if (r && *r >= 1 && *r <= k) sum += 1.0 / *r;
    }
    return sum / static_cast<double>(obs.size());
}

bool Comparator::same(const FunctionId& predicted, const FunctionId& truth) const {
    if (!service_level) return predicted == truth;
    if (!catalog) throw Error(ErrorCode::InvalidArgument, "service-level comparison needs a catalog");
    const FunctionEntry* p = catalog->find(predicted);
    const FunctionEntry* t = catalog->find(truth);
    return p && t && p->channel == t->channel;
}

namespace {

std::pair<bool, bool> top1_hits(const GoldRecord& g, const PredictionRecord& p, const Comparator& cmp) {
    if (p.ranked_pairs.empty()) throw Error(ErrorCode::InvalidArgument, "prediction for '" + p.query + "' has no pairs");
    const auto& [t, a] = p.ranked_pairs.front();
    return {cmp.same(t, g.true_trigger_id), cmp.same(a, g.true_action_id)};
}

template <typename F>
double mean_over(std::span<const Evaluated> records, const char* what, F&& f) {
    require_nonempty(records, what);
    double sum = 0.0;
    for (const auto& r : records) sum += f(*r.gold, *r.prediction);
    return sum / static_cast<double>(records.size());
}

}  // namespace

double goal_accuracy(const GoldRecord& gold, const PredictionRecord& pred, const Comparator& cmp) {
    const auto [t, a] = top1_hits(gold, pred, cmp);
    if (t && a) return 1.0;
    if (t != a) return 0.5;
    return 0.0;
}

double trigger_accuracy(std::span<const Evaluated> records, const Comparator& cmp) {
    return mean_over(records, "trigger_accuracy",
                     [&](const auto& g, const auto& p) { return top1_hits(g, p, cmp).first ? 1.0 : 0.0; });
}

double action_accuracy(std::span<const Evaluated> records, const Comparator& cmp) {
    return mean_over(records, "action_accuracy",
                     [&](const auto& g, const auto& p) { return top1_hits(g, p, cmp).second ? 1.0 : 0.0; });
}

double joint_accuracy(std::span<const Evaluated> records, const Comparator& cmp) {
    return mean_over(records, "joint_accuracy", [&](const auto& g, const auto& p) {
        const auto [t, a] = top1_hits(g, p, cmp);
        return (t && a) ? 1.0 : 0.0;
    });
}

double mean_goal_accuracy(std::span<const Evaluated> records, const Comparator& cmp) {
    return mean_over(records, "goal_accuracy", [&](const auto& g, const auto& p) { return goal_accuracy(g, p, cmp); });
}

double success_rate(std::span<const Evaluated> records, const Comparator& cmp) {
    return mean_over(records, "success_rate",
                     [&](const auto& g, const auto& p) { return goal_accuracy(g, p, cmp) >= 0.5 ? 1.0 : 0.0; });
}

double faithfulness(const AppletConfig& applet, const Catalog& catalog) {
    const FunctionEntry* trigger = catalog.find(applet.trigger_id);
    const FunctionEntry* action = catalog.find(applet.action_id);
    if (trigger && trigger->kind != FunctionKind::Trigger) trigger = nullptr;
    if (action && action->kind != FunctionKind::Action) action = nullptr;

    std::size_t total = 0, verified = 0;
    auto claim = [&](bool ok) {
        ++total;
        if (ok) ++verified;
    };
    for (const auto& b : applet.bindings) {
        if (b.source == BindingSource::Ingredient) claim(trigger && trigger->find_ingredient(b.value));
        claim(action && action->find_field(b.field_slug));
    }
    for (const auto& [slug, value] : applet.trigger_field_values) claim(trigger && trigger->find_field(slug));
    if (total == 0) return 1.0;
    return static_cast<double>(verified) / static_cast<double>(total);
}

std::optional<double> topic_adherence(std::span<const Evaluated> records, const Catalog& catalog,
                                      std::vector<std::string>* warnings) {
    std::size_t total = 0, matched = 0;
    for (const auto& r : records) {
        if (!r.prediction->applet) continue;
        if (r.gold->reference_categories.empty()) {
            if (warnings) warnings->push_back("topic adherence: '" + r.gold->query + "' has no reference categories");
            continue;
        }
        ++total;
        const auto& refs = r.gold->reference_categories;
        const FunctionEntry* t = catalog.find(r.prediction->applet->trigger_id);
        const FunctionEntry* a = catalog.find(r.prediction->applet->action_id);
        if (t && a && refs.count(t->category) && refs.count(a->category)) ++matched;
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(matched) / static_cast<double>(total);
}

bool check_ordering(const SplitMetrics& m, const std::string& label, std::vector<std::string>* violations) {
    constexpr double kSlack = 1e-12;
    bool ok = true;
    if (m.success_rate + kSlack < m.goal_acc) {
        ok = false;
        if (violations) violations->push_back(label + ": success_rate < goal_accuracy");
    }
    if (m.goal_acc + kSlack < m.joint_acc) {
        ok = false;
        if (violations) violations->push_back(label + ": goal_accuracy < joint_accuracy");
    }
    return ok;
}

namespace {

SplitMetrics compute_split(std::span<const Evaluated> recs, const Catalog& catalog, const EvalOptions& opt,
                           std::vector<std::string>* warnings) {
    SplitMetrics m;
    m.count = recs.size();
    const Comparator cmp{&catalog, opt.service_level};

    std::vector<RankObservation> obs;
    obs.reserve(recs.size());
    for (const auto& r : recs) obs.push_back({r.prediction->trigger_rank, r.prediction->action_rank});
    for (int k : opt.ks) {
        m.recall_at[k] = {recall_at_k(obs, k, Side::Trigger), recall_at_k(obs, k, Side::Action),
                          recall_at_k(obs, k, Side::Joint)};
        m.mrr_at[k] = {mrr_at_k(obs, k, Side::Trigger), mrr_at_k(obs, k, Side::Action), mrr_at_k(obs, k, Side::Joint)};
    }

    double pair_sum = 0.0;
    for (const auto& r : recs) {
        const auto& pairs = r.prediction->ranked_pairs;
        const std::size_t depth = std::min<std::size_t>(pairs.size(), static_cast<std::size_t>(opt.pair_mrr_k));
        for (std::size_t i = 0; i < depth; ++i) {
            if (cmp.same(pairs[i].first, r.gold->true_trigger_id) && cmp.same(pairs[i].second, r.gold->true_action_id)) {
                pair_sum += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    m.pair_mrr = pair_sum / static_cast<double>(recs.size());

    m.trigger_acc = trigger_accuracy(recs, cmp);
    m.action_acc = action_accuracy(recs, cmp);
    m.joint_acc = joint_accuracy(recs, cmp);
    m.goal_acc = mean_goal_accuracy(recs, cmp);
    m.success_rate = success_rate(recs, cmp);

    double faith_sum = 0.0;
    std::size_t with_applet = 0;
    for (const auto& r : recs) {
        if (!r.prediction->applet) continue;
        faith_sum += faithfulness(*r.prediction->applet, catalog);
        ++with_applet;
    }
    if (with_applet) m.faithfulness = faith_sum / static_cast<double>(with_applet);
    m.topic_adherence = topic_adherence(recs, catalog, warnings);
    return m;
}

}  // namespace

MetricsReport evaluate_run(std::span<const PredictionRecord> predictions, std::span<const GoldRecord> golds,
                           const Catalog& catalog, const EvalOptions& options) {
    if (predictions.empty()) throw Error(ErrorCode::InvalidArgument, "no predictions to evaluate");
    if (predictions.size() != golds.size()) {
        throw Error(ErrorCode::InvalidArgument, "prediction count " + std::to_string(predictions.size()) +
                                                    " does not match gold count " + std::to_string(golds.size()));
    }
    if (options.ks.empty()) throw Error(ErrorCode::InvalidArgument, "no K values requested");
    for (int k : options.ks) require_k(k);
    require_k(options.pair_mrr_k);

    std::vector<Evaluated> all;
    std::map<std::string, std::vector<Evaluated>> by_split;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto& g = golds[i];
        const auto& p = predictions[i];
        if (g.query != p.query) {
            throw Error(ErrorCode::InvalidArgument, "record " + std::to_string(i) + ": prediction query '" + p.query +
                                                        "' does not match gold query '" + g.query + "'");
        }
        catalog.lookup(g.true_trigger_id, FunctionKind::Trigger);
        catalog.lookup(g.true_action_id, FunctionKind::Action);
        all.push_back({&g, &p});
        by_split[split_name(g.split)].push_back({&g, &p});
    }

    MetricsReport report;
    report.pair_mrr_k = options.pair_mrr_k;
    report.overall = compute_split(all, catalog, options, &report.warnings);
    for (const auto& [name, recs] : by_split) {
        report.per_split[name] = compute_split(recs, catalog, options, nullptr);
    }
    bool ok = check_ordering(report.overall, "overall", &report.violations);
    for (const auto& [name, m] : report.per_split) ok = check_ordering(m, name, &report.violations) && ok;
    report.internal_error = !ok;
    return report;
}

// ---------------------------------------------------------------------------

namespace {

template <typename F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        ++line_no;
        const auto line = text.substr(pos, eol - pos);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
            }
            try {
                f(j);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
            } catch (const Error& e) {
                throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        pos = eol + 1;
    }
}

std::optional<int> optional_rank(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<int>();
}

}  // namespace

std::vector<GoldRecord> parse_gold_jsonl(std::string_view text) {
    std::vector<GoldRecord> out;
    for_each_line(text, [&](const nlohmann::json& j) {
        GoldRecord g;
        g.query = j.at("query").get<std::string>();
        g.true_trigger_id = j.at("true_trigger_id").get<std::string>();
        g.true_action_id = j.at("true_action_id").get<std::string>();
        for (const auto& c : j.value("reference_categories", nlohmann::json::array())) {
            g.reference_categories.insert(c.get<std::string>());
        }
        g.split = parse_split(j.value("split", std::string("gold")));
        out.push_back(std::move(g));
    });
    return out;
}

std::vector<PredictionRecord> parse_predictions_jsonl(std::string_view text) {
    std::vector<PredictionRecord> out;
    for_each_line(text, [&](const nlohmann::json& j) {
        PredictionRecord p;
        p.query = j.at("query").get<std::string>();
        for (const auto& pair : j.at("ranked_pairs")) {
            p.ranked_pairs.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
        }
        if (p.ranked_pairs.empty()) throw Error(ErrorCode::Parse, "ranked_pairs must be non-empty");
        if (j.contains("applet") && !j["applet"].is_null()) p.applet = applet_from_json(j["applet"]);
        p.trigger_rank = optional_rank(j, "trigger_rank");
        p.action_rank = optional_rank(j, "action_rank");
        out.push_back(std::move(p));
    });
    return out;
}

nlohmann::ordered_json prediction_to_json(const PredictionRecord& p) {
    nlohmann::ordered_json j;
    j["query"] = p.query;
    j["ranked_pairs"] = nlohmann::ordered_json::array();
    for (const auto& [t, a] : p.ranked_pairs) j["ranked_pairs"].push_back({t, a});
    j["applet"] = p.applet ? applet_to_json(*p.applet) : nlohmann::ordered_json();
    j["trigger_rank"] = p.trigger_rank ? nlohmann::ordered_json(*p.trigger_rank) : nlohmann::ordered_json();
    j["action_rank"] = p.action_rank ? nlohmann::ordered_json(*p.action_rank) : nlohmann::ordered_json();
    return j;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

nlohmann::ordered_json split_to_json(const SplitMetrics& m, int pair_k) {
    nlohmann::ordered_json j;
    j["count"] = m.count;
    auto sides = [](const std::map<int, SideValues>& by_k) {
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (const auto& [k, v] : by_k) {
            out[std::to_string(k)] = {{"trigger", v.trigger}, {"action", v.action}, {"joint", v.joint}};
        }
        return out;
    };
    j["recall_at"] = sides(m.recall_at);
    j["mrr_at"] = sides(m.mrr_at);
    j["pair_mrr_k"] = pair_k;
    j["pair_mrr"] = optional_number(m.pair_mrr);
    j["trigger_accuracy"] = m.trigger_acc;
    j["action_accuracy"] = m.action_acc;
    j["joint_accuracy"] = m.joint_acc;
    j["goal_accuracy"] = m.goal_acc;
    j["success_rate"] = m.success_rate;
    j["faithfulness"] = optional_number(m.faithfulness);
    j["topic_adherence"] = optional_number(m.topic_adherence);
    return j;
}

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

SplitMetrics split_from_json(const nlohmann::json& j) {
    SplitMetrics m;
    m.count = j.value("count", std::size_t{0});
    auto sides = [](const nlohmann::json& obj, std::map<int, SideValues>& by_k) {
        for (const auto& [k, v] : obj.items()) {
            by_k[std::stoi(k)] = {v.at("trigger").get<double>(), v.at("action").get<double>(), v.at("joint").get<double>()};
        }
    };
    if (j.contains("recall_at")) sides(j["recall_at"], m.recall_at);
    if (j.contains("mrr_at")) sides(j["mrr_at"], m.mrr_at);
    m.pair_mrr = read_optional(j, "pair_mrr");
    m.trigger_acc = j.at("trigger_accuracy").get<double>();
    m.action_acc = j.at("action_accuracy").get<double>();
    m.joint_acc = j.at("joint_accuracy").get<double>();
    m.goal_acc = j.at("goal_accuracy").get<double>();
    m.success_rate = j.at("success_rate").get<double>();
    m.faithfulness = read_optional(j, "faithfulness");
    m.topic_adherence = read_optional(j, "topic_adherence");
    return m;
}

}  // namespace

nlohmann::ordered_json report_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["overall"] = split_to_json(report.overall, report.pair_mrr_k);
    j["splits"] = nlohmann::ordered_json::object();
    for (const auto& [name, m] : report.per_split) j["splits"][name] = split_to_json(m, report.pair_mrr_k);
    j["internal_error"] = report.internal_error;
    j["violations"] = report.violations;
    j["warnings"] = report.warnings;
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
    try {
        MetricsReport r;
        r.overall = split_from_json(j.at("overall"));
        r.pair_mrr_k = j["overall"].value("pair_mrr_k", 3);
        if (j.contains("splits")) {
            for (const auto& [name, m] : j["splits"].items()) r.per_split[name] = split_from_json(m);
        }
        r.internal_error = j.value("internal_error", false);
        if (j.contains("violations")) r.violations = j["violations"].get<std::vector<std::string>>();
        if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed report: ") + e.what());
    }
}

std::string report_table(const MetricsReport& report) {
    std::ostringstream out;
    char buf[160];
    auto opt = [](const std::optional<double>& v) {
        char b[16];
        if (!v) return std::string("   n/a");
        std::snprintf(b, sizeof b, "%6.3f", *v);
        return std::string(b);
    };
    auto row = [&](const std::string& name, const SplitMetrics& m) {
        std::snprintf(buf, sizeof buf, "%-9s %5zu %6.3f %6.3f %6.3f %6.3f %6.3f ", name.c_str(), m.count, m.trigger_acc,
                      m.action_acc, m.joint_acc, m.goal_acc, m.success_rate);
        out << buf << opt(m.faithfulness) << " " << opt(m.topic_adherence) << " " << opt(m.pair_mrr) << "\n";
    };
    out << "split         n  trig   act  joint   goal  succ  faith  topic pairMRR\n";
    row("overall", report.overall);
    for (const auto& [name, m] : report.per_split) row(name, m);

    out << "\nretrieval      K  R@K(t) R@K(a) R@K(j) MRR(t) MRR(a) MRR(j)\n";
    for (const auto& [k, r] : report.overall.recall_at) {
        const auto& mrr = report.overall.mrr_at.at(k);
        std::snprintf(buf, sizeof buf, "overall    %5d %6.3f %6.3f %6.3f %6.3f %6.3f %6.3f\n", k, r.trigger, r.action,
                      r.joint, mrr.trigger, mrr.action, mrr.joint);
        out << buf;
    }
    if (report.internal_error) {
        out << "\nINTERNAL ERROR: metric ordering violated\n";
        for (const auto& v : report.violations) out << "  " << v << "\n";
    }
    return out.str();
}

}  // namespace tapsynth
