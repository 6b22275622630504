#include "doctest.h"

#include <algorithm>

#include "metrics_suite.hpp"
#include "tapsynth/error.hpp"

using namespace tstest;

namespace {

std::vector<RankObservation> obs(std::vector<std::pair<std::optional<int>, std::optional<int>>> v) {
    std::vector<RankObservation> out;
    for (auto& [t, a] : v) out.push_back({t, a});
    return out;
}

PredictionRecord pred(std::string t, std::string a) {
    PredictionRecord p;
    p.ranked_pairs = {{std::move(t), std::move(a)}};
    return p;
}

GoldRecord gold(std::string t, std::string a, std::set<std::string> refs = {}) {
    GoldRecord g;
    g.true_trigger_id = std::move(t);
    g.true_action_id = std::move(a);
    g.reference_categories = std::move(refs);
    return g;
}

MetricsReport evaluate(const std::vector<SuiteRecord>& recs, const Catalog& cat, const EvalOptions& opt = {}) {
    std::vector<PredictionRecord> p;
    std::vector<GoldRecord> g;
    for (const auto& r : recs) {
        p.push_back(r.prediction);
        g.push_back(r.gold);
    }
    return evaluate_run(p, g, cat, opt);
}

std::vector<OracleInput> oracle_inputs(const std::vector<SuiteRecord>& recs) {
    std::vector<OracleInput> out;
    for (const auto& r : recs) out.push_back(to_oracle_input(r));
    return out;
}

}  // namespace

TEST_CASE("recall and MRR examples") {
    const auto one = obs({{3, std::nullopt}});
    CHECK(recall_at_k(one, 5, Side::Trigger) == 1.0);
    CHECK(recall_at_k(one, 1, Side::Trigger) == 0.0);
    CHECK(recall_at_k(obs({{2, 6}}), 5, Side::Joint) == 0.0);
    CHECK(mrr_at_k(obs({{1, 2}}), 5, Side::Trigger) == 1.0);
    CHECK(mrr_at_k(obs({{1, 2}}), 5, Side::Action) == 0.5);
    CHECK(mrr_at_k(obs({{5, 7}}), 5, Side::Trigger) == doctest::Approx(0.2));
    CHECK(mrr_at_k(obs({{5, 7}}), 5, Side::Action) == 0.0);
    CHECK(mrr_at_k(obs({{1, 1}, {2, 1}, {std::nullopt, 1}}), 3, Side::Trigger) == doctest::Approx(0.5));
    CHECK(mrr_at_k(obs({{2, 3}}), 5, Side::Joint) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(recall_at_k(one, 0, Side::Trigger), Error);
    CHECK_THROWS_AS(mrr_at_k({}, 1, Side::Trigger), Error);
}

TEST_CASE("accuracy examples") {
    const auto g = gold("t", "a");
    CHECK(goal_accuracy(g, pred("t", "a")) == 1.0);
    CHECK(goal_accuracy(g, pred("t", "x")) == 0.5);
    CHECK(goal_accuracy(g, pred("x", "a")) == 0.5);
    CHECK(goal_accuracy(g, pred("x", "y")) == 0.0);

    const std::vector<GoldRecord> gs = {gold("t", "a"), gold("t", "a"), gold("t", "a")};
    const std::vector<PredictionRecord> ps = {pred("t", "a"), pred("t", "x"), pred("x", "y")};
    std::vector<Evaluated> ev;
    for (std::size_t i = 0; i < 3; ++i) ev.push_back({&gs[i], &ps[i]});
    CHECK(success_rate(ev) == doctest::Approx(2.0 / 3.0));
    CHECK(mean_goal_accuracy(ev) == doctest::Approx(0.5));

    std::vector<Evaluated> two(ev.begin(), ev.begin() + 2);
    CHECK(trigger_accuracy(two) == 1.0);
    CHECK(joint_accuracy(two) == 0.5);
    CHECK(action_accuracy(two) == 0.5);

    // Four disjoint correctness patterns.
    const std::vector<PredictionRecord> four = {pred("t", "a"), pred("t", "x"), pred("x", "a"), pred("x", "y")};
    const std::vector<GoldRecord> g4(4, gold("t", "a"));
    std::vector<Evaluated> e4;
    for (std::size_t i = 0; i < 4; ++i) e4.push_back({&g4[i], &four[i]});
    CHECK(trigger_accuracy(e4) == 0.5);
    CHECK(action_accuracy(e4) == 0.5);
    CHECK(joint_accuracy(e4) == 0.25);
    CHECK(mean_goal_accuracy(e4) == 0.5);
    CHECK(success_rate(e4) == 0.75);
    CHECK_THROWS_AS(success_rate(std::span<const Evaluated>{}), Error);
}

TEST_CASE("faithfulness") {
    const Catalog cat = suite_catalog();
    CHECK(faithfulness(suite_applet("hue.light_on", "hue.blink", {{"which_lights", BindingSource::Ingredient, "LightName"}}), cat) == 1.0);
    CHECK(faithfulness(suite_applet("tw.new_tweet", "tw.post",
                                    {{"tweet", BindingSource::Static, "x"}, {"ghost", BindingSource::Static, "y"}}),
                       cat) == 0.5);
    CHECK(faithfulness(suite_applet("tw.new_tweet", "tw.post", {}), cat) == 1.0);
    CHECK(faithfulness(suite_applet("hue.light_on", "hue.blink", {{"which_lights", BindingSource::Ingredient, "Ghost"}}), cat) == 0.5);
    CHECK(faithfulness(suite_applet("tw.new_tweet", "tw.post", {}, {{"username", "a"}, {"bogus", "b"}}), cat) == 0.5);
}

TEST_CASE("topic adherence") {
    const Catalog cat = make_catalog(
        {trigger("fitbit.goal", {}, {}, "Health & fitness"), trigger("hue.on", {}, {}, "Smart home")},
        {action("fitbit.log", {}, "Health & fitness"), action("twitter.post", {}, "Social")});
    auto rec = [](std::string t, std::string a) {
        PredictionRecord p = pred(t, a);
        p.applet = suite_applet(t, a, {});
        return p;
    };
    const std::vector<GoldRecord> gs = {gold("fitbit.goal", "fitbit.log", {"Health & fitness"}),
                                        gold("hue.on", "fitbit.log", {"Smart home"}),
                                        gold("hue.on", "twitter.post", {"Smart home", "Social"}),
                                        gold("fitbit.goal", "twitter.post", {"Social"}),
                                        gold("fitbit.goal", "fitbit.log", {})};
    const std::vector<PredictionRecord> ps = {rec("fitbit.goal", "fitbit.log"), rec("hue.on", "twitter.post"),
                                              rec("hue.on", "twitter.post"), rec("fitbit.goal", "twitter.post"),
                                              rec("fitbit.goal", "fitbit.log")};
    std::vector<Evaluated> ev;
    for (std::size_t i = 0; i < gs.size(); ++i) ev.push_back({&gs[i], &ps[i]});
    std::vector<std::string> warnings;
    const auto t = topic_adherence(ev, cat, &warnings);
    REQUIRE(t);
    CHECK(*t == 0.5);
    CHECK(warnings.size() == 1);
    CHECK_FALSE(topic_adherence(std::span<const Evaluated>(ev.data() + 4, 1), cat));
}

TEST_CASE("20-record suite equals the naive oracle") {
    const Catalog cat = suite_catalog();
    const auto recs = metrics_suite();
    REQUIRE(recs.size() == 20);
    const EvalOptions opt;
    const auto report = evaluate(recs, cat, opt);
    CHECK_FALSE(report.internal_error);

    std::string worst;
    const auto expected = oracle_metrics(oracle_inputs(recs), cat, opt.ks, opt.pair_mrr_k);
    CHECK(max_abs_diff(flatten(report.overall), expected, &worst) <= 1e-9);
    INFO(worst);

    // Hand counts over the suite.
    CHECK(report.overall.trigger_acc == doctest::Approx(0.65));
    CHECK(report.overall.action_acc == doctest::Approx(0.55));
    CHECK(report.overall.joint_acc == doctest::Approx(0.35));
    CHECK(report.overall.goal_acc == doctest::Approx(0.60));
    CHECK(report.overall.success_rate == doctest::Approx(0.85));

    for (const char* split : {"gold", "noisy", "one_shot"}) {
        std::vector<SuiteRecord> subset;
        for (const auto& r : recs) {
            if (split_name(r.gold.split) == std::string(split)) subset.push_back(r);
        }
        REQUIRE(report.per_split.count(split));
        CHECK(max_abs_diff(flatten(report.per_split.at(split)), oracle_metrics(oracle_inputs(subset), cat, opt.ks, opt.pair_mrr_k)) <= 1e-9);
    }

    EvalOptions svc;
    svc.service_level = true;
    const auto s = evaluate(recs, cat, svc);
    CHECK(max_abs_diff(flatten(s.overall), oracle_metrics(oracle_inputs(recs), cat, svc.ks, svc.pair_mrr_k, true)) <= 1e-9);
    CHECK(s.overall.trigger_acc >= report.overall.trigger_acc);

    EvalOptions other;
    other.ks = {2, 4, 7};
    other.pair_mrr_k = 1;
    CHECK(max_abs_diff(flatten(evaluate(recs, cat, other).overall),
                       oracle_metrics(oracle_inputs(recs), cat, other.ks, other.pair_mrr_k)) <= 1e-9);
}

TEST_CASE("property: ordering, bounds and permutation invariance on fuzzed record sets") {
    const Catalog cat = suite_catalog();
    Rng rng(99);
    for (int iter = 0; iter < 1000; ++iter) {
        auto recs = random_records(rng, cat);
        const EvalOptions opt;
        const auto rep = evaluate(recs, cat, opt);
        CHECK_FALSE(rep.internal_error);
        const auto& m = rep.overall;
        CHECK(m.success_rate + 1e-12 >= m.goal_acc);
        CHECK(m.goal_acc + 1e-12 >= m.joint_acc);
        for (int k : opt.ks) {
            const auto& r = m.recall_at.at(k);
            const auto& mr = m.mrr_at.at(k);
            CHECK(r.joint <= std::min(r.trigger, r.action) + 1e-12);
            CHECK(mr.trigger <= r.trigger + 1e-12);
            CHECK(mr.action <= r.action + 1e-12);
            CHECK(mr.joint <= r.joint + 1e-12);
        }
        for (const auto& r : recs) {
            const bool joint = r.prediction.ranked_pairs[0] == std::make_pair(r.gold.true_trigger_id, r.gold.true_action_id);
            CHECK((goal_accuracy(r.gold, r.prediction) == 1.0) == joint);
        }
        if (iter % 10 == 0) {
            CHECK(max_abs_diff(flatten(m), oracle_metrics(oracle_inputs(recs), cat, opt.ks, opt.pair_mrr_k)) <= 1e-9);
            std::shuffle(recs.begin(), recs.end(), rng.engine());
            CHECK(max_abs_diff(flatten(evaluate(recs, cat, opt).overall), flatten(m)) <= 1e-12);
        }
    }
}

TEST_CASE("evaluate_run errors") {
    const Catalog cat = suite_catalog();
    auto recs = metrics_suite();
    CHECK_THROWS_AS(evaluate({}, cat), Error);
    std::vector<PredictionRecord> p = {recs[0].prediction};
    std::vector<GoldRecord> g = {recs[0].gold, recs[1].gold};
    CHECK_THROWS_AS(evaluate_run(p, g, cat), Error);
    g = {recs[1].gold};
    CHECK_THROWS_AS(evaluate_run(p, g, cat), Error);
    g = {recs[0].gold};
    g[0].true_trigger_id = "nope.nope";
    CHECK_THROWS_AS(evaluate_run(p, g, cat), Error);
    EvalOptions bad;
    bad.ks = {0};
    CHECK_THROWS_AS(evaluate(recs, cat, bad), Error);
}

TEST_CASE("JSONL parsing and report round trip") {
    const auto golds = parse_gold_jsonl(
        "{\"query\": \"a\", \"true_trigger_id\": \"t\", \"true_action_id\": \"x\", \"split\": \"noisy\", "
        "\"reference_categories\": [\"Social\"]}\n\n"
        "{\"query\": \"b\", \"true_trigger_id\": \"t\", \"true_action_id\": \"x\"}\n");
    REQUIRE(golds.size() == 2);
    CHECK(golds[0].split == Split::Noisy);
    CHECK(golds[1].split == Split::Gold);
    CHECK(golds[0].reference_categories == std::set<std::string>{"Social"});

    auto code_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Ok;
    };
    CHECK(code_of([] { parse_gold_jsonl("{\"query\": 1}"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_gold_jsonl("not json"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_gold_jsonl("{\"query\":\"q\",\"true_trigger_id\":\"t\",\"true_action_id\":\"a\",\"split\":\"x\"}"); }) ==
          ErrorCode::Parse);
    CHECK(code_of([] { parse_predictions_jsonl("{\"query\": \"q\", \"ranked_pairs\": []}"); }) == ErrorCode::Parse);

    const auto recs = metrics_suite();
    std::string jsonl;
    for (const auto& r : recs) jsonl += prediction_to_json(r.prediction).dump() + "\n";
    const auto back = parse_predictions_jsonl(jsonl);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(prediction_to_json(back[i]).dump() == prediction_to_json(recs[i].prediction).dump());
    }
    CHECK(parse_predictions_jsonl("").empty());

    const Catalog cat = suite_catalog();
    const auto rep = evaluate(recs, cat);
    const auto rt = report_from_json(nlohmann::json::parse(report_to_json(rep).dump()));
    CHECK(report_to_json(rt).dump() == report_to_json(rep).dump());
    CHECK_FALSE(report_table(rep).empty());
}

TEST_CASE("check_ordering flags violations") {
    SplitMetrics m;
    m.success_rate = 0.5;
    m.goal_acc = 0.6;
    m.joint_acc = 0.7;
    std::vector<std::string> v;
    CHECK_FALSE(check_ordering(m, "overall", &v));
    CHECK(v.size() == 2);
    m.success_rate = 0.8;
    m.goal_acc = 0.7;
    m.joint_acc = 0.7;
    v.clear();
    CHECK(check_ordering(m, "overall", &v));
    CHECK(v.empty());
}
