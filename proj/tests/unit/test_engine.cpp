#include "doctest.h"

#include <filesystem>
#include <unistd.h>

#include "tapsynth/engine.hpp"
#include "test_support.hpp"

using namespace tstest;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("tapsynth_engine_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

EngineConfig synthetic_config() {
    auto c = EngineConfig::from_json(nlohmann::json{{"catalog", "catalogs/synthetic.json"},
                                                    {"embedding", {{"type", "deterministic"}, {"dim", 128}}}},
                                     source_path("data"));
    c.parallelism = 4;
    return c;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = EngineConfig::from_json(
        nlohmann::json::parse(R"({"catalog": "c.json", "trigger_vectors": "/abs/t.vec", "k": 3, "tau_t": 0.9,
                                  "llm": {"type": "scripted", "path": "s.json"},
                                  "synonym_extensions": [["blurb", "body"]]})"),
        "/base");
    CHECK(c.catalog_path == "/base/c.json");
    CHECK(c.trigger_vectors_path == "/abs/t.vec");
    CHECK(c.llm.type == LlmConfig::Type::Scripted);
    CHECK(c.llm.path == "/base/s.json");
    CHECK(c.pipeline.k == 3);
    CHECK(c.pipeline.tau_t == 0.9);
    CHECK(c.pipeline.tau_a == 0.80);
    CHECK(c.pipeline.theta_v == 0.5);
    CHECK(c.embedding.type == EmbeddingConfig::Type::Hashing);
    CHECK(c.embedding.dim == 256);
    CHECK(c.synonym_extensions.size() == 1);

    const auto remote = EngineConfig::from_json(nlohmann::json::parse(R"({"embedding": {"type": "remote"}})"));
    CHECK(remote.embedding.dim == 768);

    const auto round = EngineConfig::from_json(c.to_json());
    CHECK(round.to_json() == c.to_json());

    CHECK(code_of([] { EngineConfig::from_json(nlohmann::json::parse(R"({"k": "five"})")); }) == ErrorCode::Config);
    CHECK(code_of([] { EngineConfig::from_json(nlohmann::json::parse(R"({"llm": {"type": "magic"}})")); }) == ErrorCode::Config);
    CHECK(code_of([] { EngineConfig::from_json(nlohmann::json::array()); }) == ErrorCode::Config);
    CHECK(code_of([] { EngineConfig{}.validate(); }) == ErrorCode::Config);
    CHECK(code_of([] {
              EngineConfig::from_json(nlohmann::json::parse(R"({"catalog": "c", "tau_t": 0})")).validate();
          }) == ErrorCode::Config);
    CHECK(code_of([] {
              EngineConfig::from_json(nlohmann::json::parse(R"({"catalog": "c", "llm": {"type": "remote"}})")).validate();
          }) == ErrorCode::Config);
}

TEST_CASE("engine indexes and vector files") {
    const auto dir = scratch_dir("vectors");
    auto cfg = synthetic_config();
    cfg.trigger_vectors_path = (dir / "t.vec").string();
    cfg.action_vectors_path = (dir / "a.vec").string();

    Engine first(cfg);
    CHECK_FALSE(first.has_indexes());
    CHECK(code_of([&] { first.index(FunctionKind::Trigger); }) == ErrorCode::InvalidArgument);
    first.ensure_indexes();
    CHECK(first.index(FunctionKind::Trigger).records.size() == 50);
    CHECK(first.index(FunctionKind::Action).records.size() == 39);
    first.write_vectors(VectorFileFormat::Binary);
    CHECK(fs::exists(dir / "t.vec"));

    Engine second(cfg);
    second.ensure_indexes();
    const auto a = applet_to_json(*first.query("Change the light to green if stock price rises").applet).dump();
    const auto b = applet_to_json(*second.query("Change the light to green if stock price rises").applet).dump();
    CHECK(a == b);

    auto wrong_dim = cfg;
    wrong_dim.embedding.dim = 64;
    Engine third(wrong_dim);
    CHECK(code_of([&] { third.ensure_indexes(); }) == ErrorCode::DimMismatch);

    fs::remove_all(dir);
}

TEST_CASE("batch keeps input order and isolates failures") {
    auto cfg = synthetic_config();
    Engine engine(cfg);
    engine.build_indexes();
    const std::vector<std::string> queries = {"Email me when a stock drops below a price", "   ",
                                              "Blink the lights when the front door opens",
                                              "Log my Fitbit sleep to a spreadsheet"};
    const auto parallel = engine.run_batch(queries);
    REQUIRE(parallel.size() == 4);
    CHECK(parallel[1].error == ErrorCode::InvalidArgument);
    CHECK_FALSE(parallel[1].outcome);
    for (std::size_t i : {0u, 2u, 3u}) {
        REQUIRE(parallel[i].outcome);
        CHECK(parallel[i].outcome->state.query == queries[i]);
        CHECK(outcome_to_json(*parallel[i].outcome).dump() == outcome_to_json(engine.query(queries[i])).dump());
    }

    cfg.parallelism = 1;
    Engine serial(cfg);
    serial.build_indexes();
    const auto s = serial.run_batch(queries);
    for (std::size_t i : {0u, 2u, 3u}) {
        CHECK(outcome_to_json(*s[i].outcome).dump() == outcome_to_json(*parallel[i].outcome).dump());
    }
}

TEST_CASE("predictions carry ranks and pairs") {
    Engine engine(synthetic_config());
    engine.build_indexes();
    const auto golds = parse_gold_jsonl(slurp(source_path("data/eval/synthetic_gold.jsonl")));
    REQUIRE(golds.size() == 20);
    const auto preds = engine.predict_all(golds, 10);
    REQUIRE(preds.size() == golds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        CHECK(preds[i].query == golds[i].query);
        CHECK(preds[i].ranked_pairs.size() == 25);
        if (preds[i].trigger_rank) CHECK(*preds[i].trigger_rank <= 10);
        if (preds[i].applet) {
            CHECK(preds[i].ranked_pairs[0] == std::make_pair(preds[i].applet->trigger_id, preds[i].applet->action_id));
        }
    }
    const auto report = evaluate_run(preds, golds, engine.catalog());
    CHECK_FALSE(report.internal_error);
    CHECK(report.per_split.size() == 3);

    std::vector<GoldRecord> bad = {golds[0]};
    bad[0].query = "";
    try {
        engine.predict_all(bad, 5);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("query 1") != std::string::npos);
    }
}

TEST_CASE("engine construction errors") {
    auto cfg = synthetic_config();
    cfg.catalog_path = source_path("data/catalogs/missing.json");
    CHECK(code_of([&] { Engine e(cfg); }) == ErrorCode::Io);
    cfg = synthetic_config();
    cfg.llm.type = LlmConfig::Type::Scripted;
    cfg.llm.path = source_path("data/scripts/missing.json");
    CHECK(code_of([&] { Engine e(cfg); }) != ErrorCode::Ok);
}
