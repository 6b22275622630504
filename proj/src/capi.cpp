#include "tapsynth/tapsynth.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "tapsynth/engine.hpp"
#include "tapsynth/error.hpp"

struct tapsynth_catalog {
    tapsynth::Catalog catalog;
    std::vector<std::string> warnings;
};

struct tapsynth_engine {
    std::unique_ptr<tapsynth::Engine> engine;
};

namespace {

thread_local std::string g_last_error;

tapsynth_status to_status(tapsynth::ErrorCode code) { return static_cast<tapsynth_status>(code); }

tapsynth_status fail(tapsynth_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size());
    out[s.size()] = '\0';
    return out;
}

void set_out(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

template <typename F>
tapsynth_status guarded(F&& f) {
    g_last_error.clear();
    try {
        return f();
    } catch (const tapsynth::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(TAPSYNTH_PARSE, e.what());
    } catch (const std::bad_alloc&) {
        return fail(TAPSYNTH_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(TAPSYNTH_INTERNAL, e.what());
    } catch (...) {
        return fail(TAPSYNTH_INTERNAL, "unknown exception");
    }
}

#define TAPSYNTH_REQUIRE(cond, what) \
    if (!(cond)) return fail(TAPSYNTH_INVALID_ARGUMENT, what)

std::string warnings_json(const std::vector<std::string>& w) { return nlohmann::json(w).dump(); }

}  // namespace

extern "C" {

void tapsynth_string_free(char* s) { std::free(s); }

const char* tapsynth_last_error(void) { return g_last_error.c_str(); }

const char* tapsynth_status_name(tapsynth_status status) {
    return tapsynth::error_code_name(static_cast<tapsynth::ErrorCode>(status));
}

const char* tapsynth_version(void) { return TAPSYNTH_VERSION; }

tapsynth_status tapsynth_catalog_load(const char* path, tapsynth_catalog** out) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(path && out, "path and out must be non-null");
        auto handle = std::make_unique<tapsynth_catalog>();
        handle->catalog = tapsynth::load_catalog(path, &handle->warnings);
        *out = handle.release();
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_catalog_parse(const char* json_text, tapsynth_catalog** out) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(json_text && out, "json_text and out must be non-null");
        auto handle = std::make_unique<tapsynth_catalog>();
        handle->catalog = tapsynth::parse_catalog(json_text, &handle->warnings);
        *out = handle.release();
        return TAPSYNTH_OK;
    });
}

void tapsynth_catalog_free(tapsynth_catalog* catalog) { delete catalog; }

tapsynth_status tapsynth_catalog_counts(const tapsynth_catalog* catalog, size_t* triggers, size_t* actions,
                                        size_t* categories) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(catalog, "catalog must be non-null");
        if (triggers) *triggers = catalog->catalog.entries(tapsynth::FunctionKind::Trigger).size();
        if (actions) *actions = catalog->catalog.entries(tapsynth::FunctionKind::Action).size();
        if (categories) *categories = catalog->catalog.categories().size();
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_catalog_warnings(const tapsynth_catalog* catalog, char** out_json) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(catalog && out_json, "catalog and out_json must be non-null");
        set_out(out_json, warnings_json(catalog->warnings));
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_catalog_serialize(const tapsynth_catalog* catalog, char** out_json) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(catalog && out_json, "catalog and out_json must be non-null");
        set_out(out_json, tapsynth::serialize_catalog(catalog->catalog));
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_catalog_render_text(const tapsynth_catalog* catalog, const char* entry_id,
                                             char** out_text) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(catalog && entry_id && out_text, "arguments must be non-null");
        set_out(out_text, tapsynth::render_text(catalog->catalog.lookup(entry_id)));
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_create(const char* config_json, const char* base_dir, tapsynth_engine** out) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(config_json && out, "config_json and out must be non-null");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::parse_error& e) {
            return fail(TAPSYNTH_CONFIG, std::string("config is not valid JSON: ") + e.what());
        }
        auto config = tapsynth::EngineConfig::from_json(j, base_dir ? base_dir : "");
        auto handle = std::make_unique<tapsynth_engine>();
        handle->engine = std::make_unique<tapsynth::Engine>(std::move(config));
        *out = handle.release();
        return TAPSYNTH_OK;
    });
}

void tapsynth_engine_free(tapsynth_engine* engine) { delete engine; }

tapsynth_status tapsynth_engine_warnings(const tapsynth_engine* engine, char** out_json) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine && out_json, "engine and out_json must be non-null");
        set_out(out_json, warnings_json(engine->engine->catalog_warnings()));
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_build_indexes(tapsynth_engine* engine) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine, "engine must be non-null");
        engine->engine->build_indexes();
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_ensure_indexes(tapsynth_engine* engine) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine, "engine must be non-null");
        engine->engine->ensure_indexes();
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_export_vectors(const tapsynth_engine* engine, const char* format) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine, "engine must be non-null");
        const std::string f = format ? format : "binary";
        tapsynth::VectorFileFormat vf;
        if (f == "binary") {
            vf = tapsynth::VectorFileFormat::Binary;
        } else if (f == "text") {
            vf = tapsynth::VectorFileFormat::Text;
        } else {
            return fail(TAPSYNTH_INVALID_ARGUMENT, "format must be 'binary' or 'text'");
        }
        engine->engine->write_vectors(vf);
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_index_info(const tapsynth_engine* engine, char** out_json) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine && out_json, "engine and out_json must be non-null");
        const auto& t = engine->engine->index(tapsynth::FunctionKind::Trigger);
        const auto& a = engine->engine->index(tapsynth::FunctionKind::Action);
        nlohmann::ordered_json j;
        j["triggers"] = t.records.size();
        j["actions"] = a.records.size();
        j["dim"] = t.dim;
        set_out(out_json, j.dump());
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_query(const tapsynth_engine* engine, const char* query, char** out_json) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine && query && out_json, "arguments must be non-null");
        const auto outcome = engine->engine->query(query);
        if (outcome.accepted()) {
            set_out(out_json, tapsynth::applet_to_json(*outcome.applet).dump(2));
            return TAPSYNTH_OK;
        }
        set_out(out_json, tapsynth::outcome_to_json(outcome).dump(2));
        return fail(TAPSYNTH_EXHAUSTED, "no candidate pair passed verification");
    });
}

tapsynth_status tapsynth_engine_run_batch(const tapsynth_engine* engine, const char* queries_text,
                                          char** out_jsonl) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine && queries_text && out_jsonl, "arguments must be non-null");
        std::vector<std::string> queries;
        std::istringstream in(queries_text);
        for (std::string line; std::getline(in, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            queries.push_back(line);
        }
        const auto results = engine->engine->run_batch(queries);
        std::string out;
        tapsynth_status first = TAPSYNTH_OK;
        std::string first_message;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            if (r.outcome && r.outcome->accepted()) {
                out += tapsynth::applet_to_json(*r.outcome->applet).dump();
            } else if (r.outcome) {
                out += tapsynth::outcome_to_json(*r.outcome).dump();
                if (first == TAPSYNTH_OK) {
                    first = TAPSYNTH_EXHAUSTED;
                    first_message = "query " + std::to_string(i + 1) + ": no candidate pair passed verification";
                }
            } else {
                nlohmann::ordered_json j;
                j["query"] = queries[i];
                j["status"] = "error";
                j["error"] = tapsynth::error_code_name(r.error);
                j["message"] = r.message;
                out += j.dump();
                if (first == TAPSYNTH_OK) {
                    first = to_status(r.error);
                    first_message = "query " + std::to_string(i + 1) + ": " + r.message;
                }
            }
            out += '\n';
        }
        set_out(out_jsonl, out);
        if (first != TAPSYNTH_OK) return fail(first, first_message);
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_engine_evaluate(const tapsynth_engine* engine, const char* gold_jsonl,
                                         const char* predictions_jsonl, const char* options_json,
                                         char** out_report_json, char** out_table, char** out_predictions_jsonl) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(engine && gold_jsonl, "engine and gold_jsonl must be non-null");
        tapsynth::EvalOptions options;
        if (options_json && *options_json) {
            const auto j = nlohmann::json::parse(options_json);
            if (j.contains("ks")) options.ks = j["ks"].get<std::vector<int>>();
            if (j.contains("pair_mrr_k")) options.pair_mrr_k = j["pair_mrr_k"].get<int>();
            if (j.contains("service_level")) options.service_level = j["service_level"].get<bool>();
        }
        if (options.ks.empty()) return fail(TAPSYNTH_INVALID_ARGUMENT, "ks must not be empty");
        for (int k : options.ks) {
            if (k < 1) return fail(TAPSYNTH_INVALID_ARGUMENT, "every k must be >= 1");
        }
        if (options.pair_mrr_k < 1) return fail(TAPSYNTH_INVALID_ARGUMENT, "pair_mrr_k must be >= 1");

        const auto golds = tapsynth::parse_gold_jsonl(gold_jsonl);
        std::vector<tapsynth::PredictionRecord> predictions;
        if (predictions_jsonl) {
            predictions = tapsynth::parse_predictions_jsonl(predictions_jsonl);
        } else {
            const int max_k = *std::max_element(options.ks.begin(), options.ks.end());
            const std::size_t depth =
                std::max<std::size_t>(static_cast<std::size_t>(max_k), engine->engine->config().pipeline.k);
            predictions = engine->engine->predict_all(golds, depth);
        }
        const auto report = tapsynth::evaluate_run(predictions, golds, engine->engine->catalog(), options);
        set_out(out_report_json, tapsynth::report_to_json(report).dump(2));
        set_out(out_table, tapsynth::report_table(report));
        if (out_predictions_jsonl) {
            std::string lines;
            for (const auto& p : predictions) lines += tapsynth::prediction_to_json(p).dump() + "\n";
            set_out(out_predictions_jsonl, lines);
        }
        if (report.internal_error) {
            std::string msg = "metric ordering violated";
            if (!report.violations.empty()) msg += ": " + report.violations.front();
            return fail(TAPSYNTH_INTERNAL, msg);
        }
        return TAPSYNTH_OK;
    });
}

tapsynth_status tapsynth_check_report(const char* report_json, char** out_violations_json) {
    return guarded([&] {
        TAPSYNTH_REQUIRE(report_json, "report_json must be non-null");
        const auto report = tapsynth::report_from_json(nlohmann::json::parse(report_json));
        std::vector<std::string> violations;
        tapsynth::check_ordering(report.overall, "overall", &violations);
        for (const auto& [name, m] : report.per_split) tapsynth::check_ordering(m, name, &violations);
        set_out(out_violations_json, nlohmann::json(violations).dump());
        if (!violations.empty()) return fail(TAPSYNTH_INTERNAL, violations.front());
        return TAPSYNTH_OK;
    });
}

}  // extern "C"
