// Command-line front end. Talks to the library only through tapsynth.h.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tapsynth/tapsynth.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kInput = 3, kProvider = 4, kExhausted = 5, kBackend = 6, kInternal = 7 };

int exit_code_for(tapsynth_status s) {
    switch (s) {
        case TAPSYNTH_OK: return kOk;
        case TAPSYNTH_INVALID_ARGUMENT:
        case TAPSYNTH_CONFIG: return kUsage;
        case TAPSYNTH_PARSE:
        case TAPSYNTH_DUPLICATE_ID:
        case TAPSYNTH_NOT_FOUND:
        case TAPSYNTH_KIND_MISMATCH:
        case TAPSYNTH_DIM_MISMATCH:
        case TAPSYNTH_CORRUPT_FILE:
        case TAPSYNTH_UNKNOWN_ID:
        case TAPSYNTH_IO: return kInput;
        case TAPSYNTH_PROVIDER: return kProvider;
        case TAPSYNTH_EXHAUSTED: return kExhausted;
        case TAPSYNTH_BACKEND: return kBackend;
        case TAPSYNTH_INTERNAL: return kInternal;
    }
    return kOther;
}

int report(tapsynth_status s) {
    if (s != TAPSYNTH_OK) {
        std::fprintf(stderr, "error [%s]: %s\n", tapsynth_status_name(s), tapsynth_last_error());
    }
    return exit_code_for(s);
}

struct CString {
    char* p = nullptr;
    ~CString() { tapsynth_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct EngineHandle {
    tapsynth_engine* p = nullptr;
    ~EngineHandle() { tapsynth_engine_free(p); }
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
}

std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

struct Overrides {
    std::string config_path;
    std::string catalog;
    std::string trigger_vectors;
    std::string action_vectors;
    std::string llm_script;
    std::string synonyms;
    int k = 0;
    double tau_t = -1, tau_a = -1, theta_v = -1;
    int dim = 0;
    int parallelism = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "Config JSON file");
        cmd->add_option("--catalog", catalog, "Catalog JSON (overrides config)");
        cmd->add_option("--trigger-vectors", trigger_vectors, "Trigger vector file");
        cmd->add_option("--action-vectors", action_vectors, "Action vector file");
        cmd->add_option("--llm-script", llm_script, "Scripted LLM replies (selects the scripted backend)");
        cmd->add_option("--synonyms", synonyms, "Synonym table JSON");
        cmd->add_option("--k", k, "Candidates per side")->check(CLI::PositiveNumber);
        cmd->add_option("--tau-t", tau_t, "Trigger override threshold");
        cmd->add_option("--tau-a", tau_a, "Action override threshold");
        cmd->add_option("--theta-v", theta_v, "Verifier acceptance threshold");
        cmd->add_option("--dim", dim, "Hashing embedding dimension")->check(CLI::PositiveNumber);
        cmd->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
    }

    // Returns the merged config JSON and the directory relative paths resolve against.
    std::pair<std::string, std::string> build() const {
        nlohmann::json j = nlohmann::json::object();
        std::string base;
        if (!config_path.empty()) {
            try {
                j = nlohmann::json::parse(slurp(config_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw CLI::ValidationError("--config", std::string("not valid JSON: ") + e.what());
            }
            base = fs::absolute(config_path).parent_path().string();
        }
        if (!catalog.empty()) j["catalog"] = absolute(catalog);
        if (!trigger_vectors.empty()) j["trigger_vectors"] = absolute(trigger_vectors);
        if (!action_vectors.empty()) j["action_vectors"] = absolute(action_vectors);
        if (!synonyms.empty()) j["synonyms"] = absolute(synonyms);
        if (!llm_script.empty()) j["llm"] = {{"type", "scripted"}, {"path", absolute(llm_script)}};
        if (k > 0) j["k"] = k;
        if (tau_t >= 0) j["tau_t"] = tau_t;
        if (tau_a >= 0) j["tau_a"] = tau_a;
        if (theta_v >= 0) j["theta_v"] = theta_v;
        if (parallelism > 0) j["parallelism"] = parallelism;
        if (dim > 0) {
            if (!j.contains("embedding")) j["embedding"] = nlohmann::json::object();
            j["embedding"]["dim"] = dim;
        }
        return {j.dump(), base};
    }
};

tapsynth_status open_engine(const Overrides& o, EngineHandle& h) {
    const auto [config, base] = o.build();
    tapsynth_status s = tapsynth_engine_create(config.c_str(), base.empty() ? nullptr : base.c_str(), &h.p);
    if (s != TAPSYNTH_OK) return s;
    CString warnings;
    if (tapsynth_engine_warnings(h.p, &warnings.p) == TAPSYNTH_OK) {
        for (const auto& w : nlohmann::json::parse(warnings.str())) {
            std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
        }
    }
    return TAPSYNTH_OK;
}

int cmd_ingest(const std::string& path, bool print_json) {
    tapsynth_catalog* cat = nullptr;
    tapsynth_status s = tapsynth_catalog_load(path.c_str(), &cat);
    if (s != TAPSYNTH_OK) return report(s);
    std::unique_ptr<tapsynth_catalog, void (*)(tapsynth_catalog*)> guard(cat, tapsynth_catalog_free);
    size_t nt = 0, na = 0, nc = 0;
    tapsynth_catalog_counts(cat, &nt, &na, &nc);
    CString warnings;
    tapsynth_catalog_warnings(cat, &warnings.p);
    for (const auto& w : nlohmann::json::parse(warnings.str())) {
        std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
    }
    if (print_json) {
        CString doc;
        if ((s = tapsynth_catalog_serialize(cat, &doc.p)) != TAPSYNTH_OK) return report(s);
        std::cout << doc.str() << "\n";
    } else {
        std::cout << (nt + na) << " entries valid (" << nt << " triggers, " << na << " actions, " << nc
                  << " categories)\n";
    }
    return kOk;
}

int cmd_index(const Overrides& o, const std::string& format) {
    EngineHandle h;
    tapsynth_status s = open_engine(o, h);
    if (s != TAPSYNTH_OK) return report(s);
    if ((s = tapsynth_engine_build_indexes(h.p)) != TAPSYNTH_OK) return report(s);
    if ((s = tapsynth_engine_export_vectors(h.p, format.c_str())) != TAPSYNTH_OK) return report(s);
    CString info;
    tapsynth_engine_index_info(h.p, &info.p);
    std::cout << info.str() << "\n";
    return kOk;
}

int cmd_query(const Overrides& o, const std::string& text, const std::string& out_path) {
    EngineHandle h;
    tapsynth_status s = open_engine(o, h);
    if (s != TAPSYNTH_OK) return report(s);
    if ((s = tapsynth_engine_ensure_indexes(h.p)) != TAPSYNTH_OK) return report(s);
    CString out;
    s = tapsynth_engine_query(h.p, text.c_str(), &out.p);
    if (out.p) {
        if (out_path.empty()) {
            std::cout << out.str() << "\n";
        } else {
            write_file(out_path, out.str() + "\n");
        }
    }
    return report(s);
}

int cmd_batch(const Overrides& o, const std::string& input, const std::string& out_path) {
    EngineHandle h;
    tapsynth_status s = open_engine(o, h);
    if (s != TAPSYNTH_OK) return report(s);
    if ((s = tapsynth_engine_ensure_indexes(h.p)) != TAPSYNTH_OK) return report(s);
    const std::string queries = slurp(input);
    CString out;
    s = tapsynth_engine_run_batch(h.p, queries.c_str(), &out.p);
    if (out.p) {
        if (out_path.empty()) {
            std::cout << out.str();
        } else {
            write_file(out_path, out.str());
        }
    }
    return report(s);
}

struct EvalArgs {
    std::string gold;
    std::string predictions;
    std::string report_path;
    std::string write_predictions;
    std::string check_report;
    std::vector<int> ks{1, 3, 5};
    int pair_mrr_k = 3;
    bool service_level = false;
    bool json = false;
};

int cmd_eval(const Overrides& o, const EvalArgs& a) {
    if (!a.check_report.empty()) {
        const std::string doc = slurp(a.check_report);
        CString violations;
        tapsynth_status s = tapsynth_check_report(doc.c_str(), &violations.p);
        if (s == TAPSYNTH_OK) std::cout << "report ordering ok\n";
        return report(s);
    }
    if (a.gold.empty()) throw CLI::RequiredError("--gold");
    EngineHandle h;
    tapsynth_status s = open_engine(o, h);
    if (s != TAPSYNTH_OK) return report(s);
    std::string predictions;
    if (!a.predictions.empty()) {
        predictions = slurp(a.predictions);
    } else if ((s = tapsynth_engine_ensure_indexes(h.p)) != TAPSYNTH_OK) {
        return report(s);
    }
    const std::string gold = slurp(a.gold);
    nlohmann::json opts = {{"ks", a.ks}, {"pair_mrr_k", a.pair_mrr_k}, {"service_level", a.service_level}};
    const std::string opts_text = opts.dump();
    CString report_json, table, preds;
    s = tapsynth_engine_evaluate(h.p, gold.c_str(), a.predictions.empty() ? nullptr : predictions.c_str(),
                                 opts_text.c_str(), &report_json.p, &table.p,
                                 a.write_predictions.empty() ? nullptr : &preds.p);
    if (report_json.p) {
        if (!a.report_path.empty()) write_file(a.report_path, report_json.str() + "\n");
        if (a.json) {
            std::cout << report_json.str() << "\n";
        } else {
            std::cout << table.str();
        }
    }
    if (preds.p) write_file(a.write_predictions, preds.str());
    return report(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trigger-action applet synthesis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tapsynth_version()));

    std::string ingest_path;
    bool ingest_json = false;
    auto* ingest = app.add_subcommand("ingest", "Validate a catalog and print counts");
    ingest->add_option("catalog", ingest_path, "Catalog JSON")->required();
    ingest->add_flag("--json", ingest_json, "Print the canonical catalog instead of counts");

    Overrides index_o;
    std::string format = "binary";
    auto* index = app.add_subcommand("index", "Embed the catalog and write vector files");
    index_o.attach(index);
    index->add_option("--format", format, "binary or text")->check(CLI::IsMember({"binary", "text"}));

    Overrides query_o;
    std::string query_text, query_out;
    auto* query = app.add_subcommand("query", "Synthesize one applet");
    query_o.attach(query);
    query->add_option("text", query_text, "Natural-language request")->required();
    query->add_option("-o,--output", query_out, "Write the JSON here instead of stdout");

    Overrides batch_o;
    std::string batch_in, batch_out;
    auto* batch = app.add_subcommand("run-batch", "Synthesize applets for a file of queries");
    batch_o.attach(batch);
    batch->add_option("-i,--input", batch_in, "One query per line")->required();
    batch->add_option("-o,--output", batch_out, "JSONL output (default stdout)");

    Overrides eval_o;
    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Score predictions against gold records");
    eval_o.attach(eval);
    eval->add_option("--gold", eval_args.gold, "Gold JSONL");
    eval->add_option("--predictions", eval_args.predictions, "Prediction JSONL (default: run the pipeline)");
    eval->add_option("--report", eval_args.report_path, "Write the JSON report here");
    eval->add_option("--write-predictions", eval_args.write_predictions, "Write generated predictions here");
    eval->add_option("--check-report", eval_args.check_report, "Re-check the ordering of a stored report");
    eval->add_option("--ks", eval_args.ks, "Cutoffs for Recall/MRR")->delimiter(',');
    eval->add_option("--pair-mrr-k", eval_args.pair_mrr_k, "Cutoff for pair MRR");
    eval->add_flag("--service-level", eval_args.service_level, "Compare channels instead of functions");
    eval->add_flag("--json", eval_args.json, "Print the JSON report instead of the table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_path, ingest_json);
        if (*index) return cmd_index(index_o, format);
        if (*query) return cmd_query(query_o, query_text, query_out);
        if (*batch) return cmd_batch(batch_o, batch_in, batch_out);
        if (*eval) return cmd_eval(eval_o, eval_args);
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
    return kUsage;
}
