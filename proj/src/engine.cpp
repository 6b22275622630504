#include "tapsynth/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "tapsynth/error.hpp"

namespace tapsynth {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string token_from_env(const std::string& var) {
    if (var.empty()) return {};
    const char* v = std::getenv(var.c_str());
    return v ? std::string(v) : std::string();
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::Config, std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace

EngineConfig EngineConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
    if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    EngineConfig c;
    c.catalog_path = resolve(get_or<std::string>(j, "catalog", ""), base_dir);
    c.trigger_vectors_path = resolve(get_or<std::string>(j, "trigger_vectors", ""), base_dir);
    c.action_vectors_path = resolve(get_or<std::string>(j, "action_vectors", ""), base_dir);
    c.synonyms_path = resolve(get_or<std::string>(j, "synonyms", ""), base_dir);
    c.synonym_extensions = get_or<std::vector<std::vector<std::string>>>(j, "synonym_extensions", {});
    c.parallelism = get_or<std::size_t>(j, "parallelism", 4);

    c.pipeline.k = get_or<std::size_t>(j, "k", 5);
    c.pipeline.tau_t = get_or<double>(j, "tau_t", 0.95);
    c.pipeline.tau_a = get_or<double>(j, "tau_a", 0.80);
    c.pipeline.theta_v = get_or<double>(j, "theta_v", 0.5);
    c.pipeline.reretrieve_with_intents = get_or<bool>(j, "reretrieve_with_intents", false);

    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        const std::string type = get_or<std::string>(e, "type", "hashing");
        if (type == "hashing" || type == "deterministic") {
            c.embedding.type = EmbeddingConfig::Type::Hashing;
        } else if (type == "remote") {
            c.embedding.type = EmbeddingConfig::Type::Remote;
        } else {
            throw Error(ErrorCode::Config, "unknown embedding type '" + type + "'");
        }
        c.embedding.dim = get_or<std::size_t>(e, "dim", c.embedding.type == EmbeddingConfig::Type::Remote ? 768 : 256);
        c.embedding.url = get_or<std::string>(e, "url", "");
        c.embedding.model = get_or<std::string>(e, "model", "");
        c.embedding.token_env = get_or<std::string>(e, "token_env", "");
        c.embedding.batch_size = get_or<std::size_t>(e, "batch_size", 32);
    }
    if (j.contains("llm")) {
        const auto& l = j["llm"];
        const std::string type = get_or<std::string>(l, "type", "off");
        if (type == "off") {
            c.llm.type = LlmConfig::Type::Off;
        } else if (type == "scripted") {
            c.llm.type = LlmConfig::Type::Scripted;
        } else if (type == "remote") {
            c.llm.type = LlmConfig::Type::Remote;
        } else {
            throw Error(ErrorCode::Config, "unknown llm type '" + type + "'");
        }
        c.llm.path = resolve(get_or<std::string>(l, "path", ""), base_dir);
        c.llm.url = get_or<std::string>(l, "url", "");
        c.llm.model = get_or<std::string>(l, "model", "");
        c.llm.token_env = get_or<std::string>(l, "token_env", "");
    }
    return c;
}

nlohmann::ordered_json EngineConfig::to_json() const {
    nlohmann::ordered_json j;
    j["catalog"] = catalog_path;
    j["trigger_vectors"] = trigger_vectors_path;
    j["action_vectors"] = action_vectors_path;
    j["embedding"] = {{"type", embedding.type == EmbeddingConfig::Type::Hashing ? "hashing" : "remote"},
                      {"dim", embedding.dim},
                      {"url", embedding.url},
                      {"model", embedding.model},
                      {"token_env", embedding.token_env},
                      {"batch_size", embedding.batch_size}};
    const char* llm_type = llm.type == LlmConfig::Type::Off ? "off" : llm.type == LlmConfig::Type::Scripted ? "scripted" : "remote";
    j["llm"] = {{"type", llm_type}, {"path", llm.path}, {"url", llm.url}, {"model", llm.model}, {"token_env", llm.token_env}};
    j["k"] = pipeline.k;
    j["tau_t"] = pipeline.tau_t;
    j["tau_a"] = pipeline.tau_a;
    j["theta_v"] = pipeline.theta_v;
    j["reretrieve_with_intents"] = pipeline.reretrieve_with_intents;
    j["synonyms"] = synonyms_path;
    j["synonym_extensions"] = synonym_extensions;
    j["parallelism"] = parallelism;
    return j;
}

void EngineConfig::validate() const {
    if (catalog_path.empty()) throw Error(ErrorCode::Config, "config needs a catalog path");
    tapsynth::validate(pipeline);
    if (parallelism == 0) throw Error(ErrorCode::Config, "parallelism must be >= 1");
    if (embedding.dim == 0) throw Error(ErrorCode::Config, "embedding dim must be >= 1");
    if (embedding.type == EmbeddingConfig::Type::Remote && embedding.url.empty()) {
        throw Error(ErrorCode::Config, "remote embedding needs a url");
    }
    if (llm.type == LlmConfig::Type::Scripted && llm.path.empty()) throw Error(ErrorCode::Config, "scripted llm needs a path");
    if (llm.type == LlmConfig::Type::Remote && llm.url.empty()) throw Error(ErrorCode::Config, "remote llm needs a url");
}

// ---------------------------------------------------------------------------

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
    config_.validate();
    catalog_ = load_catalog(config_.catalog_path, &catalog_warnings_);
    synonyms_ = config_.synonyms_path.empty() ? SynonymTable::defaults() : SynonymTable::load(config_.synonyms_path);
    for (const auto& group : config_.synonym_extensions) synonyms_.add_group(group);

    auto make_provider = [this]() -> std::unique_ptr<EmbeddingProvider> {
        if (config_.embedding.type == EmbeddingConfig::Type::Hashing) {
            return std::make_unique<HashingProvider>(config_.embedding.dim);
        }
        RemoteEmbeddingOptions o;
        o.url = config_.embedding.url;
        o.model = config_.embedding.model;
        o.token = token_from_env(config_.embedding.token_env);
        o.dim = config_.embedding.dim;
        o.max_parallel = config_.parallelism;
        o.batch_size = config_.embedding.batch_size;
        return std::make_unique<RemoteEmbeddingProvider>(std::move(o));
    };
    trigger_encoder_ = make_provider();
    action_encoder_ = make_provider();

    switch (config_.llm.type) {
        case LlmConfig::Type::Off: break;
        case LlmConfig::Type::Scripted: backend_ = ScriptedBackend::load(config_.llm.path); break;
        case LlmConfig::Type::Remote: {
            RemoteChatOptions o;
            o.url = config_.llm.url;
            o.model = config_.llm.model;
            o.token = token_from_env(config_.llm.token_env);
            o.max_parallel = config_.parallelism;
            backend_ = std::make_shared<RemoteChatBackend>(std::move(o));
            break;
        }
    }
}

Engine::~Engine() = default;

void Engine::build_indexes() {
    trigger_index_ = tapsynth::build_index(catalog_, FunctionKind::Trigger, *trigger_encoder_);
    action_index_ = tapsynth::build_index(catalog_, FunctionKind::Action, *action_encoder_);
}

void Engine::ensure_indexes() {
    if (has_indexes()) return;
    auto present = [](const std::string& p) { return !p.empty() && fs::exists(p); };
    if (present(config_.trigger_vectors_path) && present(config_.action_vectors_path)) {
        trigger_index_ = import_vectors_from_file(config_.trigger_vectors_path, &catalog_, trigger_encoder_->dim());
        action_index_ = import_vectors_from_file(config_.action_vectors_path, &catalog_, action_encoder_->dim());
        if (trigger_index_->kind != FunctionKind::Trigger || action_index_->kind != FunctionKind::Action) {
            throw Error(ErrorCode::KindMismatch, "trigger/action vector files are swapped");
        }
        return;
    }
    build_indexes();
}

const VectorIndex& Engine::index(FunctionKind kind) const {
    const auto& idx = kind == FunctionKind::Trigger ? trigger_index_ : action_index_;
    if (!idx) throw Error(ErrorCode::InvalidArgument, "indexes have not been built");
    return *idx;
}

void Engine::write_vectors(VectorFileFormat format) const {
    if (config_.trigger_vectors_path.empty() || config_.action_vectors_path.empty()) {
        throw Error(ErrorCode::Config, "config needs trigger_vectors and action_vectors output paths");
    }
    export_vectors_to_file(index(FunctionKind::Trigger), config_.trigger_vectors_path, format);
    export_vectors_to_file(index(FunctionKind::Action), config_.action_vectors_path, format);
}

Retriever Engine::retriever() const {
    return Retriever{index(FunctionKind::Trigger), index(FunctionKind::Action), *trigger_encoder_, *action_encoder_};
}

PipelineOutcome Engine::query(const std::string& text) const {
    return run_pipeline(text, catalog_, retriever(), synonyms_, backend_.get(), config_.pipeline);
}

template <typename F>
void Engine::parallel_for(std::size_t n, F&& f) const {
    const std::size_t workers = std::min(config_.parallelism, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::vector<Engine::BatchItem> Engine::run_batch(const std::vector<std::string>& queries) const {
    std::vector<BatchItem> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) {
        try {
            out[i].outcome = query(queries[i]);
        } catch (const Error& e) {
            out[i].error = e.code();
            out[i].message = e.what();
        } catch (const std::exception& e) {
            out[i].error = ErrorCode::Internal;
            out[i].message = e.what();
        }
    });
    return out;
}

PredictionRecord Engine::predict(const GoldRecord& gold, std::size_t rank_depth) const {
    const auto r = retriever();
    PredictionRecord p;
    p.query = gold.query;
    auto rank_of = [](const std::vector<Candidate>& list, const FunctionId& id) -> std::optional<int> {
        for (const auto& c : list) {
            if (c.entry_id == id) return c.rank;
        }
        return std::nullopt;
    };
    p.trigger_rank = rank_of(r.triggers_for(gold.query, rank_depth), gold.true_trigger_id);
    p.action_rank = rank_of(r.actions_for(gold.query, rank_depth), gold.true_action_id);
    auto outcome = query(gold.query);
    p.ranked_pairs = std::move(outcome.ranked_pairs);
    p.applet = std::move(outcome.applet);
    return p;
}

std::vector<PredictionRecord> Engine::predict_all(const std::vector<GoldRecord>& golds, std::size_t rank_depth) const {
    std::vector<std::optional<PredictionRecord>> slots(golds.size());
    std::vector<std::optional<Error>> errors(golds.size());
    parallel_for(golds.size(), [&](std::size_t i) {
        try {
            slots[i] = predict(golds[i], rank_depth);
        } catch (const Error& e) {
            errors[i] = e;
        }
    });
    std::vector<PredictionRecord> out;
    out.reserve(golds.size());
    for (std::size_t i = 0; i < golds.size(); ++i) {
        if (errors[i]) throw Error(errors[i]->code(), "query " + std::to_string(i + 1) + ": " + errors[i]->what());
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

}  // namespace tapsynth
