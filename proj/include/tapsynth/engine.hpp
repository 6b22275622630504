#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tapsynth/agents.hpp"
#include "tapsynth/catalog.hpp"
#include "tapsynth/embedding.hpp"
#include "tapsynth/error.hpp"
#include "tapsynth/eval.hpp"
#include "tapsynth/llm.hpp"
#include "tapsynth/pairing.hpp"
#include "tapsynth/vector_index.hpp"

namespace tapsynth {

struct EmbeddingConfig {
    enum class Type { Hashing, Remote } type = Type::Hashing;
    std::size_t dim = 256;
    std::string url;
    std::string model;
    std::string token_env;
    std::size_t batch_size = 32;
};

struct LlmConfig {
    enum class Type { Off, Scripted, Remote } type = Type::Off;
    std::string path;  // scripted
    std::string url;
    std::string model;
    std::string token_env;
};

// Tokens never appear here directly; only the name of the environment
// variable that holds them.
struct EngineConfig {
    std::string catalog_path;
    std::string trigger_vectors_path;
    std::string action_vectors_path;
    EmbeddingConfig embedding;
    LlmConfig llm;
    PipelineConfig pipeline;
    std::string synonyms_path;
    std::vector<std::vector<std::string>> synonym_extensions;
    std::size_t parallelism = 4;

    // Relative paths resolve against `base_dir` when it is non-empty.
    static EngineConfig from_json(const nlohmann::json& j, const std::string& base_dir = {});
    nlohmann::ordered_json to_json() const;
    void validate() const;
};

class Engine {
public:
    explicit Engine(EngineConfig config);
    ~Engine();

    const EngineConfig& config() const { return config_; }
    const Catalog& catalog() const { return catalog_; }
    const SynonymTable& synonyms() const { return synonyms_; }
    const std::vector<std::string>& catalog_warnings() const { return catalog_warnings_; }

    // Embeds both sides of the catalog with the configured provider.
    void build_indexes();
    // Imports the configured vector files when present, otherwise builds.
    void ensure_indexes();
    bool has_indexes() const { return trigger_index_.has_value() && action_index_.has_value(); }
    const VectorIndex& index(FunctionKind kind) const;
    void write_vectors(VectorFileFormat format) const;

    PipelineOutcome query(const std::string& text) const;
    // Results come back in input order; failures carry the error instead.
    struct BatchItem {
        std::optional<PipelineOutcome> outcome;
        ErrorCode error = ErrorCode::Ok;
        std::string message;
    };
    std::vector<BatchItem> run_batch(const std::vector<std::string>& queries) const;

    PredictionRecord predict(const GoldRecord& gold, std::size_t rank_depth) const;
    std::vector<PredictionRecord> predict_all(const std::vector<GoldRecord>& golds, std::size_t rank_depth) const;

private:
    Retriever retriever() const;

    template <typename F>
    void parallel_for(std::size_t n, F&& f) const;

    EngineConfig config_;
    Catalog catalog_;
    std::vector<std::string> catalog_warnings_;
    SynonymTable synonyms_;
    std::unique_ptr<EmbeddingProvider> trigger_encoder_;
    std::unique_ptr<EmbeddingProvider> action_encoder_;
    std::shared_ptr<const LlmBackend> backend_;
    std::optional<VectorIndex> trigger_index_;
    std::optional<VectorIndex> action_index_;
};

}  // namespace tapsynth
