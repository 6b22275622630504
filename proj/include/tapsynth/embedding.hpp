#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tapsynth {

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

enum class EmbedRole { Query, Document };

const char* role_name(EmbedRole role) noexcept;

// Scales `v` to unit L2 norm. Throws InvalidArgument on a zero vector.
void normalize(EmbeddingVector& v);
double l2_norm(const EmbeddingVector& v);

// Dot product of two unit vectors, clamped to [-1, 1].
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
    virtual EmbeddingVector embed(std::string_view text, EmbedRole role) const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                                     EmbedRole role) const;
};

// Hashed bag-of-words: lowercase alphanumeric tokens, each hashed into one of
// `dim` buckets with a +/-1 sign drawn from a second hash, then L2-normalized.
// Role is ignored so a query and an identical document embed identically.
class HashingProvider final : public EmbeddingProvider {
public:
    explicit HashingProvider(std::size_t dim);

    std::size_t dim() const override { return dim_; }
    std::string name() const override { return "hashing"; }
    EmbeddingVector embed(std::string_view text, EmbedRole role) const override;

private:
    std::size_t dim_;
};

std::vector<std::string> tokenize_words(std::string_view text);

struct RemoteEmbeddingOptions {
    std::string url;    // http://host:port/path
    std::string model;
    std::string token;  // resolved from the environment by the caller
    std::size_t dim = 768;
    std::size_t max_parallel = 4;
    std::size_t batch_size = 32;
    int timeout_seconds = 30;
};

// POSTs {"model", "texts", "role"} and expects {"vectors": [[...], ...]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingOptions options);
    ~RemoteEmbeddingProvider() override;

    std::size_t dim() const override { return options_.dim; }
    std::string name() const override { return "remote"; }
    EmbeddingVector embed(std::string_view text, EmbedRole role) const override;
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                             EmbedRole role) const override;

private:
    std::vector<EmbeddingVector> request(std::span<const std::string> texts, EmbedRole role) const;

    RemoteEmbeddingOptions options_;
    struct Gate;
    std::unique_ptr<Gate> gate_;
};

}  // namespace tapsynth
