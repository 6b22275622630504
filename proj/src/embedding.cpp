#include "tapsynth/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <future>
#include <semaphore>

#include "http_util.hpp"
#include "httplib.h"
#include "json.hpp"
#include "tapsynth/error.hpp"

namespace tapsynth {

const char* role_name(EmbedRole role) noexcept {
    return role == EmbedRole::Query ? "query" : "document";
}

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (float x : v.values) sum += static_cast<double>(x) * x;
    return std::sqrt(sum);
}

void normalize(EmbeddingVector& v) {
    const double n = l2_norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero or non-finite vector");
    }
    for (float& x : v.values) x = static_cast<float>(x / n);
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim()) {
        throw Error(ErrorCode::DimMismatch, "cosine of vectors with dims " + std::to_string(u.dim()) +
                                                " and " + std::to_string(v.dim()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += static_cast<double>(u.values[i]) * v.values[i];
    }
    return std::clamp(dot, -1.0, 1.0);
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(std::span<const std::string> texts,
                                                            EmbedRole role) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t, role));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t kBucketBasis = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kSignBasis = 0x84222325cbf29ce4ULL;

}  // namespace

HashingProvider::HashingProvider(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
}

EmbeddingVector HashingProvider::embed(std::string_view text, EmbedRole /*role*/) const {
    const auto tokens = tokenize_words(text);
    if (tokens.empty()) {
        throw Error(ErrorCode::InvalidArgument, "text has no alphanumeric tokens to embed");
    }
    EmbeddingVector v;
    v.values.assign(dim_, 0.0f);
    for (const auto& tok : tokens) {
        const std::size_t bucket = fnv1a(tok, kBucketBasis) % dim_;
        const float sign = (fnv1a(tok, kSignBasis) >> 63) ? -1.0f : 1.0f;
        v.values[bucket] += sign;
    }
    // Every token can cancel out when collisions pair opposite signs.
    if (l2_norm(v) == 0.0) v.values[fnv1a(tokens.front(), kBucketBasis) % dim_] = 1.0f;
    normalize(v);
    return v;
}

// ---------------------------------------------------------------------------

struct RemoteEmbeddingProvider::Gate {
    explicit Gate(std::ptrdiff_t n) : slots(n) {}
    std::counting_semaphore<1024> slots;
};

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingOptions options)
    : options_(std::move(options)) {
    if (options_.dim == 0) throw Error(ErrorCode::Config, "remote embedding dim must be positive");
    if (options_.max_parallel == 0) options_.max_parallel = 1;
    if (options_.batch_size == 0) options_.batch_size = 1;
    gate_ = std::make_unique<Gate>(static_cast<std::ptrdiff_t>(std::min<std::size_t>(options_.max_parallel, 1024)));
    detail::split_url(options_.url, ErrorCode::Config);
}

RemoteEmbeddingProvider::~RemoteEmbeddingProvider() = default;

std::vector<EmbeddingVector> RemoteEmbeddingProvider::request(std::span<const std::string> texts,
                                                              EmbedRole role) const {
    const auto endpoint = detail::split_url(options_.url, ErrorCode::Config);
    nlohmann::json body;
    body["model"] = options_.model;
    body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
    body["role"] = role_name(role);

    httplib::Headers headers;
    if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);

    gate_->slots.acquire();
    httplib::Result res;
    {
        httplib::Client client(endpoint.base);
        client.set_connection_timeout(options_.timeout_seconds, 0);
        client.set_read_timeout(options_.timeout_seconds, 0);
        res = client.Post(endpoint.path, headers, body.dump(), "application/json");
    }
    gate_->slots.release();

    if (!res) {
        throw Error(ErrorCode::Provider, "embedding provider unavailable at " + options_.url + ": " +
                                             httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::Provider, "embedding provider returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Provider, std::string("malformed embedding response: ") + e.what());
    }
    if (!reply.contains("vectors") || !reply["vectors"].is_array() ||
        reply["vectors"].size() != texts.size()) {
        throw Error(ErrorCode::Provider, "embedding response must carry one vector per text");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& row : reply["vectors"]) {
        if (!row.is_array()) throw Error(ErrorCode::Provider, "embedding row is not an array");
        if (row.size() != options_.dim) {
            throw Error(ErrorCode::DimMismatch, "provider returned a " + std::to_string(row.size()) +
                                                    "-dim vector, expected " + std::to_string(options_.dim));
        }
        EmbeddingVector v;
        v.values.reserve(row.size());
        for (const auto& x : row) {
            if (!x.is_number()) throw Error(ErrorCode::Provider, "embedding value is not a number");
            v.values.push_back(x.get<float>());
        }
        normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

EmbeddingVector RemoteEmbeddingProvider::embed(std::string_view text, EmbedRole role) const {
    if (text.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
    const std::string owned(text);
    return request(std::span<const std::string>(&owned, 1), role).front();
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed_batch(std::span<const std::string> texts,
                                                                  EmbedRole role) const {
    std::vector<std::future<std::vector<EmbeddingVector>>> chunks;
    for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
        const auto len = std::min(options_.batch_size, texts.size() - start);
        chunks.push_back(std::async(std::launch::async, [this, texts, start, len, role] {
            return request(texts.subspan(start, len), role);
        }));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& c : chunks) {
        auto part = c.get();
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace tapsynth
