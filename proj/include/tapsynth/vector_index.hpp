#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tapsynth/catalog.hpp"
#include "tapsynth/embedding.hpp"

namespace tapsynth {

struct EmbeddingRecord {
    FunctionId entry_id;
    EmbeddingVector vector;

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct VectorIndex {
    FunctionKind kind = FunctionKind::Trigger;
    std::size_t dim = 0;
    std::vector<EmbeddingRecord> records;

    friend bool operator==(const VectorIndex&, const VectorIndex&) = default;
};

struct Candidate {
    FunctionId entry_id;
    double similarity = 0.0;
    int rank = 0;  // 1-based

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Embeds render_text(entry) for every entry of `kind` with role=Document.
VectorIndex build_index(const Catalog& catalog, FunctionKind kind, const EmbeddingProvider& provider);

// Exact top-k by cosine; ties broken by ascending entry_id.
std::vector<Candidate> search(const VectorIndex& index, const EmbeddingVector& query, std::size_t k);

enum class VectorFileFormat { Binary, Text };

// Binary layout: "TAPVEC1 <kind> <dim> <count>\n", then per record a
// little-endian u32 id length, the id bytes and `dim` little-endian float32.
// Text layout: "TAPVEC1-TEXT <kind> <dim> <count>\n", then one line per
// record: id followed by space-separated decimals.
std::string export_vectors(const VectorIndex& index, VectorFileFormat format = VectorFileFormat::Binary);
void export_vectors_to_file(const VectorIndex& index, const std::string& path,
                            VectorFileFormat format = VectorFileFormat::Binary);

// Accepts either layout. When `catalog` is given, every record must name an
// entry of the file's kind and every such entry must have a record.
VectorIndex import_vectors(const std::string& bytes, const Catalog* catalog = nullptr,
                           std::size_t expected_dim = 0);
VectorIndex import_vectors_from_file(const std::string& path, const Catalog* catalog = nullptr,
                                     std::size_t expected_dim = 0);

}  // namespace tapsynth
