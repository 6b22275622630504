#include "tapsynth/vector_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "tapsynth/error.hpp"

namespace tapsynth {

namespace {

constexpr const char* kBinaryMagic = "TAPVEC1";
constexpr const char* kTextMagic = "TAPVEC1-TEXT";
constexpr double kNormTolerance = 1e-4;

bool candidate_before(const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.entry_id < b.entry_id;
}

}  // namespace

VectorIndex build_index(const Catalog& catalog, FunctionKind kind, const EmbeddingProvider& provider) {
    const auto& entries = catalog.entries(kind);
    if (entries.empty()) {
        throw Error(ErrorCode::InvalidArgument, std::string("empty ") + kind_name(kind) + " catalog");
    }
    std::vector<std::string> texts;
    texts.reserve(entries.size());
    for (const auto& e : entries) texts.push_back(render_text(e));

    std::vector<EmbeddingVector> vectors;
    try {
        vectors = provider.embed_batch(texts, EmbedRole::Document);
    } catch (const Error& batch_error) {
        // Re-run one at a time so the error names the failing entry.
        for (std::size_t i = 0; i < entries.size(); ++i) {
            try {
                provider.embed(texts[i], EmbedRole::Document);
            } catch (const Error& e) {
                throw Error(e.code(), "embedding entry '" + entries[i].id + "': " + e.what());
            }
        }
        throw;
    }

    VectorIndex index;
    index.kind = kind;
    index.dim = provider.dim();
    index.records.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (vectors[i].dim() != index.dim) {
            throw Error(ErrorCode::DimMismatch, "entry '" + entries[i].id + "' embedded with dim " +
                                                    std::to_string(vectors[i].dim()) + ", index dim " +
                                                    std::to_string(index.dim));
        }
        index.records.push_back({entries[i].id, std::move(vectors[i])});
    }
    return index;
}

std::vector<Candidate> search(const VectorIndex& index, const EmbeddingVector& query, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "search requires k >= 1");
    if (query.dim() != index.dim) {
        throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.dim()) +
                                                " does not match index dim " + std::to_string(index.dim));
    }
    std::vector<Candidate> all;
    all.reserve(index.records.size());
    for (const auto& r : index.records) all.push_back({r.entry_id, cosine(query, r.vector), 0});

    const std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), candidate_before);
    all.resize(n);
    for (std::size_t i = 0; i < n; ++i) all[i].rank = static_cast<int>(i + 1);
    return all;
}

// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string header(const char* magic, const VectorIndex& index) {
    return std::string(magic) + " " + kind_name(index.kind) + " " + std::to_string(index.dim) + " " +
           std::to_string(index.records.size()) + "\n";
}

[[noreturn]] void corrupt(const std::string& why) {
    throw Error(ErrorCode::CorruptFile, "corrupt vector file: " + why);
}

}  // namespace

std::string export_vectors(const VectorIndex& index, VectorFileFormat format) {
    std::string out;
    if (format == VectorFileFormat::Binary) {
        out = header(kBinaryMagic, index);
        for (const auto& r : index.records) {
            put_u32(out, static_cast<std::uint32_t>(r.entry_id.size()));
            out += r.entry_id;
            for (float x : r.vector.values) put_u32(out, std::bit_cast<std::uint32_t>(x));
        }
        return out;
    }
    out = header(kTextMagic, index);
    char buf[32];
    for (const auto& r : index.records) {
        if (r.entry_id.find_first_of(" \t\r\n") != std::string::npos) {
            throw Error(ErrorCode::InvalidArgument,
                        "id '" + r.entry_id + "' contains whitespace; use the binary format");
        }
        out += r.entry_id;
        for (float x : r.vector.values) {
            std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

void export_vectors_to_file(const VectorIndex& index, const std::string& path, VectorFileFormat format) {
    const std::string bytes = export_vectors(index, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to '" + path + "'");
}

VectorIndex import_vectors(const std::string& bytes, const Catalog* catalog, std::size_t expected_dim) {
    const auto eol = bytes.find('\n');
    if (eol == std::string::npos) corrupt("missing header line");
    std::istringstream head(bytes.substr(0, eol));
    std::string magic, kind;
    long long dim = -1, count = -1;
    if (!(head >> magic >> kind >> dim >> count) || dim <= 0 || count < 0) corrupt("malformed header");
    std::string trailing;
    if (head >> trailing) corrupt("malformed header");

    VectorIndex index;
    try {
        index.kind = parse_kind(kind);
    } catch (const Error&) {
        corrupt("unknown kind '" + kind + "'");
    }
    index.dim = static_cast<std::size_t>(dim);
    if (expected_dim != 0 && index.dim != expected_dim) {
        throw Error(ErrorCode::DimMismatch, "vector file dim " + std::to_string(index.dim) +
                                                " does not match expected dim " + std::to_string(expected_dim));
    }

    std::size_t pos = eol + 1;
    if (magic == kBinaryMagic) {
        const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
        for (long long r = 0; r < count; ++r) {
            if (bytes.size() - pos < 4) corrupt("truncated at record " + std::to_string(r));
            const std::uint32_t id_len = get_u32(data + pos);
            pos += 4;
            if (bytes.size() - pos < id_len + 4 * index.dim) corrupt("truncated at record " + std::to_string(r));
            EmbeddingRecord rec;
            rec.entry_id = bytes.substr(pos, id_len);
            pos += id_len;
            rec.vector.values.resize(index.dim);
            for (std::size_t i = 0; i < index.dim; ++i, pos += 4) {
                rec.vector.values[i] = std::bit_cast<float>(get_u32(data + pos));
            }
            index.records.push_back(std::move(rec));
        }
        if (pos != bytes.size()) corrupt("trailing bytes after last record");
    } else if (magic == kTextMagic) {
        std::istringstream body(bytes.substr(pos));
        std::string line;
        long long r = 0;
        while (std::getline(body, line)) {
            if (line.empty()) continue;
            if (r >= count) corrupt("more records than the header declares");
            std::istringstream ls(line);
            EmbeddingRecord rec;
            ls >> rec.entry_id;
            std::string tok;
            while (ls >> tok) {
                char* end = nullptr;
                const float x = std::strtof(tok.c_str(), &end);
                if (end != tok.c_str() + tok.size()) corrupt("bad number '" + tok + "'");
                rec.vector.values.push_back(x);
            }
            if (rec.vector.dim() != index.dim) {
                throw Error(ErrorCode::DimMismatch, "record '" + rec.entry_id + "' has " +
                                                        std::to_string(rec.vector.dim()) + " values, header dim " +
                                                        std::to_string(index.dim));
            }
            index.records.push_back(std::move(rec));
            ++r;
        }
        if (r != count) corrupt("truncated: expected " + std::to_string(count) + " records, found " + std::to_string(r));
    } else {
        corrupt("bad magic '" + magic + "'");
    }

    std::set<std::string_view> seen;
    for (const auto& rec : index.records) {
        if (!seen.insert(rec.entry_id).second) corrupt("duplicate record for '" + rec.entry_id + "'");
        const double n = l2_norm(rec.vector);
        if (!std::isfinite(n) || std::abs(n - 1.0) > kNormTolerance) {
            corrupt("record '" + rec.entry_id + "' is not unit-normalized");
        }
        if (catalog) {
            const FunctionEntry* e = catalog->find(rec.entry_id);
            if (!e) throw Error(ErrorCode::UnknownId, "vector file names unknown entry '" + rec.entry_id + "'");
            if (e->kind != index.kind) {
                throw Error(ErrorCode::KindMismatch, "entry '" + rec.entry_id + "' is not a " + kind_name(index.kind));
            }
        }
    }
    if (catalog) {
        for (const auto& e : catalog->entries(index.kind)) {
            if (!seen.count(e.id)) throw Error(ErrorCode::NotFound, "vector file has no record for '" + e.id + "'");
        }
    }
    return index;
}

VectorIndex import_vectors_from_file(const std::string& path, const Catalog* catalog, std::size_t expected_dim) {
    return import_vectors(read_text_file(path), catalog, expected_dim);
}

}  // namespace tapsynth
