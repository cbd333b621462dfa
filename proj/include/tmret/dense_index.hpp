#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tmret/corpus.hpp"
#include "tmret/encoder.hpp"
#include "tmret/scored.hpp"

namespace tmret {

/// Exact (flat) inner-product index over unit vectors stored as float32.
class VectorIndex {
public:
    VectorIndex() = default;
    /// Validates unit rows (1 ± 1e-6) and unique ids.
    VectorIndex(std::size_t dim, std::vector<SegmentId> ids, std::vector<float> rows);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<SegmentId>& ids() const { return ids_; }
    std::span<const float> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }
    const std::vector<float>& data() const { return rows_; }

    /// Top-k rows by inner product (cosine on unit vectors), descending, ties
    /// by ascending id; scores below `threshold` are dropped. Dot products
    /// accumulate in double in dimension order.
    std::vector<ScoredId> knn(std::span<const float> query, std::size_t k, double threshold = -1.0) const;

    /// Parallel over queries; output in query order.
    std::vector<std::vector<ScoredId>> knn_batch(std::span<const std::vector<float>> queries, std::size_t k,
                                                 double threshold = -1.0, unsigned threads = 0) const;

    /// Magic, version, N, d, ids (u64), row-major float32 matrix; little-endian.
    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

    bool operator==(const VectorIndex&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<SegmentId> ids_;
    std::vector<float> rows_;
};

/// Encodes as float32; the single place vectors are narrowed.
std::vector<float> encode_f32(const EncoderParams& params, const Segment& seg);

/// Row i = encode(params, segments[i]).
VectorIndex build_index(const EncoderParams& params, std::span<const Segment> segments, unsigned threads = 0);
VectorIndex build_index(const EncoderParams& params, const MonolingualPool& pool, unsigned threads = 0);

inline std::vector<ScoredId> knn(const VectorIndex& index, std::span<const float> query, std::size_t k,
                                 double threshold = -1.0) {
    return index.knn(query, k, threshold);
}

/// Dot product used by the index: double accumulation in index order.
double dot_f32(std::span<const float> lhs, std::span<const float> rhs);

}  // namespace tmret
