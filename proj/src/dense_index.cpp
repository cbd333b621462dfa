#include "tmret/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "binary_io.hpp"
#include "tmret/error.hpp"
#include "tmret/parallel.hpp"

namespace tmret {

namespace {

constexpr std::string_view kIndexMagic = "TMRVEC\0\0";
constexpr std::uint32_t kIndexVersion = 1;
constexpr double kUnitTolerance = 1e-6;
constexpr double kQueryUnitTolerance = 1e-3;

}  // namespace

double dot_f32(std::span<const float> lhs, std::span<const float> rhs) {
    double sum = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) sum += static_cast<double>(lhs[i]) * static_cast<double>(rhs[i]);
    return sum;
}

VectorIndex::VectorIndex(std::size_t dim, std::vector<SegmentId> ids, std::vector<float> rows)
    : dim_(dim), ids_(std::move(ids)), rows_(std::move(rows)) {
    if (dim_ == 0) throw Error("vector index: dimension must be >= 1");
    if (rows_.size() != ids_.size() * dim_) throw Error("vector index: matrix size does not match N x d");
    std::unordered_set<SegmentId> seen;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!seen.insert(ids_[i]).second) throw Error("vector index: duplicate id " + std::to_string(ids_[i]));
        const double norm = std::sqrt(dot_f32(row(i), row(i)));
        if (std::abs(norm - 1.0) > kUnitTolerance)
            throw Error("vector index: row " + std::to_string(i) + " is not unit-normalized (norm " +
                        std::to_string(norm) + ")");
    }
}

std::vector<ScoredId> VectorIndex::knn(std::span<const float> query, std::size_t k, double threshold) const {
    if (query.size() != dim_)
        throw Error("knn: query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                    std::to_string(dim_));
    if (k == 0) throw Error("knn: k must be >= 1");
    const double qnorm = std::sqrt(dot_f32(query, query));
    if (std::abs(qnorm - 1.0) > kQueryUnitTolerance) throw Error("knn: query is not a unit vector");

    // Bounded heap whose top is the worst kept hit.
    std::priority_queue<ScoredId, std::vector<ScoredId>, decltype(&ranks_before)> heap(&ranks_before);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const double s = dot_f32(query, row(i));
        if (s < threshold) continue;
        const ScoredId cand{ids_[i], s};
        if (heap.size() < k) {
            heap.push(cand);
        } else if (ranks_before(cand, heap.top())) {
            heap.pop();
            heap.push(cand);
        }
    }
    std::vector<ScoredId> out(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = heap.top();
        heap.pop();
    }
    return out;
}

std::vector<std::vector<ScoredId>> VectorIndex::knn_batch(std::span<const std::vector<float>> queries, std::size_t k,
                                                          double threshold, unsigned threads) const {
    std::vector<std::vector<ScoredId>> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) { out[i] = knn(queries[i], k, threshold); });
    return out;
}

void VectorIndex::save(const std::filesystem::path& path) const {
    detail::BinaryWriter w(path);
    w.bytes(kIndexMagic);
    w.fixed<std::uint32_t>(kIndexVersion);
    w.fixed<std::uint64_t>(ids_.size());
    w.fixed<std::uint64_t>(dim_);
    for (const SegmentId id : ids_) w.fixed<std::uint64_t>(id);
    for (const float v : rows_) w.fixed<float>(v);
    w.finish();
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    detail::BinaryReader r(path);
    r.expect_magic(kIndexMagic);
    const auto version = r.fixed<std::uint32_t>();
    if (version != kIndexVersion)
        throw Error("unsupported vector index version " + std::to_string(version) + " in " + path.string());
    const auto n = r.fixed<std::uint64_t>();
    const auto d = r.fixed<std::uint64_t>();
    std::vector<SegmentId> ids(n);
    for (auto& id : ids) id = r.fixed<std::uint64_t>();
    std::vector<float> rows(n * d);
    for (auto& v : rows) v = r.fixed<float>();
    if (!r.at_end()) throw Error("trailing bytes in vector index: " + path.string());
    return VectorIndex(d, std::move(ids), std::move(rows));
}

std::vector<float> encode_f32(const EncoderParams& params, const Segment& seg) {
    const Eigen::VectorXd e = encode(params, seg);
    std::vector<float> out(static_cast<std::size_t>(e.size()));
    for (Eigen::Index i = 0; i < e.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(e(i));
    return out;
}

VectorIndex build_index(const EncoderParams& params, std::span<const Segment> segments, unsigned threads) {
    if (segments.empty()) throw Error("build_index: empty pool");
    const std::size_t d = params.dim();
    std::vector<SegmentId> ids(segments.size());
    std::vector<float> rows(segments.size() * d);
    parallel_for(segments.size(), threads, [&](std::size_t i) {
        ids[i] = segments[i].id;
        const auto v = encode_f32(params, segments[i]);
        std::copy(v.begin(), v.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * d));
    });
    return VectorIndex(d, std::move(ids), std::move(rows));
}

VectorIndex build_index(const EncoderParams& params, const MonolingualPool& pool, unsigned threads) {
    return build_index(params, std::span<const Segment>(pool.segments), threads);
}

}  // namespace tmret
