#pragma once

#include <algorithm>
#include <vector>

#include "tmret/text.hpp"

namespace tmret {

/// A retrieved segment and the retriever's native score (Lev, BM25 or cosine).
struct ScoredId {
    SegmentId id = 0;
    double score = 0.0;

    bool operator==(const ScoredId&) const = default;
};

/// Ranking order used everywhere: score descending, then id ascending.
inline bool ranks_before(const ScoredId& lhs, const ScoredId& rhs) {
    if (lhs.score != rhs.score) return lhs.score > rhs.score;
    return lhs.id < rhs.id;
}

/// Keeps the best `k` of `items` under ranks_before, sorted.
inline void keep_top_k(std::vector<ScoredId>& items, std::size_t k) {
    if (items.size() > k) {
        std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(),
                          ranks_before);
        items.resize(k);
    } else {
        std::sort(items.begin(), items.end(), ranks_before);
    }
}

}  // namespace tmret
