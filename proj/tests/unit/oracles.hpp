#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace tmret::oracle {

/// Edit distance by direct recursion on suffixes (memoized).
template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
        const std::size_t r = std::min({rec(i + 1, j) + 1, rec(i, j + 1) + 1, rec(i + 1, j + 1) + (a[i] == b[j] ? 0u : 1u)});
        memo[{i, j}] = r;
        return r;
    };
    return rec(0, 0);
}

/// Okapi BM25 straight from the formula, one document at a time.
inline double bm25(const std::vector<std::vector<std::string>>& docs, std::size_t d,
                   const std::vector<std::string>& query, double k1 = 1.2, double b = 0.75) {
    double avg = 0.0;
    for (const auto& doc : docs) avg += double(doc.size());
    avg /= double(docs.size());
    std::vector<std::string> terms = query;
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    double score = 0.0;
    for (const auto& t : terms) {
        double df = 0.0;
        for (const auto& doc : docs) df += std::count(doc.begin(), doc.end(), t) > 0;
        const double tf = double(std::count(docs[d].begin(), docs[d].end(), t));
        if (tf == 0) continue;
        const double idf = std::log(1.0 + (double(docs.size()) - df + 0.5) / (df + 0.5));
        score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * double(docs[d].size()) / avg));
    }
    return score;
}

}  // namespace tmret::oracle
