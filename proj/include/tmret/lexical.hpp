#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tmret/scored.hpp"
#include "tmret/text.hpp"

namespace tmret {

using TokenId = std::uint32_t;

/// Query tokens absent from the index vocabulary. Never equal to a document token.
inline constexpr TokenId kUnknownToken = std::numeric_limits<TokenId>::max();

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;  ///< position in the indexed collection, < N
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Inverted index over a segment collection.
///
/// Scoring is Okapi BM25 with the non-negative idf
///   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
/// summed over the distinct query tokens:
///   score(d) = sum_t idf(t) * tf (k1 + 1) / (tf + k1 (1 - b + b |d| / avg_len)).
class Bm25Index {
public:
    static Bm25Index build(std::span<const Segment> collection, Bm25Params params = {});

    /// Top-n collection segments by BM25, ties by ascending segment id.
    /// Segments sharing no token with the query never appear.
    std::vector<ScoredId> top_n(std::span<const Token> query, std::size_t n) const;

    /// Same ranking, reported as collection positions.
    std::vector<std::uint32_t> top_n_docs(std::span<const TokenId> query, std::size_t n) const;

    std::size_t size() const { return doc_ids_.size(); }
    std::size_t vocab_size() const { return tokens_.size(); }
    double avg_len() const { return avg_len_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<SegmentId>& doc_ids() const { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lens() const { return doc_len_; }
    const std::vector<std::string>& token_table() const { return tokens_; }

    std::optional<TokenId> lookup(const Token& token) const;
    std::span<const Posting> postings(TokenId token) const { return postings_.at(token); }
    double idf(TokenId token) const;

    /// Maps tokens to ids, unknown tokens to kUnknownToken.
    std::vector<TokenId> intern(std::span<const Token> tokens) const;

    /// Little-endian, versioned: magic, version, N, avg_len, k1, b, doc ids,
    /// doc lengths, token table, then varint delta-coded posting lists.
    void save(const std::filesystem::path& path) const;
    static Bm25Index load(const std::filesystem::path& path);

    bool operator==(const Bm25Index& o) const;

private:
    void finalize();

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> token_index_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_len_;
    std::vector<SegmentId> doc_ids_;
    std::vector<double> doc_norm_;  // k1 (1 - b + b |d| / avg_len), derived
    double avg_len_ = 0.0;
    Bm25Params params_;
};

/// bm25 contract spelled out as free functions.
inline Bm25Index build_bm25(std::span<const Segment> collection, Bm25Params params = {}) {
    return Bm25Index::build(collection, params);
}
inline std::vector<ScoredId> bm25_topn(const Bm25Index& index, std::span<const Token> query,
                                       std::size_t n) {
    return index.top_n(query, n);
}

struct FuzzyMatchOptions {
    std::size_t k = 3;
    /// BM25 candidates to rescore; nullopt rescans the whole collection (exact mode).
    std::optional<std::size_t> prefilter_n;
    /// Hits with Lev below this are dropped.
    double threshold = 0.0;
    /// Skip collection segments whose id equals the query id (querying a
    /// collection with its own members).
    bool exclude_self = false;
};

struct FuzzyMatchResult {
    SegmentId query_id = 0;
    /// Lev descending, ties by ascending id; at most k entries.
    std::vector<ScoredId> hits;

    bool operator==(const FuzzyMatchResult&) const = default;
};

/// BM25 index plus interned token sequences of the same collection, so that
/// Levenshtein rescoring runs on integer ids.
class FuzzyMatcher {
public:
    explicit FuzzyMatcher(std::span<const Segment> collection, Bm25Params params = {});
    /// Pairs a previously saved index with its collection; throws if the
    /// collection's ids or lengths disagree with the index.
    FuzzyMatcher(Bm25Index index, std::span<const Segment> collection);

    FuzzyMatchResult match(const Segment& query, const FuzzyMatchOptions& options) const;

    /// Parallel over queries, output in query order.
    std::vector<FuzzyMatchResult> match_batch(std::span<const Segment> queries,
                                              const FuzzyMatchOptions& options,
                                              unsigned threads = 0) const;

    const Bm25Index& index() const { return index_; }
    std::size_t size() const { return docs_.size(); }

private:
    void intern_collection(std::span<const Segment> collection);

    Bm25Index index_;
    std::vector<std::vector<TokenId>> docs_;
};

inline FuzzyMatchResult fuzzy_match(const FuzzyMatcher& matcher, const Segment& query,
                                    const FuzzyMatchOptions& options) {
    return matcher.match(query, options);
}

}  // namespace tmret
