#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tmret/corpus.hpp"
#include "tmret/encoder.hpp"
#include "tmret/scored.hpp"

namespace tmret {

/// DCG of `ranked_gains` (log2(rank + 1) discount, rank from 1) over the DCG
/// of the same gains sorted descending. 1 when no gain is positive.
double ndcg(std::span<const double> ranked_gains);

/// Smallest observed score t such that the fraction of scores >= t is at
/// most `target_rate`. When even the maximum is too permissive (heavy ties at
/// the top) the result lies just above the maximum and nothing is retrieved.
double calibrate_threshold(std::span<const double> best_scores, double target_rate);

/// Fraction of scores >= threshold.
double retrieval_rate(std::span<const double> best_scores, double threshold);

/// Per-query Lev(reference, top hit); nullopt for queries without hits.
/// Throws when a hit id is absent from `pool`.
std::vector<std::optional<double>> top_hit_levs(const std::vector<std::vector<ScoredId>>& hits,
                                                std::span<const Segment> references,
                                                const std::unordered_map<SegmentId, const Segment*>& pool);

/// Mean over queries with a hit; nullopt when no query has one.
std::optional<double> lev_at_1(std::span<const std::optional<double>> per_query);

/// Percentage of rows i whose nearest target row (inner product, ties to
/// the lowest index) is not row i. Rows must be unit vectors.
double xsim_error(const Eigen::MatrixXd& source_vectors, const Eigen::MatrixXd& target_vectors);
double xsim_error(const EncoderParams& params, const ParallelCorpus& eval_set);

struct RetrievalReport {
    std::vector<std::optional<double>> per_query_lev;
    std::optional<double> mean_lev_at_1;
    std::optional<double> xsim_error;
    double retrieval_rate = 0.0;
    std::optional<double> ndcg;

    /// JSON object with every field plus `config` (a serialized JSON value).
    std::string to_json(const std::string& config_json = "") const;
    /// query_index,lev rows; empty lev for queries without hits.
    std::string to_csv() const;
};

RetrievalReport make_report(const std::vector<std::vector<ScoredId>>& hits, std::span<const Segment> references,
                            const std::unordered_map<SegmentId, const Segment*>& pool);

}  // namespace tmret
