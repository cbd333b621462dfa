#include "tmret/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tmret/error.hpp"

namespace tmret {

namespace {

double dcg(std::span<const double> gains) {
    double sum = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) sum += gains[i] / std::log2(static_cast<double>(i) + 2.0);
    return sum;
}

}  // namespace

double ndcg(std::span<const double> ranked_gains) {
    std::vector<double> ideal(ranked_gains.begin(), ranked_gains.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double best = dcg(ideal);
    if (!(best > 0.0)) return 1.0;
    return dcg(ranked_gains) / best;
}

double calibrate_threshold(std::span<const double> best_scores, double target_rate) {
    if (best_scores.empty()) throw Error("calibrate_threshold: no scores");
    if (!(target_rate > 0.0 && target_rate <= 1.0)) throw Error("calibrate_threshold: target rate must lie in (0, 1]");

    std::vector<double> sorted(best_scores.begin(), best_scores.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double n = static_cast<double>(sorted.size());

    // Walk distinct values from the top; the count of scores >= v grows as v
    // decreases, so the last admissible value is the smallest threshold.
    std::optional<double> chosen;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        if (static_cast<double>(j) / n > target_rate + 1e-12) break;
        chosen = sorted[i];
        i = j;
    }
    if (chosen) return *chosen;
    return std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
}

double retrieval_rate(std::span<const double> best_scores, double threshold) {
    if (best_scores.empty()) return 0.0;
    const auto hits = std::count_if(best_scores.begin(), best_scores.end(), [&](double s) { return s >= threshold; });
    return static_cast<double>(hits) / static_cast<double>(best_scores.size());
}

std::vector<std::optional<double>> top_hit_levs(const std::vector<std::vector<ScoredId>>& hits,
                                                std::span<const Segment> references,
                                                const std::unordered_map<SegmentId, const Segment*>& pool) {
    if (hits.size() != references.size())
        throw Error("lev_at_1: " + std::to_string(hits.size()) + " hit lists for " +
                    std::to_string(references.size()) + " references");
    std::vector<std::optional<double>> out(hits.size());
    for (std::size_t q = 0; q < hits.size(); ++q) {
        if (hits[q].empty()) continue;
        auto it = pool.find(hits[q].front().id);
        if (it == pool.end()) throw Error("lev_at_1: hit id " + std::to_string(hits[q].front().id) + " not in pool");
        out[q] = levenshtein_similarity(references[q].tokens, it->second->tokens);
    }
    return out;
}

std::optional<double> lev_at_1(std::span<const std::optional<double>> per_query) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& v : per_query) {
        if (!v) continue;
        sum += *v;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

double xsim_error(const Eigen::MatrixXd& source_vectors, const Eigen::MatrixXd& target_vectors) {
    if (source_vectors.rows() != target_vectors.rows() || source_vectors.cols() != target_vectors.cols())
        throw Error("xsim_error: source and target matrices differ in shape");
    const Eigen::Index n = source_vectors.rows();
    if (n < 2) throw Error("xsim_error: needs at least 2 pairs");
    const Eigen::MatrixXd sims = source_vectors * target_vectors.transpose();
    std::size_t errors = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < n; ++j)
            if (sims(i, j) > sims(i, best)) best = j;
        if (best != i) ++errors;
    }
    return 100.0 * static_cast<double>(errors) / static_cast<double>(n);
}

double xsim_error(const EncoderParams& params, const ParallelCorpus& eval_set) {
    const auto n = static_cast<Eigen::Index>(eval_set.size());
    if (n < 2) throw Error("xsim_error: needs at least 2 pairs");
    const auto d = static_cast<Eigen::Index>(params.dim());
    Eigen::MatrixXd src(n, d), tgt(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        src.row(i) = encode(params, eval_set.pairs[static_cast<std::size_t>(i)].source).transpose();
        tgt.row(i) = encode(params, eval_set.pairs[static_cast<std::size_t>(i)].target).transpose();
    }
    return xsim_error(src, tgt);
}

RetrievalReport make_report(const std::vector<std::vector<ScoredId>>& hits, std::span<const Segment> references,
                            const std::unordered_map<SegmentId, const Segment*>& pool) {
    RetrievalReport report;
    report.per_query_lev = top_hit_levs(hits, references, pool);
    report.mean_lev_at_1 = lev_at_1(report.per_query_lev);
    const auto with_hits = std::count_if(hits.begin(), hits.end(), [](const auto& h) { return !h.empty(); });
    report.retrieval_rate = hits.empty() ? 0.0 : static_cast<double>(with_hits) / static_cast<double>(hits.size());
    return report;
}

std::string RetrievalReport::to_json(const std::string& config_json) const {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json per_query = json::array();
    for (const auto& v : per_query_lev) per_query.push_back(opt(v));
    json j{{"mean_lev_at_1", opt(mean_lev_at_1)},
           {"xsim_error", opt(xsim_error)},
           {"retrieval_rate", retrieval_rate},
           {"ndcg", opt(ndcg)},
           {"num_queries", per_query_lev.size()},
           {"per_query_lev", per_query}};
    j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    return j.dump(2);
}

std::string RetrievalReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "query_index,lev\n";
    for (std::size_t q = 0; q < per_query_lev.size(); ++q) {
        out << q << ',';
        if (per_query_lev[q]) out << *per_query_lev[q];
        out << '\n';
    }
    return out.str();
}

}  // namespace tmret
