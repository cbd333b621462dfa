#include "tmret/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "binary_io.hpp"
#include "tmret/error.hpp"
#include "tmret/parallel.hpp"

namespace tmret {

namespace {

constexpr std::string_view kBm25Magic = "TMRBM25\0";
constexpr std::uint32_t kBm25Version = 1;

}  // namespace

Bm25Index Bm25Index::build(std::span<const Segment> collection, Bm25Params params) {
    if (collection.empty()) throw Error("build_bm25: empty collection");
    if (collection.size() > std::numeric_limits<std::uint32_t>::max())
        throw Error("build_bm25: collection too large");

    Bm25Index index;
    index.params_ = params;
    index.doc_ids_.reserve(collection.size());
    index.doc_len_.reserve(collection.size());

    std::uint64_t total_len = 0;
    std::map<TokenId, std::uint32_t> tf;
    for (std::size_t d = 0; d < collection.size(); ++d) {
        const Segment& seg = collection[d];
        index.doc_ids_.push_back(seg.id);
        index.doc_len_.push_back(static_cast<std::uint32_t>(seg.tokens.size()));
        total_len += seg.tokens.size();

        tf.clear();
        for (const Token& tok : seg.tokens) {
            auto [it, inserted] = index.token_index_.try_emplace(tok, static_cast<TokenId>(index.tokens_.size()));
            if (inserted) {
                index.tokens_.push_back(tok);
                index.postings_.emplace_back();
            }
            ++tf[it->second];
        }
        for (const auto& [tok, count] : tf)
            index.postings_[tok].push_back(Posting{static_cast<std::uint32_t>(d), count});
    }
    index.avg_len_ = static_cast<double>(total_len) / static_cast<double>(collection.size());
    index.finalize();
    return index;
}

void Bm25Index::finalize() {
    doc_norm_.resize(doc_len_.size());
    const double avg = avg_len_ > 0.0 ? avg_len_ : 1.0;
    for (std::size_t d = 0; d < doc_len_.size(); ++d)
        doc_norm_[d] = params_.k1 * (1.0 - params_.b + params_.b * doc_len_[d] / avg);
}

std::optional<TokenId> Bm25Index::lookup(const Token& token) const {
    auto it = token_index_.find(token);
    if (it == token_index_.end()) return std::nullopt;
    return it->second;
}

double Bm25Index::idf(TokenId token) const {
    const double n = static_cast<double>(doc_ids_.size());
    const double df = static_cast<double>(postings_.at(token).size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<TokenId> Bm25Index::intern(std::span<const Token> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const Token& tok : tokens) ids.push_back(lookup(tok).value_or(kUnknownToken));
    return ids;
}

std::vector<std::uint32_t> Bm25Index::top_n_docs(std::span<const TokenId> query, std::size_t n) const {
    if (n == 0) throw Error("bm25_topn: n must be >= 1");

    std::vector<TokenId> terms(query.begin(), query.end());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    thread_local std::vector<double> scores;
    thread_local std::vector<std::uint32_t> touched;
    if (scores.size() < doc_ids_.size()) scores.assign(doc_ids_.size(), 0.0);
    touched.clear();

    const double k1 = params_.k1;
    for (const TokenId term : terms) {
        if (term == kUnknownToken) continue;
        const double w = idf(term);
        for (const Posting& p : postings_[term]) {
            if (scores[p.doc] == 0.0) touched.push_back(p.doc);
            const double tf = p.tf;
            scores[p.doc] += w * tf * (k1 + 1.0) / (tf + doc_norm_[p.doc]);
        }
    }

    // A document with a matching term always has a positive score, so a zero
    // accumulator means "untouched".
    auto better = [&](std::uint32_t lhs, std::uint32_t rhs) {
        if (scores[lhs] != scores[rhs]) return scores[lhs] > scores[rhs];
        return doc_ids_[lhs] < doc_ids_[rhs];
    };
    if (touched.size() > n) {
        std::nth_element(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(n), touched.end(), better);
        touched.resize(n);
    }
    std::sort(touched.begin(), touched.end(), better);

    std::vector<std::uint32_t> out(touched.begin(), touched.end());
    // Reset only what we touched; the full buffer stays zeroed between calls.
    for (const TokenId term : terms) {
        if (term == kUnknownToken) continue;
        for (const Posting& p : postings_[term]) scores[p.doc] = 0.0;
    }
    return out;
}

std::vector<ScoredId> Bm25Index::top_n(std::span<const Token> query, std::size_t n) const {
    const std::vector<TokenId> ids = intern(query);
    std::vector<std::uint32_t> docs = top_n_docs(ids, n);

    // Recompute scores for the (few) selected documents.
    std::vector<TokenId> terms(ids);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    std::vector<ScoredId> out;
    out.reserve(docs.size());
    for (const std::uint32_t d : docs) {
        double score = 0.0;
        for (const TokenId term : terms) {
            if (term == kUnknownToken) continue;
            const auto& plist = postings_[term];
            auto it = std::lower_bound(plist.begin(), plist.end(), d,
                                       [](const Posting& p, std::uint32_t doc) { return p.doc < doc; });
            if (it == plist.end() || it->doc != d) continue;
            const double tf = it->tf;
            score += idf(term) * tf * (params_.k1 + 1.0) / (tf + doc_norm_[d]);
        }
        out.push_back(ScoredId{doc_ids_[d], score});
    }
    return out;
}

void Bm25Index::save(const std::filesystem::path& path) const {
    detail::BinaryWriter w(path);
    w.bytes(kBm25Magic);
    w.fixed<std::uint32_t>(kBm25Version);
    w.fixed<std::uint64_t>(doc_ids_.size());
    w.fixed<double>(avg_len_);
    w.fixed<double>(params_.k1);
    w.fixed<double>(params_.b);
    for (const SegmentId id : doc_ids_) w.varint(id);
    for (const std::uint32_t len : doc_len_) w.varint(len);
    w.varint(tokens_.size());
    for (const std::string& tok : tokens_) w.string(tok);
    for (const auto& plist : postings_) {
        w.varint(plist.size());
        std::uint32_t prev = 0;
        for (const Posting& p : plist) {
            w.varint(p.doc - prev);
            w.varint(p.tf);
            prev = p.doc;
        }
    }
    w.finish();
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
    detail::BinaryReader r(path);
    r.expect_magic(kBm25Magic);
    const auto version = r.fixed<std::uint32_t>();
    if (version != kBm25Version)
        throw Error("unsupported BM25 index version " + std::to_string(version) + " in " + path.string());

    Bm25Index index;
    const auto n = r.fixed<std::uint64_t>();
    index.avg_len_ = r.fixed<double>();
    index.params_.k1 = r.fixed<double>();
    index.params_.b = r.fixed<double>();
    index.doc_ids_.resize(n);
    index.doc_len_.resize(n);
    for (auto& id : index.doc_ids_) id = r.varint();
    for (auto& len : index.doc_len_) len = static_cast<std::uint32_t>(r.varint());
    const auto vocab = r.varint();
    index.tokens_.reserve(vocab);
    for (std::uint64_t t = 0; t < vocab; ++t) {
        index.tokens_.push_back(r.string());
        index.token_index_.emplace(index.tokens_.back(), static_cast<TokenId>(t));
    }
    index.postings_.resize(vocab);
    for (auto& plist : index.postings_) {
        const auto count = r.varint();
        plist.reserve(count);
        std::uint64_t doc = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            doc += r.varint();
            const auto tf = r.varint();
            if (doc >= n) throw Error("corrupt posting list in " + path.string());
            plist.push_back(Posting{static_cast<std::uint32_t>(doc), static_cast<std::uint32_t>(tf)});
        }
    }
    index.finalize();
    return index;
}

bool Bm25Index::operator==(const Bm25Index& o) const {
    return tokens_ == o.tokens_ && postings_ == o.postings_ && doc_len_ == o.doc_len_ &&
           doc_ids_ == o.doc_ids_ && avg_len_ == o.avg_len_ && params_.k1 == o.params_.k1 &&
           params_.b == o.params_.b;
}

FuzzyMatcher::FuzzyMatcher(std::span<const Segment> collection, Bm25Params params)
    : index_(Bm25Index::build(collection, params)) {
    intern_collection(collection);
}

FuzzyMatcher::FuzzyMatcher(Bm25Index index, std::span<const Segment> collection)
    : index_(std::move(index)) {
    if (collection.size() != index_.size())
        throw Error("lexical index covers " + std::to_string(index_.size()) + " segments, collection has " +
                    std::to_string(collection.size()));
    for (std::size_t d = 0; d < collection.size(); ++d) {
        if (collection[d].id != index_.doc_ids()[d] || collection[d].tokens.size() != index_.doc_lens()[d])
            throw Error("lexical index does not match collection at position " + std::to_string(d));
    }
    intern_collection(collection);
}

void FuzzyMatcher::intern_collection(std::span<const Segment> collection) {
    docs_.clear();
    docs_.reserve(collection.size());
    for (const Segment& seg : collection) docs_.push_back(index_.intern(seg.tokens));
}

FuzzyMatchResult FuzzyMatcher::match(const Segment& query, const FuzzyMatchOptions& options) const {
    if (options.k == 0) throw Error("fuzzy_match: k must be >= 1");
    if (!(options.threshold >= 0.0 && options.threshold <= 1.0))
        throw Error("fuzzy_match: threshold must lie in [0, 1]");

    const std::vector<TokenId> q = index_.intern(query.tokens);
    const auto& ids = index_.doc_ids();
    std::vector<ScoredId> hits;

    auto score_doc = [&](std::uint32_t d) {
        if (options.exclude_self && ids[d] == query.id) return;
        const double lev = levenshtein_similarity(std::span<const TokenId>(q), std::span<const TokenId>(docs_[d]));
        if (lev >= options.threshold) hits.push_back(ScoredId{ids[d], lev});
    };

    if (!options.prefilter_n) {
        hits.reserve(docs_.size());
        for (std::uint32_t d = 0; d < docs_.size(); ++d) score_doc(d);
    } else {
        const std::size_t n = *options.prefilter_n + (options.exclude_self ? 1 : 0);
        std::vector<std::uint32_t> docs = index_.top_n_docs(q, n);
        std::size_t kept = 0;
        for (const std::uint32_t d : docs) {
            if (options.exclude_self && ids[d] == query.id) continue;
            if (kept++ == *options.prefilter_n) break;
            score_doc(d);
        }
    }
    keep_top_k(hits, options.k);
    return FuzzyMatchResult{query.id, std::move(hits)};
}

std::vector<FuzzyMatchResult> FuzzyMatcher::match_batch(std::span<const Segment> queries,
                                                        const FuzzyMatchOptions& options,
                                                        unsigned threads) const {
    std::vector<FuzzyMatchResult> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) { out[i] = match(queries[i], options); });
    return out;
}

}  // namespace tmret
