#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tmret/lexical.hpp"

using namespace tmret;
namespace fs = std::filesystem;

namespace {

std::vector<Segment> collection(std::initializer_list<const char*> texts, SegmentId first_id = 0) {
    std::vector<Segment> out;
    for (const char* t : texts) out.push_back(make_segment(first_id++, "t", t));
    return out;
}

std::vector<Segment> random_collection(std::mt19937_64& rng, std::size_t n, int vocab, SegmentId first_id = 0) {
    std::vector<Segment> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> toks(std::uniform_int_distribution<std::size_t>(1, 10)(rng));
        for (auto& t : toks) t = "w" + std::to_string(std::uniform_int_distribution<int>(0, vocab - 1)(rng));
        out.push_back(make_segment(first_id + i, "t", join_tokens(toks)));
    }
    return out;
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("tmret_lexical_" + name); }

}  // namespace

TEST(Bm25, Singleton) {
    const auto c = collection({"a b"});
    const Bm25Index idx = build_bm25(c);
    EXPECT_EQ(idx.size(), 1u);
    EXPECT_DOUBLE_EQ(idx.avg_len(), 2.0);
    ASSERT_TRUE(idx.lookup("a").has_value());
    EXPECT_EQ(idx.postings(*idx.lookup("a")).size(), 1u);
    EXPECT_EQ(idx.postings(*idx.lookup("b")).size(), 1u);
}

TEST(Bm25, DuplicatesGetDistinctPostings) {
    const auto c = collection({"a b", "a b"});
    const Bm25Index idx = build_bm25(c);
    const auto p = idx.postings(*idx.lookup("a"));
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NE(p[0].doc, p[1].doc);
}

TEST(Bm25, EmptyCollectionThrows) {
    EXPECT_THROW(build_bm25(std::vector<Segment>{}), std::exception);
}

TEST(Bm25, MatchesHandFormulaOnToyCollection) {
    const auto c = collection({"the cat sat on the mat", "the dog sat", "a cat and a dog played"});
    std::vector<std::vector<std::string>> docs;
    for (const auto& s : c) docs.push_back(s.tokens);
    const Bm25Index idx = build_bm25(c);
    for (const auto* q : {"cat", "the cat", "dog sat sat", "mat played", "the the"}) {
        const auto query = tokenize(q);
        const auto hits = bm25_topn(idx, query, 10);
        for (const auto& h : hits) EXPECT_NEAR(h.score, oracle::bm25(docs, h.id, query), 1e-12) << q;
        std::size_t overlapping = 0;
        for (std::size_t d = 0; d < docs.size(); ++d) overlapping += oracle::bm25(docs, d, query) > 0;
        EXPECT_EQ(hits.size(), overlapping) << q;
    }
}

TEST(Bm25, RandomCollectionsMatchFormulaAndOrder) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_collection(rng, 40, 15);
        std::vector<std::vector<std::string>> docs;
        for (const auto& s : c) docs.push_back(s.tokens);
        const Bm25Index idx = build_bm25(c);
        const auto query = random_collection(rng, 1, 20).front().tokens;
        std::vector<ScoredId> all;
        for (std::size_t d = 0; d < docs.size(); ++d) {
            const double s = oracle::bm25(docs, d, query);
            if (s > 0) all.push_back({SegmentId(d), s});
        }
        const auto hits = bm25_topn(idx, query, 7);
        ASSERT_EQ(hits.size(), std::min<std::size_t>(7, all.size()));
        for (std::size_t i = 0; i < hits.size(); ++i) {
            EXPECT_NEAR(hits[i].score, oracle::bm25(docs, hits[i].id, query), 1e-12);
            if (i > 0) {
                EXPECT_TRUE(ranks_before(hits[i - 1], hits[i]));
            }
        }
        // Nothing outside the result outranks its last entry.
        for (const auto& a : all) {
            if (std::find_if(hits.begin(), hits.end(), [&](auto& h) { return h.id == a.id; }) == hits.end()) {
                ASSERT_FALSE(hits.empty());
                EXPECT_LE(a.score, hits.back().score + 1e-12);
            }
        }
    }
}

TEST(Bm25, UniqueDocumentQueryRanksFirst) {
    const auto c = collection({"red green blue", "red red", "green yellow", "blue sky"});
    const Bm25Index idx = build_bm25(c);
    const auto hits = bm25_topn(idx, c[0].tokens, 3);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits.front().id, 0u);
}

TEST(Bm25, NoOverlapAndTruncation) {
    const auto c = collection({"a b", "b c"});
    const Bm25Index idx = build_bm25(c);
    EXPECT_TRUE(bm25_topn(idx, tokenize("zzz"), 5).empty());
    EXPECT_EQ(bm25_topn(idx, tokenize("b"), 10).size(), 2u);
    EXPECT_THROW(bm25_topn(idx, tokenize("b"), 0), std::exception);
}

TEST(Bm25, TiesByAscendingId) {
    const auto c = collection({"x y", "x y", "x y"}, 5);
    const auto hits = bm25_topn(build_bm25(c), tokenize("x"), 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].id, 5u);
    EXPECT_EQ(hits[1].id, 6u);
    EXPECT_EQ(hits[2].id, 7u);
}

TEST(Bm25, SaveLoadRoundTrip) {
    std::mt19937_64 rng(4);
    const auto c = random_collection(rng, 200, 50, 1000);
    const Bm25Index idx = build_bm25(c, {1.5, 0.6});
    const auto path = temp_file("rt.bin");
    idx.save(path);
    const Bm25Index back = Bm25Index::load(path);
    EXPECT_TRUE(back == idx);
    const auto q = c[3].tokens;
    EXPECT_EQ(back.top_n(q, 10), idx.top_n(q, 10));

    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 3);
    EXPECT_THROW(Bm25Index::load(path), std::exception);
    std::ofstream(path, std::ios::binary) << "not an index";
    EXPECT_THROW(Bm25Index::load(path), std::exception);
    fs::remove(path);
}

TEST(FuzzyMatch, ExactMatchAndThreshold) {
    const auto c = collection({"a b c d", "a b x d", "q r s"});
    const FuzzyMatcher m(c);
    FuzzyMatchOptions o;
    o.k = 1;
    const auto r = fuzzy_match(m, make_segment(99, "t", "a b c d"), o);
    ASSERT_EQ(r.hits.size(), 1u);
    EXPECT_EQ(r.hits[0].id, 0u);
    EXPECT_DOUBLE_EQ(r.hits[0].score, 1.0);

    o.threshold = 1.0;
    EXPECT_TRUE(fuzzy_match(m, make_segment(99, "t", "a b c e"), o).hits.empty());
}

TEST(FuzzyMatch, ExcludeSelf) {
    const auto c = collection({"a b c", "a b c", "a b"});
    const FuzzyMatcher m(c);
    FuzzyMatchOptions o;
    o.k = 3;
    o.exclude_self = true;
    for (auto prefilter : {std::optional<std::size_t>{}, std::optional<std::size_t>{1}}) {
        o.prefilter_n = prefilter;
        const auto r = m.match(c[0], o);
        ASSERT_FALSE(r.hits.empty());
        EXPECT_EQ(r.hits[0].id, 1u);
        for (const auto& h : r.hits) EXPECT_NE(h.id, 0u);
    }
}

TEST(FuzzyMatch, InvalidOptions) {
    const FuzzyMatcher m(collection({"a"}));
    FuzzyMatchOptions o;
    o.k = 0;
    EXPECT_THROW(m.match(make_segment(0, "t", "a"), o), std::exception);
    o.k = 1;
    o.threshold = 1.5;
    EXPECT_THROW(m.match(make_segment(0, "t", "a"), o), std::exception);
}

TEST(FuzzyMatch, ExactModeEqualsBruteForce) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto c = random_collection(rng, std::uniform_int_distribution<std::size_t>(1, 200)(rng), 8);
        const FuzzyMatcher m(c);
        FuzzyMatchOptions o;
        o.k = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
        o.threshold = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
        const auto q = random_collection(rng, 1, 8, 5000).front();
        std::vector<ScoredId> all;
        for (const auto& s : c) {
            const double lev = 1.0 - double(oracle::edit_distance(q.tokens, s.tokens)) /
                                         double(std::max(q.tokens.size(), s.tokens.size()));
            if (lev >= o.threshold) all.push_back({s.id, lev});
        }
        std::sort(all.begin(), all.end(), ranks_before);
        if (all.size() > o.k) all.resize(o.k);
        const auto got = m.match(q, o).hits;
        ASSERT_EQ(got.size(), all.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].id, all[i].id);
            EXPECT_NEAR(got[i].score, all[i].score, 1e-12);
        }
    }
}

TEST(FuzzyMatch, PrefilterAgreesWithExactOnRandomCollection) {
    std::mt19937_64 rng(41);
    const auto c = random_collection(rng, 1000, 300);
    const FuzzyMatcher m(c);
    FuzzyMatchOptions exact, pre;
    exact.k = pre.k = 1;
    pre.prefilter_n = 100;
    std::size_t agree = 0;
    for (int i = 0; i < 200; ++i) {
        auto toks = c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)].tokens;
        toks.push_back("w" + std::to_string(std::uniform_int_distribution<int>(0, 299)(rng)));
        const Segment q = make_segment(100000 + i, "t", join_tokens(toks));
        agree += m.match(q, exact).hits.front().score == m.match(q, pre).hits.front().score;
    }
    EXPECT_GE(agree, 190u);
}

TEST(FuzzyMatch, RaisingThresholdNeverAddsHits) {
    std::mt19937_64 rng(51);
    const auto c = random_collection(rng, 150, 10);
    const FuzzyMatcher m(c);
    for (int i = 0; i < 50; ++i) {
        const auto q = random_collection(rng, 1, 10, 9000).front();
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            FuzzyMatchOptions o;
            o.k = 200;
            o.threshold = t;
            const std::size_t n = m.match(q, o).hits.size();
            EXPECT_LE(n, prev);
            prev = n;
        }
    }
}

TEST(FuzzyMatch, BestHitMonotoneInPoolSize) {
    std::mt19937_64 rng(61);
    const auto c = random_collection(rng, 300, 12);
    const FuzzyMatcher small(std::span<const Segment>(c.data(), 100)), big(c);
    FuzzyMatchOptions o;
    o.k = 1;
    for (int i = 0; i < 100; ++i) {
        const auto q = random_collection(rng, 1, 12, 9000).front();
        const auto a = small.match(q, o).hits, b = big.match(q, o).hits;
        if (!a.empty()) {
            EXPECT_GE(b.front().score, a.front().score);
        }
    }
}

TEST(FuzzyMatch, LoadedIndexMustMatchCollection) {
    const auto c = collection({"a b", "c d"});
    const Bm25Index idx = build_bm25(c);
    EXPECT_NO_THROW(FuzzyMatcher(idx, c));
    EXPECT_THROW(FuzzyMatcher(idx, collection({"a b", "c d"}, 7)), std::exception);
    EXPECT_THROW(FuzzyMatcher(idx, collection({"a b", "c d e"})), std::exception);
}

TEST(FuzzyMatch, BatchEqualsSequential) {
    std::mt19937_64 rng(71);
    const auto c = random_collection(rng, 300, 20);
    const auto queries = random_collection(rng, 40, 20, 5000);
    const FuzzyMatcher m(c);
    FuzzyMatchOptions o;
    o.prefilter_n = 20;
    const auto batch = m.match_batch(queries, o, 4);
    for (std::size_t i = 0; i < queries.size(); ++i) EXPECT_EQ(batch[i], m.match(queries[i], o));
}
