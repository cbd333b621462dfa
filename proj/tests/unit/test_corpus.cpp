#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tmret/corpus.hpp"

using namespace tmret;
namespace fs = std::filesystem;

namespace {

class CorpusFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("tmret_corpus_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& content) {
        const auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }
    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

ParallelCorpus make_corpus(std::size_t n) {
    ParallelCorpus c;
    for (std::size_t i = 0; i < n; ++i)
        c.pairs.push_back({make_segment(i, "src", "source sentence " + std::to_string(i) + " ."),
                           make_segment(i, "tgt", "phrase cible " + std::to_string(i) + " !")});
    return c;
}

MonolingualPool make_pool(std::initializer_list<const char*> texts) {
    MonolingualPool p;
    SegmentId id = 0;
    for (const char* t : texts) p.segments.push_back(make_segment(id++, "tgt", t));
    return p;
}

}  // namespace

TEST_F(CorpusFiles, LoadJsonlAndTsv) {
    const auto j = write("a.jsonl", "{\"src\": \"Hello, world!\", \"tgt\": \"Bonjour !\"}\n{\"src\": \"b\", \"tgt\": \"c\"}\n");
    const ParallelCorpus c = load_parallel(j, CorpusFormat::jsonl);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.pairs[0].source.tokens, (std::vector<Token>{"Hello", ",", "world", "!"}));
    EXPECT_EQ(c.pairs[1].target.id, 1u);

    const auto t = write("a.tsv", "Hello, world!\tBonjour !\nb\tc\n");
    const ParallelCorpus ct = load_parallel(t, CorpusFormat::tsv);
    EXPECT_EQ(ct.pairs, c.pairs);
}

TEST_F(CorpusFiles, MissingFieldNamesLine) {
    const auto p = write("bad.jsonl", "{\"src\": \"a\", \"tgt\": \"b\"}\n{\"src\": \"a\"}\n");
    try {
        load_parallel(p, CorpusFormat::jsonl);
        FAIL() << "expected an error";
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
        EXPECT_NE(msg.find("tgt"), std::string::npos) << msg;
    }
}

TEST_F(CorpusFiles, MalformedInputs) {
    EXPECT_THROW(load_parallel(write("e.jsonl", ""), CorpusFormat::jsonl), std::exception);
    EXPECT_THROW(load_parallel(write("x.jsonl", "{not json}\n"), CorpusFormat::jsonl), std::exception);
    EXPECT_THROW(load_parallel(write("x.tsv", "only one field\n"), CorpusFormat::tsv), std::exception);
    EXPECT_THROW(load_parallel(write("i.jsonl", "{\"id\": 5, \"src\": \"a\", \"tgt\": \"b\"}\n"), CorpusFormat::jsonl),
                 std::exception);
    EXPECT_THROW(load_monolingual(write("d.jsonl", "{\"id\": 1, \"text\": \"a\"}\n{\"id\": 1, \"text\": \"b\"}\n"),
                                  CorpusFormat::jsonl),
                 std::exception);
    EXPECT_THROW(load_parallel(dir_ / "missing.jsonl", CorpusFormat::jsonl), std::exception);
}

TEST_F(CorpusFiles, DetectsKindAndSkipsMeta) {
    const auto p = write("m.jsonl", "{\"_meta\": {\"lang\": \"fr\"}}\n{\"id\": 7, \"text\": \"x y\"}\n");
    const auto v = load_corpus(p, CorpusFormat::jsonl);
    ASSERT_TRUE(std::holds_alternative<MonolingualPool>(v));
    const auto& pool = std::get<MonolingualPool>(v);
    EXPECT_EQ(pool.lang, "fr");
    ASSERT_EQ(pool.size(), 1u);
    EXPECT_EQ(pool.segments[0].id, 7u);
    EXPECT_EQ(format_from_path("x.tsv"), CorpusFormat::tsv);
    EXPECT_EQ(format_from_path("x.jsonl"), CorpusFormat::jsonl);
    EXPECT_THROW(parse_format("csv"), std::exception);
}

TEST_F(CorpusFiles, RoundTripIsBitIdentical) {
    const ParallelCorpus c = make_corpus(20);
    for (const auto fmt : {CorpusFormat::jsonl, CorpusFormat::tsv}) {
        const auto a = dir_ / (fmt == CorpusFormat::jsonl ? "a.jsonl" : "a.tsv");
        const auto b = dir_ / (fmt == CorpusFormat::jsonl ? "b.jsonl" : "b.tsv");
        save_parallel(c, a, fmt, R"({"note":"x"})");
        const ParallelCorpus back = load_parallel(a, fmt);
        EXPECT_EQ(back, c);
        save_parallel(back, b, fmt, R"({"note":"x"})");
        EXPECT_EQ(slurp(a), slurp(b));
    }
    const MonolingualPool pool = make_pool({"a b", "c", "été !"});
    save_monolingual(pool, dir_ / "p.jsonl", CorpusFormat::jsonl);
    EXPECT_EQ(load_monolingual(dir_ / "p.jsonl", CorpusFormat::jsonl), pool);
    save_monolingual(pool, dir_ / "p.tsv", CorpusFormat::tsv);
    EXPECT_EQ(load_monolingual(dir_ / "p.tsv", CorpusFormat::tsv), pool);
}

TEST_F(CorpusFiles, TsvRejectsTabsInText) {
    ParallelCorpus c;
    c.pairs.push_back({make_segment(0, "src", "a"), make_segment(0, "tgt", "b")});
    c.pairs[0].source.raw = "a\tb";
    EXPECT_THROW(save_parallel(c, dir_ / "t.tsv", CorpusFormat::tsv), std::exception);
}

TEST(Split, PartitionAndDeterminism) {
    const ParallelCorpus c = make_corpus(103);
    const CorpusSplit a = split(c, {0.8, 0.1, 0.1}, 42), b = split(c, {0.8, 0.1, 0.1}, 42);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.valid, b.valid);
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.valid.size(), 10u);
    EXPECT_EQ(a.test.size(), 10u);
    EXPECT_EQ(a.train.size(), 83u);

    std::multiset<std::string> seen;
    for (const auto* part : {&a.train, &a.valid, &a.test})
        for (std::size_t i = 0; i < part->size(); ++i) {
            EXPECT_EQ(part->pairs[i].source.id, i);
            seen.insert(part->pairs[i].source.raw);
        }
    std::multiset<std::string> all;
    for (const auto& p : c.pairs) all.insert(p.source.raw);
    EXPECT_EQ(seen, all);

    const CorpusSplit other = split(c, {0.8, 0.1, 0.1}, 43);
    EXPECT_NE(other.valid, a.valid);
}

TEST(Split, Errors) {
    EXPECT_THROW(split(make_corpus(2), {0.8, 0.1, 0.1}, 0), std::exception);
    EXPECT_THROW(split(make_corpus(10), {0.8, 0.1, 0.2}, 0), std::exception);
    EXPECT_THROW(split(make_corpus(10), {1.0, 0.0, 0.0}, 0), std::exception);
    const CorpusSplit tiny = split(make_corpus(3), {0.8, 0.1, 0.1}, 0);
    EXPECT_EQ(tiny.train.size() + tiny.valid.size() + tiny.test.size(), 3u);
}

TEST(Decontaminate, Examples) {
    const std::vector<Segment> held{make_segment(0, "tgt", "a b c d e f g h i j k")};
    // Exact copy (Lev 1), near copy (Lev 10/11), distant (Lev 4/11: 3 deletions and 4 substitutions).
    const MonolingualPool pool = make_pool({"a b c d e f g h i j k", "a b c d e f g h i j z", "a b c d w x y z",
                                            "unrelated words here"});
    const MonolingualPool out = decontaminate(pool, held, 0.9);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out.segments[0].id, 2u);
    EXPECT_EQ(out.segments[1].id, 3u);
}

TEST(Decontaminate, HalfSimilarSegmentRetained) {
    const std::vector<Segment> held{make_segment(0, "tgt", "a b c d")};
    const MonolingualPool pool = make_pool({"a b x y"});
    EXPECT_DOUBLE_EQ(levenshtein_similarity(pool.segments[0].tokens, held[0].tokens), 0.5);
    EXPECT_EQ(decontaminate(pool, held, 0.9).size(), 1u);
}

TEST(Decontaminate, ThresholdOneOnlyDedups) {
    const std::vector<Segment> held{make_segment(0, "tgt", "a b")};
    const MonolingualPool pool = make_pool({"a b", "a b", "c d", "c d", "e"});
    const MonolingualPool out = decontaminate(pool, held, 1.0);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out.segments[0].id, 0u);
    EXPECT_EQ(out.segments[1].id, 2u);
    EXPECT_EQ(out.segments[2].id, 4u);
    EXPECT_THROW(decontaminate(pool, held, 1.5), std::exception);
}

TEST(Decontaminate, IdempotentAndMonotoneInThreshold) {
    std::mt19937_64 rng(17);
    auto sentence = [&](std::size_t len) {
        std::vector<std::string> t(len);
        for (auto& w : t) w = "w" + std::to_string(std::uniform_int_distribution<int>(0, 30)(rng));
        return t;
    };
    std::vector<Segment> held;
    for (SegmentId i = 0; i < 30; ++i) held.push_back(make_segment(i, "tgt", join_tokens(sentence(8))));
    MonolingualPool pool;
    for (SegmentId i = 0; i < 300; ++i) {
        auto t = i % 3 == 0 ? held[i % held.size()].tokens : sentence(8);
        if (i % 3 == 0) t[std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng)] = "zz";
        pool.segments.push_back(make_segment(i, "tgt", join_tokens(t)));
    }
    const MonolingualPool once = decontaminate(pool, held, 0.5);
    EXPECT_EQ(decontaminate(once, held, 0.5), once);

    std::set<SegmentId> prev_removed;
    for (double t : {0.9, 0.7, 0.5, 0.3}) {
        const MonolingualPool out = decontaminate(pool, held, t);
        std::set<SegmentId> kept;
        for (const auto& s : out.segments) kept.insert(s.id);
        std::set<SegmentId> removed;
        for (const auto& s : pool.segments)
            if (!kept.contains(s.id)) removed.insert(s.id);
        EXPECT_TRUE(std::includes(removed.begin(), removed.end(), prev_removed.begin(), prev_removed.end()));
        prev_removed = removed;
    }
}
