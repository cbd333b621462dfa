#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tmret/dense_index.hpp"
#include "tmret/encoder.hpp"
#include "tmret/error.hpp"
#include "tmret/eval.hpp"
#include "tmret/lexical.hpp"
#include "tmret/pipeline.hpp"
#include "tmret/text.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace tmret;
namespace pl = tmret::pipeline;

namespace {

TokenizerConfig tokenizer(bool lowercase) {
    TokenizerConfig c;
    c.lowercase = lowercase;
    return c;
}

/// Segments from raw strings; ids default to positions.
std::vector<Segment> segments(const std::vector<std::string>& texts, const std::optional<std::vector<SegmentId>>& ids,
                              bool lowercase) {
    if (ids && ids->size() != texts.size()) throw Error("ids and texts differ in length");
    std::vector<Segment> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i)
        out.push_back(make_segment(ids ? (*ids)[i] : i, "", texts[i], tokenizer(lowercase)));
    return out;
}

std::vector<std::pair<SegmentId, double>> pairs(const std::vector<ScoredId>& hits) {
    std::vector<std::pair<SegmentId, double>> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.emplace_back(h.id, h.score);
    return out;
}

std::vector<float> as_f32(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw Error("expected a 1-D vector");
    return {a.data(), a.data() + a.size()};
}

template <typename T>
std::optional<T> none_or(const py::object& o) {
    if (o.is_none()) return std::nullopt;
    return o.cast<T>();
}

std::optional<std::size_t> prefilter(std::size_t n) {
    return n == 0 ? std::nullopt : std::optional<std::size_t>(n);
}

class PyFuzzyMatcher {
public:
    PyFuzzyMatcher(const std::vector<std::string>& texts, const std::optional<std::vector<SegmentId>>& ids,
                   bool lowercase, double k1, double b)
        : lowercase_(lowercase), matcher_(segments(texts, ids, lowercase), Bm25Params{k1, b}) {}

    std::vector<std::pair<SegmentId, double>> match(const std::string& query, std::size_t k, double threshold,
                                                    std::size_t prefilter_n) const {
        FuzzyMatchOptions o;
        o.k = k;
        o.threshold = threshold;
        o.prefilter_n = prefilter(prefilter_n);
        return pairs(matcher_.match(make_segment(0, "", query, tokenizer(lowercase_)), o).hits);
    }
    std::vector<std::pair<SegmentId, double>> bm25(const std::string& query, std::size_t n) const {
        return pairs(matcher_.index().top_n(tokenize(query, tokenizer(lowercase_)), n));
    }
    void save_index(const fs::path& path) const { matcher_.index().save(path); }
    std::size_t size() const { return matcher_.size(); }

private:
    bool lowercase_;
    FuzzyMatcher matcher_;
};

class PyEncoder {
public:
    explicit PyEncoder(EncoderParams params) : params_(std::move(params)) {}
    static PyEncoder load(const fs::path& path) { return PyEncoder(load_checkpoint(path)); }
    static PyEncoder random(const std::vector<std::string>& texts, std::size_t dim, std::uint64_t seed) {
        return PyEncoder(EncoderParams::init(Vocabulary::from_segments(segments(texts, std::nullopt, false)), dim, seed));
    }
    Eigen::VectorXd encode(const std::string& text) const { return tmret::encode(params_, make_segment(0, "", text)); }
    double similarity(const std::string& x, const std::string& y) const {
        return tmret::similarity(params_, make_segment(0, "", x), make_segment(1, "", y));
    }
    double map(double t) const { return mapping_f(params_.w.a, params_.w.b, t); }
    void save(const fs::path& path) const { save_checkpoint(params_, path); }
    std::size_t dim() const { return params_.dim(); }
    const EncoderParams& params() const { return params_; }

private:
    EncoderParams params_;
};

}  // namespace

PYBIND11_MODULE(_tmret, m) {
    m.doc() = "Translation-memory retrieval engine";

    m.def(
        "tokenize", [](const std::string& text, bool lowercase) { return tokenize(text, tokenizer(lowercase)); },
        py::arg("text"), py::arg("lowercase") = false);
    m.def(
        "levenshtein_distance",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) { return levenshtein_distance(a, b); },
        py::arg("a"), py::arg("b"));
    m.def(
        "levenshtein_similarity",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
            return levenshtein_similarity(a, b);
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "lev", [](const std::string& a, const std::string& b) { return levenshtein_similarity(tokenize(a), tokenize(b)); },
        py::arg("a"), py::arg("b"), "Token-level Levenshtein similarity of two raw strings.");
    m.def(
        "ndcg", [](const std::vector<double>& gains) { return ndcg(gains); }, py::arg("ranked_gains"));
    m.def(
        "calibrate_threshold",
        [](const std::vector<double>& scores, double rate) { return calibrate_threshold(scores, rate); },
        py::arg("best_scores"), py::arg("target_rate"));
    m.def(
        "retrieval_rate", [](const std::vector<double>& scores, double t) { return retrieval_rate(scores, t); },
        py::arg("best_scores"), py::arg("threshold"));
    m.def("mapping_f", &mapping_f, py::arg("a"), py::arg("b"), py::arg("t"));

    py::class_<PyFuzzyMatcher>(m, "FuzzyMatcher")
        .def(py::init<const std::vector<std::string>&, const std::optional<std::vector<SegmentId>>&, bool, double,
                      double>(),
             py::arg("texts"), py::arg("ids") = py::none(), py::arg("lowercase") = false, py::arg("k1") = 1.2,
             py::arg("b") = 0.75)
        .def("match", &PyFuzzyMatcher::match, py::arg("query"), py::arg("k") = 3, py::arg("threshold") = 0.0,
             py::arg("prefilter_n") = 0, "Top-k by Levenshtein similarity; prefilter_n = 0 scans exactly.")
        .def("bm25", &PyFuzzyMatcher::bm25, py::arg("query"), py::arg("n"))
        .def("save_index", &PyFuzzyMatcher::save_index, py::arg("path"))
        .def("__len__", &PyFuzzyMatcher::size);

    py::class_<PyEncoder>(m, "Encoder")
        .def_static("load", &PyEncoder::load, py::arg("path"))
        .def_static("random", &PyEncoder::random, py::arg("texts"), py::arg("dim") = 64, py::arg("seed") = 0,
                    "Untrained encoder over the vocabulary of `texts`.")
        .def("encode", &PyEncoder::encode, py::arg("text"))
        .def("similarity", &PyEncoder::similarity, py::arg("x"), py::arg("y"))
        .def("map", &PyEncoder::map, py::arg("cosine"), "Calibrated mapping of a cosine into (0, 1).")
        .def("save", &PyEncoder::save, py::arg("path"))
        .def_property_readonly("dim", &PyEncoder::dim);

    py::class_<VectorIndex>(m, "VectorIndex")
        .def(py::init([](const PyEncoder& enc, const std::vector<std::string>& texts,
                         const std::optional<std::vector<SegmentId>>& ids) {
                 return build_index(enc.params(), segments(texts, ids, false));
             }),
             py::arg("encoder"), py::arg("texts"), py::arg("ids") = py::none())
        .def_static("load", &VectorIndex::load, py::arg("path"))
        .def("save", &VectorIndex::save, py::arg("path"))
        .def(
            "knn",
            [](const VectorIndex& idx, const py::array_t<float, py::array::c_style | py::array::forcecast>& q,
               std::size_t k, double threshold) { return pairs(idx.knn(as_f32(q), k, threshold)); },
            py::arg("query"), py::arg("k"), py::arg("threshold") = -1.0)
        .def_property_readonly("dim", &VectorIndex::dim)
        .def_property_readonly("ids", &VectorIndex::ids)
        .def("__len__", &VectorIndex::size);

    // Pipeline commands, mirroring the command-line tool.
    m.def(
        "ingest",
        [](const fs::path& input, const fs::path& output, const std::vector<fs::path>& held_out, double threshold,
           std::size_t prefilter_n, const py::object& split, std::uint64_t seed, bool lowercase) {
            pl::IngestOptions o;
            o.input = input;
            o.output = output;
            o.held_out = held_out;
            o.decontam_threshold = threshold;
            o.prefilter_n = prefilter(prefilter_n);
            if (auto f = none_or<std::tuple<double, double, double>>(split))
                o.split = SplitFractions{std::get<0>(*f), std::get<1>(*f), std::get<2>(*f)};
            o.seed = seed;
            o.tokenizer = tokenizer(lowercase);
            pl::cmd_ingest(o);
        },
        py::arg("input"), py::arg("output"), py::arg("held_out") = std::vector<fs::path>{},
        py::arg("decontam_threshold") = 0.9, py::arg("prefilter_n") = 100, py::arg("split") = py::none(),
        py::arg("seed") = 0, py::arg("lowercase") = false);
    m.def(
        "build_lexical_index",
        [](const fs::path& collection, const fs::path& output, const std::string& side, double k1, double b) {
            pl::LexicalIndexOptions o;
            o.collection = collection;
            o.output = output;
            if (side != "src" && side != "tgt") throw Error("side must be src or tgt");
            o.side = side == "src" ? pl::IndexSide::src : pl::IndexSide::tgt;
            o.bm25 = {k1, b};
            pl::cmd_build_lexical_index(o);
        },
        py::arg("collection"), py::arg("output"), py::arg("side") = "tgt", py::arg("k1") = 1.2, py::arg("b") = 0.75);
    m.def(
        "build_dense_index",
        [](const fs::path& checkpoint, const fs::path& pool, const fs::path& output) {
            pl::cmd_build_dense_index({checkpoint, pool, output});
        },
        py::arg("checkpoint"), py::arg("pool"), py::arg("output"));
    m.def(
        "mine_candidates",
        [](const fs::path& corpus, const fs::path& output, const std::optional<fs::path>& pool,
           const std::string& retriever, const std::optional<fs::path>& checkpoint, std::size_t k,
           std::size_t prefilter_n) {
            pl::MineOptions o;
            o.corpus = corpus;
            o.output = output;
            o.pool = pool;
            if (retriever != "lexical" && retriever != "dense") throw Error("retriever must be lexical or dense");
            o.retriever = retriever == "dense" ? pl::MiningRetriever::dense : pl::MiningRetriever::lexical;
            o.checkpoint = checkpoint;
            o.k = k;
            o.prefilter_n = prefilter(prefilter_n);
            pl::cmd_mine_candidates(o);
        },
        py::arg("corpus"), py::arg("output"), py::arg("pool") = py::none(), py::arg("retriever") = "lexical",
        py::arg("checkpoint") = py::none(), py::arg("k") = 3, py::arg("prefilter_n") = 100);
    m.def(
        "train",
        [](const fs::path& config, const fs::path& train, const fs::path& output, const std::optional<fs::path>& valid,
           const std::optional<fs::path>& init, const std::optional<fs::path>& history) {
            pl::cmd_train({config, train, valid, init, output, history});
        },
        py::arg("config"), py::arg("train"), py::arg("output"), py::arg("valid") = py::none(),
        py::arg("init") = py::none(), py::arg("history") = py::none());
    m.def(
        "calibrate",
        [](const fs::path& hits, const fs::path& output, double target_rate) {
            return pl::cmd_calibrate({hits, target_rate, output});
        },
        py::arg("hits"), py::arg("output"), py::arg("target_rate") = 0.5);
    m.def(
        "retrieve",
        [](const std::string& retriever, const fs::path& queries, const fs::path& pool, const fs::path& output,
           std::size_t k, const std::optional<double>& threshold, const std::optional<double>& target_rate,
           const std::optional<fs::path>& calibration, const std::optional<fs::path>& checkpoint,
           const std::optional<fs::path>& back_translations, const std::optional<fs::path>& lexical_index,
           const std::optional<fs::path>& dense_index, std::size_t prefilter_n, unsigned threads) {
            pl::RetrieveOptions o;
            o.retriever = pl::parse_retriever(retriever);
            o.queries = queries;
            o.pool = pool;
            o.output = output;
            o.k = k;
            o.threshold = threshold;
            o.target_rate = target_rate;
            o.calibration = calibration;
            o.checkpoint = checkpoint;
            o.back_translations = back_translations;
            o.lexical_index = lexical_index;
            o.dense_index = dense_index;
            o.prefilter_n = prefilter(prefilter_n);
            o.threads = threads;
            pl::cmd_retrieve(o);
        },
        py::arg("retriever"), py::arg("queries"), py::arg("pool"), py::arg("output"), py::arg("k") = 3,
        py::arg("threshold") = py::none(), py::arg("target_rate") = py::none(), py::arg("calibration") = py::none(),
        py::arg("checkpoint") = py::none(), py::arg("back_translations") = py::none(),
        py::arg("lexical_index") = py::none(), py::arg("dense_index") = py::none(), py::arg("prefilter_n") = 0,
        py::arg("threads") = 0);
    m.def(
        "eval",
        [](const fs::path& hits, const fs::path& queries, const fs::path& pool, const fs::path& output,
           const std::optional<fs::path>& checkpoint, const std::optional<fs::path>& xsim_corpus,
           const std::optional<fs::path>& candidates, const std::optional<fs::path>& csv) {
            pl::cmd_eval({hits, queries, pool, checkpoint, xsim_corpus, candidates, output, csv});
        },
        py::arg("hits"), py::arg("queries"), py::arg("pool"), py::arg("output"), py::arg("checkpoint") = py::none(),
        py::arg("xsim_corpus") = py::none(), py::arg("candidates") = py::none(), py::arg("csv") = py::none());
    m.def(
        "export_examples",
        [](const fs::path& hits, const fs::path& queries, const fs::path& pool, const fs::path& output,
           const std::string& format) {
            pl::cmd_export_examples({hits, queries, pool, parse_format(format), output});
        },
        py::arg("hits"), py::arg("queries"), py::arg("pool"), py::arg("output"), py::arg("format") = "jsonl");
    m.def(
        "synth",
        [](const fs::path& output, const std::string& kind, std::size_t n, std::uint64_t seed,
           std::uint64_t generator_seed, const std::optional<fs::path>& bt_output) {
            pl::cmd_synth({kind, n, seed, generator_seed, output, bt_output});
        },
        py::arg("output"), py::arg("kind") = "bilingual", py::arg("n") = 1000, py::arg("seed") = 0,
        py::arg("generator_seed") = 1, py::arg("bt_output") = py::none());
}
