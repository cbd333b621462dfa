#include "tmret/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tmret/dense_index.hpp"
#include "tmret/error.hpp"
#include "tmret/eval.hpp"
#include "tmret/synthetic.hpp"

namespace tmret::pipeline {

using nlohmann::json;

namespace {

constexpr double kLevTolerance = 1e-9;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    return out;
}

void require_file(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw Error("missing " + what + ": " + path.string());
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<fs::path>& v) { return v ? json(v->string()) : json(nullptr); }

/// JSONL lines after an optional "_meta" header.
std::vector<std::pair<std::size_t, json>> read_jsonl(const fs::path& path, json* meta) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path.string());
    std::vector<std::pair<std::size_t, json>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
        }
        if (j.is_object() && j.contains("_meta")) {
            if (meta) *meta = j["_meta"];
            continue;
        }
        out.emplace_back(lineno, std::move(j));
    }
    return out;
}

template <typename T>
T field(const json& j, const char* name, const fs::path& path, std::size_t line) {
    if (!j.contains(name))
        throw Error(path.string() + ":" + std::to_string(line) + ": missing field \"" + name + "\"");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw Error(path.string() + ":" + std::to_string(line) + ": field \"" + name + "\" has the wrong type");
    }
}

std::unordered_map<SegmentId, const Segment*> by_id(const std::vector<Segment>& segments) {
    std::unordered_map<SegmentId, const Segment*> map;
    for (const auto& s : segments) map.emplace(s.id, &s);
    return map;
}

std::vector<double> best_scores(const std::vector<HitList>& hits) {
    std::vector<double> out;
    out.reserve(hits.size());
    for (const auto& h : hits)
        out.push_back(h.hits.empty() ? -std::numeric_limits<double>::infinity() : h.hits.front().score);
    return out;
}

void apply_threshold(std::vector<HitList>& hits, double threshold) {
    for (auto& h : hits)
        std::erase_if(h.hits, [&](const ScoredId& s) { return s.score < threshold; });
}

double read_calibration(const fs::path& path) {
    require_file(path, "calibration file");
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("malformed calibration file " + path.string() + ": " + e.what());
    }
    if (!j.contains("threshold") || !j["threshold"].is_number())
        throw Error("calibration file has no numeric \"threshold\": " + path.string());
    return j["threshold"].get<double>();
}

}  // namespace

std::string to_string(RetrieverKind kind) {
    switch (kind) {
        case RetrieverKind::fuzzy_src: return "fuzzy-src";
        case RetrieverKind::fuzzy_gold: return "fuzzy-gold";
        case RetrieverKind::fuzzy_bt: return "fuzzy-bt";
        case RetrieverKind::dense: return "dense";
        case RetrieverKind::dense_bow: return "dense+bow";
        case RetrieverKind::ft_mse: return "ft-MSE";
        case RetrieverKind::ft_mae: return "ft-MAE";
        case RetrieverKind::ft_rank: return "ft-Rank";
    }
    return "?";
}

RetrieverKind parse_retriever(const std::string& name) {
    for (auto k : {RetrieverKind::fuzzy_src, RetrieverKind::fuzzy_gold, RetrieverKind::fuzzy_bt, RetrieverKind::dense,
                   RetrieverKind::dense_bow, RetrieverKind::ft_mse, RetrieverKind::ft_mae, RetrieverKind::ft_rank})
        if (name == to_string(k)) return k;
    throw Error("unknown retriever: " + name +
                " (expected fuzzy-src, fuzzy-gold, fuzzy-bt, dense, dense+bow, ft-MSE, ft-MAE or ft-Rank)");
}

bool is_lexical(RetrieverKind kind) {
    return kind == RetrieverKind::fuzzy_src || kind == RetrieverKind::fuzzy_gold || kind == RetrieverKind::fuzzy_bt;
}

Pool load_pool(const fs::path& path, const TokenizerConfig& tokenizer) {
    require_file(path, "pool");
    auto loaded = load_corpus(path, format_from_path(path), tokenizer);
    Pool pool;
    if (auto* mono = std::get_if<MonolingualPool>(&loaded)) {
        pool.targets = std::move(mono->segments);
    } else {
        auto& par = std::get<ParallelCorpus>(loaded);
        pool.targets = par.targets();
        pool.sources = par.sources();
    }
    return pool;
}

Queries load_queries(const fs::path& path, const TokenizerConfig& tokenizer) {
    require_file(path, "queries");
    auto loaded = load_corpus(path, format_from_path(path), tokenizer);
    Queries q;
    if (auto* mono = std::get_if<MonolingualPool>(&loaded)) {
        q.sources = std::move(mono->segments);
    } else {
        auto& par = std::get<ParallelCorpus>(loaded);
        q.sources = par.sources();
        q.references = par.targets();
    }
    return q;
}

// --- hits -------------------------------------------------------------------

void save_hits(const std::vector<HitList>& hits, const fs::path& path, const std::string& meta_json) {
    auto out = open_out(path);
    out << json{{"_meta", meta_json.empty() ? json::object() : json::parse(meta_json)}}.dump() << '\n';
    for (const auto& h : hits) {
        json arr = json::array();
        for (const auto& s : h.hits) arr.push_back(json{{"id", s.id}, {"score", s.score}});
        out << json{{"query_id", h.query_id}, {"hits", arr}}.dump() << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<HitList> load_hits(const fs::path& path, std::string* meta_json) {
    require_file(path, "hits file");
    json meta = json::object();
    const auto records = read_jsonl(path, &meta);
    if (meta_json) *meta_json = meta.dump();
    std::vector<HitList> out;
    out.reserve(records.size());
    for (const auto& [line, j] : records) {
        HitList h;
        h.query_id = field<SegmentId>(j, "query_id", path, line);
        const auto arr = field<json>(j, "hits", path, line);
        if (!arr.is_array()) throw Error(path.string() + ":" + std::to_string(line) + ": \"hits\" is not an array");
        for (const auto& hit : arr)
            h.hits.push_back(ScoredId{field<SegmentId>(hit, "id", path, line), field<double>(hit, "score", path, line)});
        out.push_back(std::move(h));
    }
    return out;
}

// --- candidates -------------------------------------------------------------

void save_examples(const std::vector<TrainingExample>& examples, const fs::path& path, const std::string& meta_json) {
    auto out = open_out(path);
    out << json{{"_meta", meta_json.empty() ? json::object() : json::parse(meta_json)}}.dump() << '\n';
    for (const auto& ex : examples) {
        json cands = json::array();
        for (const auto& c : ex.candidates)
            cands.push_back(json{{"id", c.segment.id}, {"text", c.segment.raw}, {"lev", c.lev}});
        out << json{{"id", ex.x.id}, {"src", ex.x.raw}, {"tgt", ex.y.raw}, {"candidates", cands}}.dump() << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<TrainingExample> load_examples(const fs::path& path, const TokenizerConfig& tokenizer) {
    require_file(path, "candidates file");
    const auto records = read_jsonl(path, nullptr);
    if (records.empty()) throw Error("empty candidates file: " + path.string());
    std::vector<TrainingExample> out;
    out.reserve(records.size());
    for (const auto& [line, j] : records) {
        const auto where = path.string() + ":" + std::to_string(line) + ": ";
        const auto id = field<SegmentId>(j, "id", path, line);
        TrainingExample ex;
        ex.x = make_segment(id, "src", field<std::string>(j, "src", path, line), tokenizer);
        ex.y = make_segment(id, "tgt", field<std::string>(j, "tgt", path, line), tokenizer);
        const auto cands = field<json>(j, "candidates", path, line);
        if (!cands.is_array()) throw Error(where + "\"candidates\" is not an array");
        for (const auto& c : cands) {
            Segment seg = make_segment(field<SegmentId>(c, "id", path, line), "tgt",
                                       field<std::string>(c, "text", path, line), tokenizer);
            const double stored = field<double>(c, "lev", path, line);
            const double lev = levenshtein_similarity(ex.y.tokens, seg.tokens);
            if (std::abs(stored - lev) > kLevTolerance)
                throw Error(where + "stored lev " + std::to_string(stored) + " disagrees with recomputed " +
                            std::to_string(lev));
            if (!ex.candidates.empty() && lev > ex.candidates.back().lev)
                throw Error(where + "candidates are not sorted by lev descending");
            ex.candidates.push_back(Candidate{std::move(seg), lev});
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TrainingExample> load_examples_or_corpus(const fs::path& path, const TokenizerConfig& tokenizer) {
    require_file(path, "training data");
    if (format_from_path(path) == CorpusFormat::jsonl) {
        const auto records = read_jsonl(path, nullptr);
        if (!records.empty() && records.front().second.contains("candidates")) return load_examples(path, tokenizer);
    }
    const ParallelCorpus corpus = load_parallel(path, format_from_path(path), tokenizer);
    std::vector<TrainingExample> out;
    out.reserve(corpus.size());
    for (const auto& p : corpus.pairs) out.push_back(TrainingExample{p.source, p.target, {}});
    return out;
}

// --- ingest / indices -------------------------------------------------------

void cmd_ingest(const IngestOptions& o) {
    require_file(o.input, "input corpus");
    const CorpusFormat fmt = o.format.value_or(format_from_path(o.input));
    auto loaded = load_corpus(o.input, fmt, o.tokenizer);
    json meta{{"command", "ingest"}, {"input", o.input.string()}};

    if (auto* pool = std::get_if<MonolingualPool>(&loaded)) {
        if (o.split) throw Error("ingest: --split applies to parallel corpora only");
        std::vector<Segment> held;
        json held_paths = json::array();
        for (const auto& h : o.held_out) {
            require_file(h, "held-out corpus");
            Pool held_pool = load_pool(h, o.tokenizer);
            held.insert(held.end(), held_pool.targets.begin(), held_pool.targets.end());
            held_paths.push_back(h.string());
        }
        DecontaminationOptions dopts;
        dopts.prefilter_n = o.prefilter_n;
        const MonolingualPool clean = decontaminate(*pool, held, o.decontam_threshold, dopts);
        meta["held_out"] = held_paths;
        meta["threshold"] = o.decontam_threshold;
        meta["prefilter_n"] = opt_json(o.prefilter_n);
        meta["input_size"] = pool->size();
        meta["output_size"] = clean.size();
        if (o.output.has_parent_path()) fs::create_directories(o.output.parent_path());
        save_monolingual(clean, o.output, CorpusFormat::jsonl, meta.dump());
        return;
    }

    const auto& corpus = std::get<ParallelCorpus>(loaded);
    if (!o.held_out.empty()) throw Error("ingest: decontamination applies to monolingual pools only");
    if (!o.split) {
        if (o.output.has_parent_path()) fs::create_directories(o.output.parent_path());
        save_parallel(corpus, o.output, CorpusFormat::jsonl, meta.dump());
        return;
    }
    const CorpusSplit parts = split(corpus, *o.split, o.seed);
    meta["split"] = {o.split->train, o.split->valid, o.split->test};
    meta["seed"] = o.seed;
    fs::create_directories(o.output);
    save_parallel(parts.train, o.output / "train.jsonl", CorpusFormat::jsonl, meta.dump());
    save_parallel(parts.valid, o.output / "valid.jsonl", CorpusFormat::jsonl, meta.dump());
    save_parallel(parts.test, o.output / "test.jsonl", CorpusFormat::jsonl, meta.dump());
}

void cmd_build_lexical_index(const LexicalIndexOptions& o) {
    const Pool pool = load_pool(o.collection);
    const std::vector<Segment>* side = &pool.targets;
    if (o.side == IndexSide::src) {
        if (!pool.sources) throw Error("build-lexical-index: --side src needs a parallel collection");
        side = &*pool.sources;
    }
    if (o.output.has_parent_path()) fs::create_directories(o.output.parent_path());
    Bm25Index::build(*side, o.bm25).save(o.output);
}

void cmd_build_dense_index(const DenseIndexOptions& o) {
    require_file(o.checkpoint, "checkpoint");
    const EncoderParams params = load_checkpoint(o.checkpoint);
    const Pool pool = load_pool(o.pool);
    if (o.output.has_parent_path()) fs::create_directories(o.output.parent_path());
    build_index(params, std::span<const Segment>(pool.targets)).save(o.output);
}

// --- mining -----------------------------------------------------------------

std::vector<TrainingExample> mine_candidates(const std::vector<TrainingExample>& queries,
                                             const std::vector<Segment>& pool_targets, MiningRetriever retriever,
                                             const EncoderParams* params, std::size_t k,
                                             std::optional<std::size_t> prefilter_n, bool exclude_self) {
    if (k == 0) throw Error("mine-candidates: k must be >= 1");
    if (pool_targets.empty()) throw Error("mine-candidates: empty pool");
    const auto pool = by_id(pool_targets);
    std::vector<std::vector<ScoredId>> hits(queries.size());

    if (retriever == MiningRetriever::lexical) {
        const FuzzyMatcher matcher(pool_targets);
        FuzzyMatchOptions mo;
        mo.k = k;
        mo.prefilter_n = prefilter_n;
        mo.exclude_self = exclude_self;
        std::vector<Segment> refs;
        refs.reserve(queries.size());
        for (const auto& q : queries) refs.push_back(q.y);
        auto results = matcher.match_batch(refs, mo);
        for (std::size_t i = 0; i < results.size(); ++i) hits[i] = std::move(results[i].hits);
    } else {
        if (!params) throw Error("mine-candidates: the dense retriever needs a checkpoint");
        const VectorIndex index = build_index(*params, std::span<const Segment>(pool_targets));
        std::vector<std::vector<float>> qv;
        qv.reserve(queries.size());
        for (const auto& q : queries) qv.push_back(encode_f32(*params, q.x));
        const std::size_t want = std::min(index.size(), k + (exclude_self ? 1 : 0));
        auto results = index.knn_batch(qv, want, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (exclude_self) std::erase_if(results[i], [&](const ScoredId& s) { return s.id == queries[i].x.id; });
            if (results[i].size() > k) results[i].resize(k);
            hits[i] = std::move(results[i]);
        }
    }

    std::vector<TrainingExample> out;
    out.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        TrainingExample ex{queries[i].x, queries[i].y, {}};
        for (const auto& h : hits[i]) {
            const Segment& seg = *pool.at(h.id);
            ex.candidates.push_back(Candidate{seg, levenshtein_similarity(ex.y.tokens, seg.tokens)});
        }
        std::stable_sort(ex.candidates.begin(), ex.candidates.end(),
                         [](const Candidate& l, const Candidate& r) { return l.lev > r.lev; });
        out.push_back(std::move(ex));
    }
    return out;
}

void cmd_mine_candidates(const MineOptions& o) {
    const auto queries = load_examples_or_corpus(o.corpus);
    std::optional<EncoderParams> params;
    if (o.retriever == MiningRetriever::dense) {
        if (!o.checkpoint) throw Error("mine-candidates: missing checkpoint (required by the dense retriever)");
        require_file(*o.checkpoint, "checkpoint");
        params = load_checkpoint(*o.checkpoint);
    }
    std::vector<Segment> pool_targets;
    const bool self = !o.pool;
    if (o.pool) {
        pool_targets = load_pool(*o.pool).targets;
    } else {
        for (const auto& q : queries) pool_targets.push_back(q.y);
    }
    const auto mined = mine_candidates(queries, pool_targets, o.retriever, params ? &*params : nullptr, o.k,
                                       o.prefilter_n, self);
    json meta{{"command", "mine-candidates"},
              {"corpus", o.corpus.string()},
              {"pool", opt_json(o.pool)},
              {"retriever", o.retriever == MiningRetriever::lexical ? "lexical" : "dense"},
              {"checkpoint", opt_json(o.checkpoint)},
              {"k", o.k},
              {"prefilter_n", opt_json(o.prefilter_n)}};
    save_examples(mined, o.output, meta.dump());
}

// --- training ---------------------------------------------------------------

void cmd_train(const TrainOptions& o) {
    require_file(o.config, "train config");
    const TrainConfig cfg = load_train_config(o.config);
    const auto train_set = load_examples_or_corpus(o.train);

    std::vector<TrainingExample> valid_set;
    if (o.valid) {
        valid_set = load_examples_or_corpus(*o.valid);
        const bool has_candidates =
            std::any_of(valid_set.begin(), valid_set.end(), [](const auto& e) { return !e.candidates.empty(); });
        if (!has_candidates) {
            ParallelCorpus corpus;
            for (const auto& e : valid_set) corpus.pairs.push_back(SegmentPair{e.x, e.y});
            valid_set = in_batch_examples(corpus, std::max<std::size_t>(2, cfg.batch_size));
        }
    }

    EncoderParams init;
    if (o.init) {
        require_file(*o.init, "initial checkpoint");
        init = load_checkpoint(*o.init);
    } else {
        std::vector<Segment> all;
        for (const auto& e : train_set) {
            all.push_back(e.x);
            all.push_back(e.y);
            for (const auto& c : e.candidates) all.push_back(c.segment);
        }
        init = EncoderParams::init(Vocabulary::from_segments(all), cfg.dim, cfg.seed);
    }

    const TrainResult result = train(init, train_set, valid_set, cfg);
    if (o.output.has_parent_path()) fs::create_directories(o.output.parent_path());
    save_checkpoint(result.params, o.output, format_train_config(cfg));

    if (o.history) {
        json h{{"config", format_train_config(cfg)},
               {"step_loss", result.history.step_loss},
               {"epoch_ndcg", result.history.epoch_ndcg},
               {"initial_ndcg", result.history.initial_ndcg},
               {"best_epoch", result.history.best_epoch},
               {"best_ndcg", result.history.best_ndcg}};
        auto out = open_out(*o.history);
        out << h.dump(2) << '\n';
    }
}

// --- retrieval --------------------------------------------------------------

std::vector<HitList> retrieve_raw(const RetrieveOptions& o) {
    if (o.k == 0) throw Error("retrieve: k must be >= 1");
    const Queries queries = load_queries(o.queries);
    const Pool pool = load_pool(o.pool);
    std::vector<HitList> out(queries.sources.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].query_id = queries.sources[i].id;

    if (is_lexical(o.retriever)) {
        std::vector<Segment> bt;
        const std::vector<Segment>* collection = nullptr;
        const std::vector<Segment>* query_side = &queries.sources;
        switch (o.retriever) {
            case RetrieverKind::fuzzy_src:
                if (!pool.sources) throw Error("retrieve: fuzzy-src needs a parallel pool with source texts");
                collection = &*pool.sources;
                break;
            case RetrieverKind::fuzzy_gold:
                if (!queries.references) throw Error("retrieve: fuzzy-gold needs queries with reference targets");
                collection = &pool.targets;
                query_side = &*queries.references;
                break;
            default: {
                if (!o.back_translations) throw Error("retrieve: missing back-translation file (required by fuzzy-bt)");
                bt = load_pool(*o.back_translations).targets;
                const auto ids = by_id(pool.targets);
                for (const auto& s : bt)
                    if (!ids.contains(s.id))
                        throw Error("retrieve: back-translation id " + std::to_string(s.id) + " is not in the pool");
                collection = &bt;
            }
        }
        std::optional<FuzzyMatcher> matcher;
        if (o.lexical_index) {
            require_file(*o.lexical_index, "lexical index");
            matcher.emplace(Bm25Index::load(*o.lexical_index), *collection);
        } else {
            matcher.emplace(*collection);
        }
        FuzzyMatchOptions mo;
        mo.k = o.k;
        mo.prefilter_n = o.prefilter_n;
        const auto results = matcher->match_batch(*query_side, mo, o.threads);
        for (std::size_t i = 0; i < out.size(); ++i) out[i].hits = results[i].hits;
        return out;
    }

    if (!o.checkpoint) throw Error("retrieve: missing checkpoint (required by " + to_string(o.retriever) + ")");
    require_file(*o.checkpoint, "checkpoint");
    const EncoderParams params = load_checkpoint(*o.checkpoint);
    VectorIndex index;
    if (o.dense_index) {
        require_file(*o.dense_index, "dense index");
        index = VectorIndex::load(*o.dense_index);
        if (index.dim() != params.dim())
            throw Error("retrieve: dense index dimension " + std::to_string(index.dim()) +
                        " does not match checkpoint dimension " + std::to_string(params.dim()));
        const auto ids = by_id(pool.targets);
        for (const SegmentId id : index.ids())
            if (!ids.contains(id)) throw Error("retrieve: dense index id " + std::to_string(id) + " is not in the pool");
    } else {
        index = build_index(params, std::span<const Segment>(pool.targets), o.threads);
    }
    std::vector<std::vector<float>> qv;
    qv.reserve(queries.sources.size());
    for (const auto& q : queries.sources) qv.push_back(encode_f32(params, q));
    auto results = index.knn_batch(qv, o.k, -std::numeric_limits<double>::infinity(), o.threads);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].hits = std::move(results[i]);
    return out;
}

void cmd_retrieve(const RetrieveOptions& o) {
    const int given = int(o.threshold.has_value()) + int(o.target_rate.has_value()) + int(o.calibration.has_value());
    if (given != 1) throw Error("retrieve: give exactly one of --threshold, --target-rate, --calibration");

    std::vector<HitList> hits = retrieve_raw(o);
    double threshold = 0.0;
    if (o.threshold) {
        threshold = *o.threshold;
    } else if (o.calibration) {
        threshold = read_calibration(*o.calibration);
    } else {
        const auto scores = best_scores(hits);
        threshold = calibrate_threshold(scores, *o.target_rate);
    }
    apply_threshold(hits, threshold);

    json meta{{"command", "retrieve"},
              {"retriever", to_string(o.retriever)},
              {"queries", o.queries.string()},
              {"pool", o.pool.string()},
              {"back_translations", opt_json(o.back_translations)},
              {"checkpoint", opt_json(o.checkpoint)},
              {"k", o.k},
              {"threshold", threshold},
              {"target_rate", opt_json(o.target_rate)},
              {"prefilter_n", opt_json(o.prefilter_n)}};
    save_hits(hits, o.output, meta.dump());
}

double cmd_calibrate(const CalibrateOptions& o) {
    std::string meta_str;
    const auto hits = load_hits(o.hits, &meta_str);
    if (hits.empty()) throw Error("calibrate: hits file has no queries");
    const auto scores = best_scores(hits);
    const double threshold = calibrate_threshold(scores, o.target_rate);
    const json meta = json::parse(meta_str);
    json out{{"threshold", threshold},
             {"target_rate", o.target_rate},
             {"achieved_rate", retrieval_rate(scores, threshold)},
             {"num_queries", hits.size()},
             {"retriever", meta.value("retriever", "")},
             {"hits", o.hits.string()}};
    auto f = open_out(o.output);
    f << out.dump(2) << '\n';
    return threshold;
}

// --- evaluation / export ----------------------------------------------------

void cmd_eval(const EvalOptions& o) {
    std::string meta_str;
    const auto hits = load_hits(o.hits, &meta_str);
    const Queries queries = load_queries(o.queries);
    if (!queries.references) throw Error("eval: queries need reference targets");
    const Pool pool = load_pool(o.pool);
    if (hits.size() != queries.sources.size())
        throw Error("eval: " + std::to_string(hits.size()) + " hit lists for " +
                    std::to_string(queries.sources.size()) + " queries");

    std::vector<std::vector<ScoredId>> lists;
    lists.reserve(hits.size());
    for (const auto& h : hits) lists.push_back(h.hits);
    RetrievalReport report = make_report(lists, *queries.references, by_id(pool.targets));

    if (o.checkpoint && (o.xsim_corpus || o.candidates)) {
        require_file(*o.checkpoint, "checkpoint");
        const EncoderParams params = load_checkpoint(*o.checkpoint);
        if (o.xsim_corpus) report.xsim_error = xsim_error(params, load_parallel(*o.xsim_corpus, format_from_path(*o.xsim_corpus)));
        if (o.candidates) report.ndcg = validation_ndcg(params, load_examples(*o.candidates));
    } else if (o.xsim_corpus || o.candidates) {
        throw Error("eval: missing checkpoint (required for xsim and NDCG)");
    }

    json config{{"hits", o.hits.string()},
                {"hits_meta", json::parse(meta_str)},
                {"queries", o.queries.string()},
                {"pool", o.pool.string()},
                {"checkpoint", opt_json(o.checkpoint)},
                {"xsim_corpus", opt_json(o.xsim_corpus)},
                {"candidates", opt_json(o.candidates)}};
    auto out = open_out(o.output);
    out << report.to_json(config.dump()) << '\n';
    if (o.csv) {
        auto csv = open_out(*o.csv);
        csv << report.to_csv();
    }
}

void cmd_export_examples(const ExportOptions& o) {
    const auto hits = load_hits(o.hits);
    const Queries queries = load_queries(o.queries);
    const Pool pool = load_pool(o.pool);
    const auto targets = by_id(pool.targets);
    std::unordered_map<SegmentId, const Segment*> sources;
    for (const auto& s : queries.sources) sources.emplace(s.id, &s);

    auto out = open_out(o.output);
    if (o.format == CorpusFormat::jsonl)
        out << json{{"_meta", {{"command", "export-examples"}, {"hits", o.hits.string()}, {"pool", o.pool.string()}}}}.dump()
            << '\n';
    for (const auto& h : hits) {
        auto src = sources.find(h.query_id);
        if (src == sources.end()) throw Error("export-examples: dangling query id " + std::to_string(h.query_id));
        json examples = json::array();
        std::string tsv = std::to_string(h.query_id) + '\t' + src->second->raw;
        for (const auto& s : h.hits) {
            auto it = targets.find(s.id);
            if (it == targets.end()) throw Error("export-examples: dangling pool id " + std::to_string(s.id));
            examples.push_back(json{{"id", s.id}, {"text", it->second->raw}, {"score", s.score}});
            tsv += '\t' + it->second->raw;
        }
        if (o.format == CorpusFormat::jsonl)
            out << json{{"query_id", h.query_id}, {"source", src->second->raw}, {"examples", examples}}.dump() << '\n';
        else
            out << tsv << '\n';
    }
    if (!out) throw Error("write failed: " + o.output.string());
}

std::vector<ExportedExample> load_exported(const fs::path& path) {
    require_file(path, "examples file");
    std::vector<ExportedExample> out;
    for (const auto& [line, j] : read_jsonl(path, nullptr)) {
        ExportedExample e;
        e.query_id = field<SegmentId>(j, "query_id", path, line);
        e.source = field<std::string>(j, "source", path, line);
        for (const auto& ex : field<json>(j, "examples", path, line)) {
            e.targets.push_back(field<std::string>(ex, "text", path, line));
            e.scores.push_back(field<double>(ex, "score", path, line));
        }
        out.push_back(std::move(e));
    }
    return out;
}

void cmd_synth(const SynthOptions& o) {
    json meta{{"command", "synth"}, {"kind", o.kind}, {"n", o.n}, {"seed", o.seed}, {"generator_seed", o.generator_seed}};
    if (o.output.has_parent_path()) fs::create_directories(o.output.parent_path());
    if (o.kind == "bilingual") {
        const synth::BilingualGenerator gen({}, o.generator_seed);
        const ParallelCorpus corpus = gen.corpus(o.n, o.seed);
        save_parallel(corpus, o.output, CorpusFormat::jsonl, meta.dump());
        if (o.bt_output) {
            std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
            MonolingualPool bt;
            bt.lang = corpus.src_lang;
            for (const auto& p : corpus.pairs)
                bt.segments.push_back(make_segment(p.target.id, bt.lang, gen.back_translate(p.target, rng)));
            save_monolingual(bt, *o.bt_output, CorpusFormat::jsonl, meta.dump());
        }
    } else if (o.kind == "zipf") {
        if (o.bt_output) throw Error("synth: --bt-out applies to bilingual corpora only");
        const synth::ZipfGenerator gen({});
        MonolingualPool pool;
        pool.segments = gen.segments(o.n, o.seed);
        save_monolingual(pool, o.output, CorpusFormat::jsonl, meta.dump());
    } else {
        throw Error("synth: unknown kind " + o.kind + " (expected bilingual or zipf)");
    }
}

}  // namespace tmret::pipeline
