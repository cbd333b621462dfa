#pragma once

// File-to-file batch jobs behind the `tmret` subcommands. Every output file
// is JSON/JSONL with an embedded config echo, or a versioned binary.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tmret/corpus.hpp"
#include "tmret/encoder.hpp"
#include "tmret/lexical.hpp"
#include "tmret/scored.hpp"

namespace tmret::pipeline {

namespace fs = std::filesystem;

enum class RetrieverKind { fuzzy_src, fuzzy_gold, fuzzy_bt, dense, dense_bow, ft_mse, ft_mae, ft_rank };

std::string to_string(RetrieverKind kind);
RetrieverKind parse_retriever(const std::string& name);
bool is_lexical(RetrieverKind kind);

/// Target texts of a retrieval pool, plus source texts when the pool is a
/// parallel translation memory. Ids are pool ids.
struct Pool {
    std::vector<Segment> targets;
    std::optional<std::vector<Segment>> sources;
};

Pool load_pool(const fs::path& path, const TokenizerConfig& tokenizer = {});

/// Queries with optional references. A monolingual query file has no references.
struct Queries {
    std::vector<Segment> sources;
    std::optional<std::vector<Segment>> references;
};

Queries load_queries(const fs::path& path, const TokenizerConfig& tokenizer = {});

// --- hits -------------------------------------------------------------------

struct HitList {
    SegmentId query_id = 0;
    std::vector<ScoredId> hits;

    bool operator==(const HitList&) const = default;
};

void save_hits(const std::vector<HitList>& hits, const fs::path& path, const std::string& meta_json);
std::vector<HitList> load_hits(const fs::path& path, std::string* meta_json = nullptr);

// --- candidates -------------------------------------------------------------

/// JSONL, one TrainingExample per line:
/// {"id", "src", "tgt", "candidates": [{"id", "text", "lev"}, ...]}.
/// Loading recomputes Lev and rejects records whose stored values disagree
/// or are not sorted descending.
void save_examples(const std::vector<TrainingExample>& examples, const fs::path& path, const std::string& meta_json);
std::vector<TrainingExample> load_examples(const fs::path& path, const TokenizerConfig& tokenizer = {});

/// Plain parallel corpora load as examples without candidates.
std::vector<TrainingExample> load_examples_or_corpus(const fs::path& path, const TokenizerConfig& tokenizer = {});

// --- subcommands ------------------------------------------------------------

struct IngestOptions {
    fs::path input;
    std::optional<CorpusFormat> format;
    fs::path output;  ///< file, or directory when splitting
    std::vector<fs::path> held_out;  ///< corpora whose targets decontaminate a pool
    double decontam_threshold = 0.9;
    std::optional<std::size_t> prefilter_n = 100;
    std::optional<SplitFractions> split;
    std::uint64_t seed = 0;
    TokenizerConfig tokenizer;
};

/// Normalizes a corpus to JSONL. Pools are deduplicated and decontaminated
/// against `held_out`; parallel corpora are optionally split into
/// train/valid/test files under `output`.
void cmd_ingest(const IngestOptions& options);

enum class IndexSide { src, tgt };

struct LexicalIndexOptions {
    fs::path collection;
    IndexSide side = IndexSide::tgt;  ///< which side of a parallel collection
    fs::path output;
    Bm25Params bm25;
};

void cmd_build_lexical_index(const LexicalIndexOptions& options);

struct DenseIndexOptions {
    fs::path checkpoint;
    fs::path pool;
    fs::path output;
};

void cmd_build_dense_index(const DenseIndexOptions& options);

enum class MiningRetriever { lexical, dense };

struct MineOptions {
    fs::path corpus;
    std::optional<fs::path> pool;  ///< defaults to the corpus' own targets, self excluded
    MiningRetriever retriever = MiningRetriever::lexical;
    std::optional<fs::path> checkpoint;
    std::size_t k = 3;
    std::optional<std::size_t> prefilter_n = 100;
    fs::path output;
};

std::vector<TrainingExample> mine_candidates(const std::vector<TrainingExample>& queries,
                                             const std::vector<Segment>& pool_targets, MiningRetriever retriever,
                                             const EncoderParams* params, std::size_t k,
                                             std::optional<std::size_t> prefilter_n, bool exclude_self);

void cmd_mine_candidates(const MineOptions& options);

struct TrainOptions {
    fs::path config;
    fs::path train;
    std::optional<fs::path> valid;
    std::optional<fs::path> init;
    fs::path output;
    std::optional<fs::path> history;
};

void cmd_train(const TrainOptions& options);

struct RetrieveOptions {
    RetrieverKind retriever = RetrieverKind::dense;
    fs::path queries;
    fs::path pool;
    std::optional<fs::path> back_translations;
    std::optional<fs::path> lexical_index;
    std::optional<fs::path> dense_index;
    std::optional<fs::path> checkpoint;
    std::size_t k = 3;
    std::optional<double> threshold;
    std::optional<double> target_rate;
    std::optional<fs::path> calibration;
    std::optional<std::size_t> prefilter_n;
    unsigned threads = 0;
    fs::path output;
};

/// Unthresholded retrieval for `options.retriever` (threshold fields ignored).
std::vector<HitList> retrieve_raw(const RetrieveOptions& options);
void cmd_retrieve(const RetrieveOptions& options);

struct CalibrateOptions {
    fs::path hits;
    double target_rate = 0.5;
    fs::path output;
};

/// Best score per query from an unthresholded hits file; queries without
/// hits count as never retrieved.
double cmd_calibrate(const CalibrateOptions& options);

struct EvalOptions {
    fs::path hits;
    fs::path queries;
    fs::path pool;
    std::optional<fs::path> checkpoint;
    std::optional<fs::path> xsim_corpus;
    std::optional<fs::path> candidates;
    fs::path output;
    std::optional<fs::path> csv;
};

void cmd_eval(const EvalOptions& options);

struct ExportOptions {
    fs::path hits;
    fs::path queries;
    fs::path pool;
    CorpusFormat format = CorpusFormat::jsonl;
    fs::path output;
};

struct ExportedExample {
    SegmentId query_id = 0;
    std::string source;
    std::vector<std::string> targets;
    std::vector<double> scores;

    bool operator==(const ExportedExample&) const = default;
};

void cmd_export_examples(const ExportOptions& options);
std::vector<ExportedExample> load_exported(const fs::path& path);

struct SynthOptions {
    std::string kind = "bilingual";  ///< bilingual | zipf
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    std::uint64_t generator_seed = 1;
    fs::path output;
    std::optional<fs::path> bt_output;  ///< bilingual only
};

void cmd_synth(const SynthOptions& options);

}  // namespace tmret::pipeline
