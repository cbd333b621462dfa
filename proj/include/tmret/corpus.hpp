#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tmret/text.hpp"

namespace tmret {

struct SegmentPair {
    Segment source;
    Segment target;

    bool operator==(const SegmentPair&) const = default;
};

/// Aligned (source, target) pairs. Pair i carries id i on both sides.
struct ParallelCorpus {
    std::vector<SegmentPair> pairs;
    std::string src_lang = "src";
    std::string tgt_lang = "tgt";
    TokenizerConfig tokenizer;

    std::size_t size() const { return pairs.size(); }
    std::vector<Segment> sources() const;
    std::vector<Segment> targets() const;

    bool operator==(const ParallelCorpus& o) const {
        return pairs == o.pairs && src_lang == o.src_lang && tgt_lang == o.tgt_lang;
    }
};

/// Target-language retrieval pool. Ids are unique but need not be dense
/// (decontamination drops segments without renumbering).
struct MonolingualPool {
    std::vector<Segment> segments;
    std::string lang = "tgt";
    TokenizerConfig tokenizer;

    std::size_t size() const { return segments.size(); }

    bool operator==(const MonolingualPool& o) const {
        return segments == o.segments && lang == o.lang;
    }
};

enum class CorpusFormat { jsonl, tsv };

CorpusFormat format_from_path(const std::filesystem::path& path);
CorpusFormat parse_format(const std::string& name);

/// JSONL records carry "src"/"tgt" (parallel) or "text" (monolingual), with an
/// optional "id". A leading object with a "_meta" key is a self-description
/// header and is skipped. TSV lines are "source<TAB>target" or a bare text.
/// Errors name the 1-based line number and the missing field.
ParallelCorpus load_parallel(const std::filesystem::path& path, CorpusFormat format,
                             const TokenizerConfig& tokenizer = {});
MonolingualPool load_monolingual(const std::filesystem::path& path, CorpusFormat format,
                                 const TokenizerConfig& tokenizer = {});

/// Detects the record kind from the first data record.
std::variant<ParallelCorpus, MonolingualPool> load_corpus(const std::filesystem::path& path,
                                                          CorpusFormat format,
                                                          const TokenizerConfig& tokenizer = {});

/// Writers. JSONL output embeds `meta_json` (a serialized JSON object, may be
/// empty) as a leading "_meta" record; TSV drops ids and metadata.
void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& path,
                   CorpusFormat format, const std::string& meta_json = "");
void save_monolingual(const MonolingualPool& pool, const std::filesystem::path& path,
                      CorpusFormat format, const std::string& meta_json = "");

struct SplitFractions {
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
};

struct CorpusSplit {
    ParallelCorpus train;
    ParallelCorpus valid;
    ParallelCorpus test;
};

/// Seeded shuffle then partition. Valid and test take floor(fraction·N)
/// (at least one each); the remainder goes to train. Each part is
/// renumbered densely.
CorpusSplit split(const ParallelCorpus& corpus, const SplitFractions& fractions, std::uint64_t seed);

struct DecontaminationOptions {
    /// BM25 candidates rescored per pool segment; nullopt scans all of held_out.
    std::optional<std::size_t> prefilter_n = 100;
};

/// Drops exact duplicate raw strings (first occurrence kept), then every
/// segment whose best Levenshtein similarity against `held_out` is strictly
/// greater than `threshold`. Surviving segments keep their ids and order.
MonolingualPool decontaminate(const MonolingualPool& pool, const std::vector<Segment>& held_out,
                              double threshold, const DecontaminationOptions& options = {});

}  // namespace tmret
