#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "tmret/corpus.hpp"

namespace tmret::synth {

/// Templated pseudo-bilingual generator.
///
/// Target sentences instantiate one of `num_templates` templates: each
/// position is either a fixed frame word or a slot filled from a shared
/// category of content words. Target instances get `target_noise` edit
/// noise. The source side is a fixed token relabeling of the target (a
/// bijection onto a disjoint vocabulary) plus `source_noise` edit noise.
struct BilingualConfig {
    std::size_t num_templates = 60;
    std::size_t frame_vocab = 200;
    std::size_t num_categories = 12;
    std::size_t fillers_per_category = 60;
    std::size_t min_len = 8;
    std::size_t max_len = 16;
    double slot_fraction = 0.4;
    double target_noise = 0.08;
    double source_noise = 0.08;
};

class BilingualGenerator {
public:
    BilingualGenerator(const BilingualConfig& config, std::uint64_t seed);

    /// Token sequences of one sampled pair.
    std::pair<std::vector<std::string>, std::vector<std::string>> sample(std::mt19937_64& rng) const;

    /// `n` pairs with ids 0..n-1.
    ParallelCorpus corpus(std::size_t n, std::uint64_t seed) const;

    /// Relabeled target with fresh source-side noise, standing in for a
    /// back-translation of `target` into the source language.
    std::string back_translate(const Segment& target, std::mt19937_64& rng) const;

    std::size_t target_vocab_size() const { return target_words_.size(); }

private:
    struct Slot {
        bool is_frame = true;
        std::size_t word = 0;  // frame word index or category index
    };

    std::vector<std::string> relabel_with_noise(const std::vector<std::string>& target, std::mt19937_64& rng) const;
    void apply_noise(std::vector<std::string>& tokens, double rate, const std::vector<std::string>& vocab,
                     std::mt19937_64& rng) const;

    BilingualConfig config_;
    std::vector<std::vector<Slot>> templates_;
    std::vector<std::string> target_words_;  // frame words then fillers
    std::vector<std::string> source_words_;  // source_words_[i] translates target_words_[i]
    std::vector<std::size_t> category_offset_;
    std::unordered_map<std::string, std::size_t> target_index_;
};

/// Unigram Zipf sentences over a `vocab`-word vocabulary.
struct ZipfConfig {
    std::size_t vocab = 20000;
    double exponent = 1.0;
    std::size_t min_len = 6;
    std::size_t max_len = 30;
};

class ZipfGenerator {
public:
    explicit ZipfGenerator(const ZipfConfig& config);

    std::string word(std::mt19937_64& rng) const;
    std::vector<std::string> sentence(std::mt19937_64& rng) const;
    std::vector<Segment> segments(std::size_t n, std::uint64_t seed, const std::string& lang = "tgt") const;

    /// Copy of `tokens` where each position is, with probability `rate`,
    /// substituted, deleted or followed by an inserted word.
    std::vector<std::string> perturb(const std::vector<std::string>& tokens, double rate, std::mt19937_64& rng) const;

private:
    ZipfConfig config_;
    std::vector<double> cdf_;
};

}  // namespace tmret::synth
