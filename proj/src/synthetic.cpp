#include "tmret/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tmret/error.hpp"

namespace tmret::synth {

BilingualGenerator::BilingualGenerator(const BilingualConfig& config, std::uint64_t seed) : config_(config) {
    if (config.min_len == 0 || config.min_len > config.max_len) throw Error("synth: bad length range");
    if (config.frame_vocab == 0 || config.num_categories == 0 || config.fillers_per_category == 0)
        throw Error("synth: vocabulary sizes must be positive");
    std::mt19937_64 rng(seed);

    for (std::size_t i = 0; i < config.frame_vocab; ++i) target_words_.push_back("tf" + std::to_string(i));
    for (std::size_t c = 0; c < config.num_categories; ++c) {
        category_offset_.push_back(target_words_.size());
        for (std::size_t j = 0; j < config.fillers_per_category; ++j)
            target_words_.push_back("tc" + std::to_string(c) + "w" + std::to_string(j));
    }
    for (std::size_t i = 0; i < target_words_.size(); ++i) target_index_.emplace(target_words_[i], i);

    std::vector<std::size_t> perm(target_words_.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (const std::size_t p : perm) source_words_.push_back("s" + std::to_string(p));

    std::uniform_int_distribution<std::size_t> len_dist(config.min_len, config.max_len);
    std::uniform_int_distribution<std::size_t> frame_dist(0, config.frame_vocab - 1);
    std::uniform_int_distribution<std::size_t> cat_dist(0, config.num_categories - 1);
    std::bernoulli_distribution is_slot(config.slot_fraction);
    for (std::size_t t = 0; t < config.num_templates; ++t) {
        std::vector<Slot> tpl(len_dist(rng));
        for (auto& s : tpl) {
            s.is_frame = !is_slot(rng);
            s.word = s.is_frame ? frame_dist(rng) : cat_dist(rng);
        }
        templates_.push_back(std::move(tpl));
    }
}

void BilingualGenerator::apply_noise(std::vector<std::string>& tokens, double rate,
                                     const std::vector<std::string>& vocab, std::mt19937_64& rng) const {
    if (rate <= 0.0) return;
    std::bernoulli_distribution edit(rate);
    std::uniform_int_distribution<int> op(0, 2);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::vector<std::string> out;
    out.reserve(tokens.size() + 4);
    for (auto& tok : tokens) {
        if (!edit(rng)) {
            out.push_back(std::move(tok));
            continue;
        }
        switch (op(rng)) {
            case 0: out.push_back(vocab[pick(rng)]); break;
            case 1: break;
            default:
                out.push_back(std::move(tok));
                out.push_back(vocab[pick(rng)]);
        }
    }
    if (out.empty()) out.push_back(vocab[pick(rng)]);
    tokens = std::move(out);
}

std::vector<std::string> BilingualGenerator::relabel_with_noise(const std::vector<std::string>& target,
                                                                std::mt19937_64& rng) const {
    std::vector<std::string> source;
    source.reserve(target.size());
    for (const auto& tok : target) {
        auto it = target_index_.find(tok);
        if (it == target_index_.end()) throw Error("synth: token outside the target vocabulary: " + tok);
        source.push_back(source_words_[it->second]);
    }
    apply_noise(source, config_.source_noise, source_words_, rng);
    return source;
}

std::pair<std::vector<std::string>, std::vector<std::string>> BilingualGenerator::sample(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> tpl_dist(0, templates_.size() - 1);
    std::uniform_int_distribution<std::size_t> filler_dist(0, config_.fillers_per_category - 1);
    const auto& tpl = templates_[tpl_dist(rng)];
    std::vector<std::string> target;
    target.reserve(tpl.size());
    for (const Slot& s : tpl)
        target.push_back(s.is_frame ? target_words_[s.word] : target_words_[category_offset_[s.word] + filler_dist(rng)]);
    apply_noise(target, config_.target_noise, target_words_, rng);
    auto source = relabel_with_noise(target, rng);
    return {std::move(source), std::move(target)};
}

ParallelCorpus BilingualGenerator::corpus(std::size_t n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    ParallelCorpus c;
    c.pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [src, tgt] = sample(rng);
        c.pairs.push_back(SegmentPair{make_segment(i, c.src_lang, join_tokens(src)),
                                      make_segment(i, c.tgt_lang, join_tokens(tgt))});
    }
    return c;
}

std::string BilingualGenerator::back_translate(const Segment& target, std::mt19937_64& rng) const {
    return join_tokens(relabel_with_noise(target.tokens, rng));
}

ZipfGenerator::ZipfGenerator(const ZipfConfig& config) : config_(config) {
    if (config.vocab == 0 || config.min_len == 0 || config.min_len > config.max_len)
        throw Error("synth: bad Zipf configuration");
    cdf_.resize(config.vocab);
    double acc = 0.0;
    for (std::size_t r = 0; r < config.vocab; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), config.exponent);
        cdf_[r] = acc;
    }
    for (auto& v : cdf_) v /= acc;
}

std::string ZipfGenerator::word(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u(rng));
    const auto rank = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return "w" + std::to_string(rank);
}

std::vector<std::string> ZipfGenerator::sentence(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> len(config_.min_len, config_.max_len);
    std::vector<std::string> out(len(rng));
    for (auto& w : out) w = word(rng);
    return out;
}

std::vector<Segment> ZipfGenerator::segments(std::size_t n, std::uint64_t seed, const std::string& lang) const {
    std::mt19937_64 rng(seed);
    std::vector<Segment> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(make_segment(i, lang, join_tokens(sentence(rng))));
    return out;
}

std::vector<std::string> ZipfGenerator::perturb(const std::vector<std::string>& tokens, double rate,
                                                std::mt19937_64& rng) const {
    std::bernoulli_distribution edit(rate);
    std::uniform_int_distribution<int> op(0, 2);
    std::vector<std::string> out;
    out.reserve(tokens.size() + 4);
    for (const auto& tok : tokens) {
        if (!edit(rng)) {
            out.push_back(tok);
            continue;
        }
        switch (op(rng)) {
            case 0: out.push_back(word(rng)); break;
            case 1: break;
            default:
                out.push_back(tok);
                out.push_back(word(rng));
        }
    }
    if (out.empty()) out.push_back(word(rng));
    return out;
}

}  // namespace tmret::synth
