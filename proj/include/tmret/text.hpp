#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tmret {

using Token = std::string;
using SegmentId = std::uint64_t;

struct TokenizerConfig {
    /// Split ASCII punctuation off into single-character tokens.
    bool split_punctuation = true;
    /// ASCII lowercase folding; matching is case-sensitive otherwise.
    bool lowercase = false;
};

/// A tokenized sentence. `tokens` always equals tokenize(raw) under the
/// tokenizer config of the owning collection.
struct Segment {
    SegmentId id = 0;
    std::string lang;
    std::string raw;
    std::vector<Token> tokens;

    bool operator==(const Segment&) const = default;
};

/// Whitespace splitting, then (optionally) each ASCII punctuation byte becomes
/// its own token. Bytes >= 0x80 are word characters, so UTF-8 text is never
/// split inside a code point.
std::vector<Token> tokenize(std::string_view raw, const TokenizerConfig& config = {});

/// Tokens joined by single spaces. tokenize(join_tokens(t)) == t.
std::string join_tokens(std::span<const Token> tokens);

Segment make_segment(SegmentId id, std::string lang, std::string raw,
                     const TokenizerConfig& config = {});

/// Token-level Levenshtein distance (unit-cost insert/delete/substitute).
/// Two-row dynamic program, O(|a|·|b|) time and O(min(|a|,|b|)) memory.
template <typename T>
std::size_t levenshtein_distance(std::span<const T> a, std::span<const T> b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();

    thread_local std::vector<std::size_t> row;
    row.resize(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;

    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        const T& ai = a[i - 1];
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            const std::size_t sub = diag + (ai == b[j - 1] ? 0 : 1);
            row[j] = std::min({up + 1, row[j - 1] + 1, sub});
            diag = up;
        }
    }
    return row[b.size()];
}

/// 1 - distance / max(|a|, |b|). Two empty sequences are identical and score 1.
template <typename T>
double levenshtein_similarity(std::span<const T> a, std::span<const T> b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

inline std::size_t levenshtein_distance(const std::vector<Token>& a, const std::vector<Token>& b) {
    return levenshtein_distance(std::span<const Token>(a), std::span<const Token>(b));
}

inline double levenshtein_similarity(const std::vector<Token>& a, const std::vector<Token>& b) {
    return levenshtein_similarity(std::span<const Token>(a), std::span<const Token>(b));
}

}  // namespace tmret
