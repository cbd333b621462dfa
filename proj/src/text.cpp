#include "tmret/text.hpp"

#include <cctype>

namespace tmret {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_punct(unsigned char c) {
    return c < 0x80 && std::ispunct(c) != 0;
}

}  // namespace

std::vector<Token> tokenize(std::string_view raw, const TokenizerConfig& config) {
    std::vector<Token> out;
    Token current;
    auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    for (const char ch : raw) {
        auto c = static_cast<unsigned char>(ch);
        if (is_space(c)) {
            flush();
            continue;
        }
        if (config.lowercase && c < 0x80) c = static_cast<unsigned char>(std::tolower(c));
        if (config.split_punctuation && is_punct(c)) {
            flush();
            out.emplace_back(1, static_cast<char>(c));
            continue;
        }
        current.push_back(static_cast<char>(c));
    }
    flush();
    return out;
}

std::string join_tokens(std::span<const Token> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

Segment make_segment(SegmentId id, std::string lang, std::string raw, const TokenizerConfig& config) {
    Segment s;
    s.id = id;
    s.lang = std::move(lang);
    s.tokens = tokenize(raw, config);
    s.raw = std::move(raw);
    return s;
}

}  // namespace tmret
