#include "tmret/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tmret/error.hpp"
#include "tmret/lexical.hpp"
#include "tmret/parallel.hpp"

namespace tmret {

using nlohmann::json;

namespace {

struct RawRecord {
    std::size_t line = 0;
    json object;                    // jsonl
    std::vector<std::string> cols;  // tsv
};

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

/// Reads data records, skipping blank lines and a leading "_meta" header.
std::vector<RawRecord> read_records(const std::filesystem::path& path, CorpusFormat format, json* meta) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path.string());

    std::vector<RawRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        RawRecord rec;
        rec.line = lineno;
        if (format == CorpusFormat::jsonl) {
            try {
                rec.object = json::parse(line);
            } catch (const json::parse_error& e) {
                throw Error(where(path, lineno) + "malformed JSON (" + e.what() + ")");
            }
            if (!rec.object.is_object()) throw Error(where(path, lineno) + "record is not a JSON object");
            if (rec.object.contains("_meta")) {
                if (!records.empty()) throw Error(where(path, lineno) + "_meta header must be the first record");
                if (meta) *meta = rec.object["_meta"];
                continue;
            }
        } else {
            std::size_t start = 0;
            while (true) {
                const std::size_t tab = line.find('\t', start);
                rec.cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
                if (tab == std::string::npos) break;
                start = tab + 1;
            }
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error("empty corpus file: " + path.string());
    return records;
}

std::string string_field(const std::filesystem::path& path, const RawRecord& rec, const char* name) {
    if (!rec.object.contains(name)) throw Error(where(path, rec.line) + "missing field \"" + name + "\"");
    const json& v = rec.object[name];
    if (!v.is_string()) throw Error(where(path, rec.line) + "field \"" + name + "\" is not a string");
    std::string s = v.get<std::string>();
    if (s.empty()) throw Error(where(path, rec.line) + "field \"" + name + "\" is empty");
    return s;
}

std::optional<SegmentId> id_field(const std::filesystem::path& path, const RawRecord& rec) {
    if (!rec.object.contains("id")) return std::nullopt;
    const json& v = rec.object["id"];
    if (!v.is_number_unsigned()) throw Error(where(path, rec.line) + "field \"id\" is not an unsigned integer");
    return v.get<SegmentId>();
}

std::string meta_string(const json& meta, const char* key, const std::string& fallback) {
    if (meta.is_object() && meta.contains(key) && meta[key].is_string()) return meta[key].get<std::string>();
    return fallback;
}

void write_meta(std::ofstream& out, json header, const std::string& meta_json) {
    if (!meta_json.empty()) header["config"] = json::parse(meta_json);
    out << json{{"_meta", header}}.dump(-1, ' ', false, json::error_handler_t::strict) << '\n';
}

void check_tsv_safe(const std::string& s) {
    if (s.find_first_of("\t\n\r") != std::string::npos)
        throw Error("text contains a tab or newline and cannot be written as TSV: " + s);
}

}  // namespace

std::vector<Segment> ParallelCorpus::sources() const {
    std::vector<Segment> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.source);
    return out;
}

std::vector<Segment> ParallelCorpus::targets() const {
    std::vector<Segment> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.target);
    return out;
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".tsv" || ext == ".txt") return CorpusFormat::tsv;
    return CorpusFormat::jsonl;
}

CorpusFormat parse_format(const std::string& name) {
    if (name == "jsonl") return CorpusFormat::jsonl;
    if (name == "tsv") return CorpusFormat::tsv;
    throw Error("unknown corpus format: " + name + " (expected jsonl or tsv)");
}

ParallelCorpus load_parallel(const std::filesystem::path& path, CorpusFormat format,
                             const TokenizerConfig& tokenizer) {
    json meta;
    const auto records = read_records(path, format, &meta);
    ParallelCorpus corpus;
    corpus.tokenizer = tokenizer;
    corpus.src_lang = meta_string(meta, "src_lang", corpus.src_lang);
    corpus.tgt_lang = meta_string(meta, "tgt_lang", corpus.tgt_lang);
    corpus.pairs.reserve(records.size());

    for (std::size_t i = 0; i < records.size(); ++i) {
        const RawRecord& rec = records[i];
        std::string src, tgt;
        if (format == CorpusFormat::jsonl) {
            src = string_field(path, rec, "src");
            tgt = string_field(path, rec, "tgt");
            if (auto id = id_field(path, rec); id && *id != i)
                throw Error(where(path, rec.line) + "parallel ids must be dense and in file order (expected " +
                            std::to_string(i) + ")");
        } else {
            if (rec.cols.size() < 2) throw Error(where(path, rec.line) + "missing field \"tgt\" (no tab separator)");
            if (rec.cols.size() > 2) throw Error(where(path, rec.line) + "expected 2 tab-separated fields");
            src = rec.cols[0];
            tgt = rec.cols[1];
            if (src.empty()) throw Error(where(path, rec.line) + "field \"src\" is empty");
            if (tgt.empty()) throw Error(where(path, rec.line) + "field \"tgt\" is empty");
        }
        corpus.pairs.push_back(SegmentPair{make_segment(i, corpus.src_lang, std::move(src), tokenizer),
                                           make_segment(i, corpus.tgt_lang, std::move(tgt), tokenizer)});
    }
    return corpus;
}

MonolingualPool load_monolingual(const std::filesystem::path& path, CorpusFormat format,
                                 const TokenizerConfig& tokenizer) {
    json meta;
    const auto records = read_records(path, format, &meta);
    MonolingualPool pool;
    pool.tokenizer = tokenizer;
    pool.lang = meta_string(meta, "lang", pool.lang);
    pool.segments.reserve(records.size());

    std::unordered_set<SegmentId> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RawRecord& rec = records[i];
        std::string text;
        SegmentId id = i;
        if (format == CorpusFormat::jsonl) {
            text = string_field(path, rec, "text");
            if (auto explicit_id = id_field(path, rec)) id = *explicit_id;
        } else {
            text = rec.cols.size() == 1 ? rec.cols[0] : std::string{};
            if (rec.cols.size() != 1) throw Error(where(path, rec.line) + "monolingual TSV lines hold a single field");
            if (text.empty()) throw Error(where(path, rec.line) + "field \"text\" is empty");
        }
        if (!seen.insert(id).second) throw Error(where(path, rec.line) + "duplicate id " + std::to_string(id));
        pool.segments.push_back(make_segment(id, pool.lang, std::move(text), tokenizer));
    }
    return pool;
}

std::variant<ParallelCorpus, MonolingualPool> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                                          const TokenizerConfig& tokenizer) {
    const auto records = read_records(path, format, nullptr);
    const RawRecord& first = records.front();
    const bool monolingual = format == CorpusFormat::jsonl ? first.object.contains("text") && !first.object.contains("src")
                                                           : first.cols.size() == 1;
    if (monolingual) return load_monolingual(path, format, tokenizer);
    return load_parallel(path, format, tokenizer);
}

void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& path, CorpusFormat format,
                   const std::string& meta_json) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    if (format == CorpusFormat::jsonl) {
        write_meta(out, json{{"kind", "parallel"}, {"src_lang", corpus.src_lang}, {"tgt_lang", corpus.tgt_lang}},
                   meta_json);
        for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
            const auto& p = corpus.pairs[i];
            out << json{{"id", i}, {"src", p.source.raw}, {"tgt", p.target.raw}}.dump() << '\n';
        }
    } else {
        for (const auto& p : corpus.pairs) {
            check_tsv_safe(p.source.raw);
            check_tsv_safe(p.target.raw);
            out << p.source.raw << '\t' << p.target.raw << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

void save_monolingual(const MonolingualPool& pool, const std::filesystem::path& path, CorpusFormat format,
                      const std::string& meta_json) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    if (format == CorpusFormat::jsonl) {
        write_meta(out, json{{"kind", "monolingual"}, {"lang", pool.lang}}, meta_json);
        for (const auto& s : pool.segments) out << json{{"id", s.id}, {"text", s.raw}}.dump() << '\n';
    } else {
        for (const auto& s : pool.segments) {
            check_tsv_safe(s.raw);
            out << s.raw << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

CorpusSplit split(const ParallelCorpus& corpus, const SplitFractions& f, std::uint64_t seed) {
    if (!(f.train > 0 && f.valid > 0 && f.test > 0)) throw Error("split: fractions must be positive");
    if (std::abs(f.train + f.valid + f.test - 1.0) > 1e-9) throw Error("split: fractions must sum to 1");
    const std::size_t n = corpus.size();
    if (n < 3) throw Error("split: corpus needs at least 3 pairs, has " + std::to_string(n));

    auto part_size = [n](double frac) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9)));
    };
    const std::size_t n_valid = part_size(f.valid);
    const std::size_t n_test = part_size(f.test);
    if (n_valid + n_test >= n) throw Error("split: no pairs left for train");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    auto take = [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(idx.begin(), idx.end());
        ParallelCorpus part;
        part.src_lang = corpus.src_lang;
        part.tgt_lang = corpus.tgt_lang;
        part.tokenizer = corpus.tokenizer;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            SegmentPair p = corpus.pairs[idx[i]];
            p.source.id = p.target.id = i;
            part.pairs.push_back(std::move(p));
        }
        return part;
    };
    CorpusSplit out;
    out.valid = take(0, n_valid);
    out.test = take(n_valid, n_valid + n_test);
    out.train = take(n_valid + n_test, n);
    return out;
}

MonolingualPool decontaminate(const MonolingualPool& pool, const std::vector<Segment>& held_out, double threshold,
                              const DecontaminationOptions& options) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("decontaminate: threshold must lie in [0, 1]");

    MonolingualPool out;
    out.lang = pool.lang;
    out.tokenizer = pool.tokenizer;
    std::vector<const Segment*> unique;
    std::unordered_set<std::string_view> seen;
    for (const Segment& s : pool.segments)
        if (seen.insert(s.raw).second) unique.push_back(&s);

    if (held_out.empty()) {
        for (const Segment* s : unique) out.segments.push_back(*s);
        return out;
    }

    const FuzzyMatcher matcher(held_out);
    FuzzyMatchOptions match_opts;
    match_opts.k = 1;
    match_opts.prefilter_n = options.prefilter_n;
    match_opts.threshold = 0.0;

    std::vector<char> keep(unique.size(), 1);
    parallel_for(unique.size(), 0, [&](std::size_t i) {
        const FuzzyMatchResult r = matcher.match(*unique[i], match_opts);
        if (!r.hits.empty() && r.hits.front().score > threshold) keep[i] = 0;
    });
    for (std::size_t i = 0; i < unique.size(); ++i)
        if (keep[i]) out.segments.push_back(*unique[i]);
    return out;
}

}  // namespace tmret
