// tmret: command-line front end. Failures print one JSON line on stderr,
// {"error": <message>, "command": <subcommand>}, and exit nonzero.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tmret/error.hpp"
#include "tmret/pipeline.hpp"

namespace pl = tmret::pipeline;
namespace fs = std::filesystem;

namespace {

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

// 0 disables the BM25 prefilter (exact scan).
std::optional<std::size_t> opt_prefilter(std::size_t n) {
    if (n == 0) return std::nullopt;
    return n;
}

int fail(const std::string& command, const std::string& message, int code) {
    std::cerr << nlohmann::json{{"error", message}, {"command", command}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Translation-memory retrieval: fuzzy matching, dense encoders and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tmret 0.1.0");

    // ingest
    pl::IngestOptions ingest;
    std::string ingest_format, split_arg;
    std::size_t ingest_prefilter = 100;
    auto* c_ingest = app.add_subcommand("ingest", "Normalize, split or decontaminate a corpus");
    c_ingest->add_option("--input", ingest.input, "Input corpus (JSONL or TSV)")->required();
    c_ingest->add_option("--format", ingest_format, "jsonl | tsv (default: from extension)");
    c_ingest->add_option("--output", ingest.output, "Output file, or directory with --split")->required();
    c_ingest->add_option("--held-out", ingest.held_out, "Held-out corpora for pool decontamination");
    c_ingest->add_option("--decontam-threshold", ingest.decontam_threshold, "Drop pool segments with Lev above this")
        ->check(CLI::Range(0.0, 1.0));
    c_ingest->add_option("--prefilter-n", ingest_prefilter, "BM25 prefilter size, 0 for exact scan");
    c_ingest->add_option("--split", split_arg, "train,valid,test fractions, e.g. 0.8,0.1,0.1");
    c_ingest->add_option("--seed", ingest.seed, "Split seed");
    c_ingest->add_flag("--lowercase", ingest.tokenizer.lowercase, "Lowercase tokens");

    // build-lexical-index
    pl::LexicalIndexOptions lex;
    std::string lex_side = "tgt";
    auto* c_lex = app.add_subcommand("build-lexical-index", "Build a BM25 index over one side of a collection");
    c_lex->add_option("--collection", lex.collection)->required();
    c_lex->add_option("--side", lex_side, "src | tgt")->check(CLI::IsMember({"src", "tgt"}));
    c_lex->add_option("--output", lex.output)->required();
    c_lex->add_option("--k1", lex.bm25.k1);
    c_lex->add_option("--b", lex.bm25.b);

    // build-dense-index
    pl::DenseIndexOptions dense;
    auto* c_dense = app.add_subcommand("build-dense-index", "Encode a pool into a flat vector index");
    c_dense->add_option("--checkpoint", dense.checkpoint)->required();
    c_dense->add_option("--pool", dense.pool)->required();
    c_dense->add_option("--output", dense.output)->required();

    // mine-candidates
    pl::MineOptions mine;
    std::string mine_pool, mine_ckpt, mine_retriever = "lexical";
    std::size_t mine_prefilter = 100;
    auto* c_mine = app.add_subcommand("mine-candidates", "Attach top-k candidates with Lev to each training pair");
    c_mine->add_option("--corpus", mine.corpus)->required();
    c_mine->add_option("--pool", mine_pool, "Candidate pool (default: the corpus' own targets, self excluded)");
    c_mine->add_option("--retriever", mine_retriever, "lexical | dense")->check(CLI::IsMember({"lexical", "dense"}));
    c_mine->add_option("--checkpoint", mine_ckpt, "Encoder for dense mining");
    c_mine->add_option("--k", mine.k)->check(CLI::PositiveNumber);
    c_mine->add_option("--prefilter-n", mine_prefilter, "BM25 prefilter size, 0 for exact scan");
    c_mine->add_option("--output", mine.output)->required();

    // train
    pl::TrainOptions train;
    std::string train_valid, train_init, train_history;
    auto* c_train = app.add_subcommand("train", "Train or fine-tune an encoder");
    c_train->add_option("--config", train.config, "key=value training config")->required();
    c_train->add_option("--train", train.train, "Parallel corpus or mined candidates")->required();
    c_train->add_option("--valid", train_valid, "Validation corpus or candidates");
    c_train->add_option("--init", train_init, "Checkpoint to fine-tune from");
    c_train->add_option("--output", train.output)->required();
    c_train->add_option("--history", train_history, "Write loss and NDCG history as JSON");

    // calibrate
    pl::CalibrateOptions cal;
    auto* c_cal = app.add_subcommand("calibrate", "Pick the threshold reaching a target retrieval rate");
    c_cal->add_option("--hits", cal.hits, "Unthresholded hits file")->required();
    c_cal->add_option("--target-rate", cal.target_rate)->check(CLI::Range(0.0, 1.0));
    c_cal->add_option("--output", cal.output)->required();

    // retrieve
    pl::RetrieveOptions ret;
    std::string ret_kind, ret_bt, ret_lex, ret_dense, ret_ckpt, ret_cal;
    std::optional<double> ret_threshold, ret_rate;
    std::size_t ret_prefilter = 0;
    auto* c_ret = app.add_subcommand("retrieve", "Retrieve top-k pool examples for each query");
    c_ret->add_option("--retriever", ret_kind, "fuzzy-src | fuzzy-gold | fuzzy-bt | dense | dense+bow | ft-MSE | ft-MAE | ft-Rank")
        ->required();
    c_ret->add_option("--queries", ret.queries)->required();
    c_ret->add_option("--pool", ret.pool)->required();
    c_ret->add_option("--back-translations", ret_bt, "Pool back-translations (fuzzy-bt)");
    c_ret->add_option("--lexical-index", ret_lex);
    c_ret->add_option("--dense-index", ret_dense);
    c_ret->add_option("--checkpoint", ret_ckpt);
    c_ret->add_option("--k", ret.k)->check(CLI::PositiveNumber);
    c_ret->add_option("--threshold", ret_threshold);
    c_ret->add_option("--target-rate", ret_rate)->check(CLI::Range(0.0, 1.0));
    c_ret->add_option("--calibration", ret_cal, "Calibration JSON from `calibrate`");
    c_ret->add_option("--prefilter-n", ret_prefilter, "BM25 prefilter size for fuzzy retrievers, 0 for exact scan");
    c_ret->add_option("--threads", ret.threads, "Worker threads, 0 for all cores");
    c_ret->add_option("--output", ret.output)->required();

    // eval
    pl::EvalOptions ev;
    std::string ev_ckpt, ev_xsim, ev_cands, ev_csv;
    auto* c_eval = app.add_subcommand("eval", "Score a hits file: Lev@1, retrieval rate, xsim, NDCG");
    c_eval->add_option("--hits", ev.hits)->required();
    c_eval->add_option("--queries", ev.queries, "Queries with references")->required();
    c_eval->add_option("--pool", ev.pool)->required();
    c_eval->add_option("--checkpoint", ev_ckpt);
    c_eval->add_option("--xsim-corpus", ev_xsim, "Parallel corpus for xsim error");
    c_eval->add_option("--candidates", ev_cands, "Mined candidates for NDCG");
    c_eval->add_option("--output", ev.output)->required();
    c_eval->add_option("--csv", ev_csv, "Per-query CSV");

    // export-examples
    pl::ExportOptions ex;
    std::string ex_format = "jsonl";
    auto* c_ex = app.add_subcommand("export-examples", "Join hits with texts for downstream prompting");
    c_ex->add_option("--hits", ex.hits)->required();
    c_ex->add_option("--queries", ex.queries)->required();
    c_ex->add_option("--pool", ex.pool)->required();
    c_ex->add_option("--format", ex_format, "jsonl | tsv")->check(CLI::IsMember({"jsonl", "tsv"}));
    c_ex->add_option("--output", ex.output)->required();

    // synth
    pl::SynthOptions syn;
    std::string syn_bt;
    auto* c_syn = app.add_subcommand("synth", "Generate a synthetic corpus");
    c_syn->add_option("--kind", syn.kind, "bilingual | zipf")->check(CLI::IsMember({"bilingual", "zipf"}));
    c_syn->add_option("--n", syn.n);
    c_syn->add_option("--seed", syn.seed);
    c_syn->add_option("--generator-seed", syn.generator_seed);
    c_syn->add_option("--output", syn.output)->required();
    c_syn->add_option("--bt-output", syn_bt, "Also write synthetic back-translations");

    std::string command = "tmret";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
        return fail(command, e.what(), 2);
    }

    try {
        command = app.get_subcommands().front()->get_name();
        if (c_ingest->parsed()) {
            if (!ingest_format.empty()) ingest.format = tmret::parse_format(ingest_format);
            ingest.prefilter_n = opt_prefilter(ingest_prefilter);
            if (!split_arg.empty()) {
                tmret::SplitFractions f;
                char c1 = 0, c2 = 0;
                std::istringstream in(split_arg);
                if (!(in >> f.train >> c1 >> f.valid >> c2 >> f.test) || c1 != ',' || c2 != ',' || !in.eof())
                    throw tmret::Error("bad --split, expected three comma-separated fractions: " + split_arg);
                ingest.split = f;
            }
            pl::cmd_ingest(ingest);
        } else if (c_lex->parsed()) {
            lex.side = lex_side == "src" ? pl::IndexSide::src : pl::IndexSide::tgt;
            pl::cmd_build_lexical_index(lex);
        } else if (c_dense->parsed()) {
            pl::cmd_build_dense_index(dense);
        } else if (c_mine->parsed()) {
            mine.pool = opt_path(mine_pool);
            mine.checkpoint = opt_path(mine_ckpt);
            mine.retriever = mine_retriever == "dense" ? pl::MiningRetriever::dense : pl::MiningRetriever::lexical;
            mine.prefilter_n = opt_prefilter(mine_prefilter);
            pl::cmd_mine_candidates(mine);
        } else if (c_train->parsed()) {
            train.valid = opt_path(train_valid);
            train.init = opt_path(train_init);
            train.history = opt_path(train_history);
            pl::cmd_train(train);
        } else if (c_cal->parsed()) {
            const double t = pl::cmd_calibrate(cal);
            std::cout << nlohmann::json{{"threshold", t}}.dump() << '\n';
        } else if (c_ret->parsed()) {
            ret.retriever = pl::parse_retriever(ret_kind);
            ret.back_translations = opt_path(ret_bt);
            ret.lexical_index = opt_path(ret_lex);
            ret.dense_index = opt_path(ret_dense);
            ret.checkpoint = opt_path(ret_ckpt);
            ret.calibration = opt_path(ret_cal);
            ret.threshold = ret_threshold;
            ret.target_rate = ret_rate;
            ret.prefilter_n = opt_prefilter(ret_prefilter);
            pl::cmd_retrieve(ret);
        } else if (c_eval->parsed()) {
            ev.checkpoint = opt_path(ev_ckpt);
            ev.xsim_corpus = opt_path(ev_xsim);
            ev.candidates = opt_path(ev_cands);
            ev.csv = opt_path(ev_csv);
            pl::cmd_eval(ev);
        } else if (c_ex->parsed()) {
            ex.format = tmret::parse_format(ex_format);
            pl::cmd_export_examples(ex);
        } else if (c_syn->parsed()) {
            syn.bt_output = opt_path(syn_bt);
            pl::cmd_synth(syn);
        }
    } catch (const std::exception& e) {
        return fail(command, e.what(), 1);
    }
    return 0;
}
