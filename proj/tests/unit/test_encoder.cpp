#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "tmret/encoder.hpp"
#include "tmret/synthetic.hpp"

using namespace tmret;
namespace fs = std::filesystem;

namespace {

Vocabulary toy_vocab() {
    std::vector<std::string> words{Vocabulary::kUnkToken};
    for (int i = 0; i < 8; ++i) words.push_back("w" + std::to_string(i));
    return Vocabulary::from_tokens(words);
}

Segment seg(SegmentId id, const std::string& text) { return make_segment(id, "t", text); }

EncoderParams toy_params(std::uint64_t seed) {
    EncoderParams p = EncoderParams::init(toy_vocab(), 5, seed);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> g(0.0, 0.5);
    // Non-trivial heads and mapping so that every gradient block is exercised.
    for (Eigen::Index i = 0; i < p.w.bow_src.size(); ++i) p.w.bow_src.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < p.w.bow_tgt.size(); ++i) p.w.bow_tgt.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < p.w.proj_bias.size(); ++i) p.w.proj_bias[i] = g(rng);
    p.w.a = 1.3;
    p.w.b = -0.2;
    return p;
}

/// Central differences over every parameter, compared with the analytic gradient.
void check_gradient(const EncoderParams& params, const std::function<double(const EncoderParams&, Weights*)>& loss) {
    Weights analytic = params.w.zeros_like();
    loss(params, &analytic);

    EncoderParams probe = params;
    std::vector<double*> slots;
    probe.w.for_each([&](double& v) { slots.push_back(&v); });
    std::vector<double> grads;
    analytic.for_each([&](double& v) { grads.push_back(v); });
    ASSERT_EQ(slots.size(), grads.size());

    const double h = 1e-5;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const double saved = *slots[i];
        *slots[i] = saved + h;
        const double up = loss(probe, nullptr);
        *slots[i] = saved - h;
        const double down = loss(probe, nullptr);
        *slots[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(grads[i]), 1e-4});
        EXPECT_LT(std::abs(numeric - grads[i]) / scale, 1e-4) << "parameter " << i;
    }
}

}  // namespace

TEST(Encoder, UnitNormDeterministicFinite) {
    const EncoderParams p = EncoderParams::init(toy_vocab(), 16, 7);
    for (const auto* text : {"w0 w1 w2", "w3", "", "unknown words only", "w0 w0 w0 w7"}) {
        const Eigen::VectorXd v = encode(p, seg(0, text));
        EXPECT_EQ(v.size(), 16);
        EXPECT_TRUE(v.allFinite());
        EXPECT_NEAR(v.norm(), 1.0, 1e-6);
        EXPECT_EQ(v, encode(p, seg(0, text)));
    }
    EXPECT_EQ(encode(p, seg(0, "")), encode(p, seg(0, Vocabulary::kUnkToken)));
    EXPECT_EQ(EncoderParams::init(toy_vocab(), 16, 7), p);
    EXPECT_FALSE(EncoderParams::init(toy_vocab(), 16, 8) == p);
}

TEST(Encoder, VocabularyMustStartWithUnk) {
    const std::vector<std::string> bad{"w0", "w1"};
    EXPECT_THROW(Vocabulary::from_tokens(bad), std::exception);
    const Vocabulary v = toy_vocab();
    EXPECT_EQ(v.index("w3"), 4u);
    EXPECT_EQ(v.index("nope"), Vocabulary::kUnk);
}

TEST(Mapping, Examples) {
    EXPECT_DOUBLE_EQ(mapping_f(1.0, 0.0, 0.0), 0.5);
    EXPECT_NEAR(mapping_f(2.0, -1.0, std::tanh(0.5)), 0.5, 1e-12);
    const double clamped = 1.0 / (1.0 + std::exp(-std::atanh(1.0 - kAtanhClamp)));
    EXPECT_NEAR(mapping_f(1.0, 0.0, 1.0), clamped, 1e-12);
    EXPECT_TRUE(std::isfinite(mapping_f(1.0, 0.0, -1.0)));
}

TEST(Mapping, MonotoneForPositiveSlope) {
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = -1.0 + 2.0 * i / 1000.0;
        const double f = mapping_f(0.7, 0.3, t);
        EXPECT_GE(f, prev);
        EXPECT_GT(f, 0.0);
        EXPECT_LT(f, 1.0);
        prev = f;
    }
}

TEST(Mapping, GradientMatchesDifferences) {
    const double a = 1.7, b = -0.4, t = 0.3, h = 1e-6;
    const MappingValue m = mapping_f_with_grad(a, b, t);
    EXPECT_DOUBLE_EQ(m.f, mapping_f(a, b, t));
    EXPECT_NEAR(m.df_dt, (mapping_f(a, b, t + h) - mapping_f(a, b, t - h)) / (2 * h), 1e-7);
    EXPECT_NEAR(m.df_da, (mapping_f(a + h, b, t) - mapping_f(a - h, b, t)) / (2 * h), 1e-7);
    EXPECT_NEAR(m.df_db, (mapping_f(a, b + h, t) - mapping_f(a, b - h, t)) / (2 * h), 1e-7);
}

TEST(Losses, RegressionZeroExactlyAtTarget) {
    const EncoderParams p = toy_params(1);
    const Segment x = seg(0, "w0 w1"), c = seg(1, "w2 w3 w1");
    const double f = mapping_f(p.w.a, p.w.b, similarity(p, x, c));
    const double shifted = f > 0.5 ? f - 0.1 : f + 0.1;
    for (const auto kind : {ErrKind::mse, ErrKind::mae}) {
        EXPECT_DOUBLE_EQ(loss_regression(p, x, c, f, kind), 0.0);
        EXPECT_GT(loss_regression(p, x, c, shifted, kind), 0.0);
    }
    EXPECT_NEAR(loss_regression(p, x, c, shifted, ErrKind::mse), 0.01, 1e-12);
    EXPECT_NEAR(loss_regression(p, x, c, shifted, ErrKind::mae), 0.1, 1e-12);
    EXPECT_THROW(loss_regression(p, x, c, 1.5, ErrKind::mse), std::exception);
}

TEST(Losses, RankHandConstructed) {
    // d = 2, identity projection, zero bias: out = normalize(tanh(embedding)).
    std::vector<std::string> words{Vocabulary::kUnkToken, "x", "c1", "c2"};
    EncoderParams p{Vocabulary::from_tokens(words), Weights::zeros(4, 2)};
    p.w.proj.setIdentity();
    auto place = [&](std::size_t row, double cos) {
        const double s = std::sqrt(1.0 - cos * cos);
        p.w.emb(row, 0) = std::atanh(0.5 * cos);
        p.w.emb(row, 1) = std::atanh(0.5 * s);
    };
    place(1, 1.0);
    place(2, 0.1);
    place(3, 0.3);
    const Segment x = seg(0, "x");
    ASSERT_NEAR(similarity(p, x, seg(1, "c1")), 0.1, 1e-12);
    ASSERT_NEAR(similarity(p, x, seg(2, "c2")), 0.3, 1e-12);

    const std::vector<Candidate> cands{{seg(1, "c1"), 0.9}, {seg(2, "c2"), 0.3}};
    EXPECT_NEAR(loss_rank(p, x, cands, 1.0), 0.3 - 0.1 + 0.6, 1e-12);
    EXPECT_NEAR(loss_rank(p, x, cands, 0.0), 0.2, 1e-12);

    const std::vector<Candidate> unsorted{{seg(2, "c2"), 0.3}, {seg(1, "c1"), 0.9}};
    EXPECT_THROW(loss_rank(p, x, unsorted, 1.0), std::exception);
    EXPECT_THROW(loss_rank(p, x, std::span(cands).first(1), 1.0), std::exception);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
    const EncoderParams p = toy_params(2);
    const Segment x = seg(0, "w0 w1 w5"), c = seg(1, "w2 w3 w1 w2"), c2 = seg(2, "w6 zz");
    check_gradient(p, [&](const EncoderParams& q, Weights* g) {
        return loss_regression(q, x, c, 0.4, ErrKind::mse, g);
    });
    check_gradient(p, [&](const EncoderParams& q, Weights* g) {
        return loss_regression(q, x, c, 0.4, ErrKind::mae, g);
    });
    const std::vector<Candidate> cands{{c, 0.8}, {c2, 0.5}, {seg(3, "w7 w7"), 0.1}};
    check_gradient(p, [&](const EncoderParams& q, Weights* g) { return loss_rank(q, x, cands, 2.0, g); });
    const std::vector<SegmentPair> batch{{x, c}, {c2, seg(4, "w4")}, {seg(5, "w3 w0"), seg(6, "w1 w1 w6")}};
    check_gradient(p, [&](const EncoderParams& q, Weights* g) { return loss_contrastive(q, batch, g, 3.0); });
    check_gradient(p, [&](const EncoderParams& q, Weights* g) { return loss_bow(q, x, c, true, g); });
    check_gradient(p, [&](const EncoderParams& q, Weights* g) { return loss_bow(q, x, c, false, g); });
}

TEST(Losses, BowSetSemanticsCountsTypesOnce) {
    const EncoderParams p = toy_params(3);
    const Segment x = seg(0, "w0 w1"), y = seg(1, "w2 w2 w2");
    EXPECT_DOUBLE_EQ(loss_bow(p, x, y, true), loss_bow(p, x, seg(1, "w2"), true));
    EXPECT_GT(loss_bow(p, x, y, false), loss_bow(p, x, y, true));
}

TEST(TrainConfig, ParseAndFormat) {
    const TrainConfig c = parse_train_config("# comment\nobjective = ft-MSE\nlr = 0.5\nmomentum=0.9\nepochs = 3\n");
    EXPECT_EQ(c.objective, Objective::ft_mse);
    EXPECT_DOUBLE_EQ(c.lr, 0.5);
    EXPECT_DOUBLE_EQ(c.momentum, 0.9);
    EXPECT_EQ(c.epochs, 3u);
    EXPECT_EQ(parse_train_config(format_train_config(c)), c);
    EXPECT_THROW(parse_train_config("learning_rate = 1\n"), std::exception);
    EXPECT_THROW(parse_train_config("lr = fast\n"), std::exception);
    EXPECT_THROW(parse_train_config("objective = magic\n"), std::exception);
}

TEST(Checkpoint, RoundTripAndCorruption) {
    const EncoderParams p = toy_params(4);
    const fs::path path = fs::temp_directory_path() / "tmret_encoder_ckpt.bin";
    save_checkpoint(p, path, "lr = 0.5\n");
    std::string echo;
    EXPECT_EQ(load_checkpoint(path, &echo), p);
    EXPECT_EQ(echo, "lr = 0.5\n");
    fs::resize_file(path, fs::file_size(path) - 8);
    EXPECT_THROW(load_checkpoint(path), std::exception);
    std::ofstream(path, std::ios::binary) << "garbage";
    EXPECT_THROW(load_checkpoint(path), std::exception);
    fs::remove(path);
}

TEST(Training, DeterministicAndImprovesContrastiveLoss) {
    const synth::BilingualGenerator gen({}, 5);
    const ParallelCorpus train_corpus = gen.corpus(256, 1), valid_corpus = gen.corpus(64, 2);
    std::vector<TrainingExample> train_set;
    for (const auto& pr : train_corpus.pairs) train_set.push_back({pr.source, pr.target, {}});
    const auto valid = in_batch_examples(valid_corpus, 16);
    std::vector<Segment> segs = train_corpus.sources();
    for (const auto& t : train_corpus.targets()) segs.push_back(t);
    const EncoderParams init = EncoderParams::init(Vocabulary::from_segments(segs), 16, 9);

    TrainConfig cfg;
    cfg.lr = 0.5;
    cfg.momentum = 0.9;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.dim = 16;
    cfg.seed = 11;
    const TrainResult a = train(init, train_set, valid, cfg), b = train(init, train_set, valid, cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.history.step_loss, b.history.step_loss);
    ASSERT_EQ(a.history.epoch_ndcg.size(), 3u);
    EXPECT_GE(a.history.best_ndcg, a.history.initial_ndcg);
    EXPECT_DOUBLE_EQ(validation_ndcg(a.params, valid), a.history.best_ndcg);
    EXPECT_TRUE(a.params.w.all_finite());

    cfg.seed = 12;
    EXPECT_FALSE(train(init, train_set, valid, cfg).params == a.params);
}

TEST(Training, InBatchExamples) {
    const synth::BilingualGenerator gen({}, 5);
    const ParallelCorpus c = gen.corpus(10, 3);
    const auto ex = in_batch_examples(c, 4);
    ASSERT_EQ(ex.size(), 10u);
    EXPECT_EQ(ex[0].candidates.size(), 4u);
    EXPECT_EQ(ex[9].candidates.size(), 2u);
    for (const auto& e : ex) {
        EXPECT_DOUBLE_EQ(e.candidates.front().lev, 1.0);
        for (std::size_t i = 1; i < e.candidates.size(); ++i) {
            EXPECT_GE(e.candidates[i - 1].lev, e.candidates[i].lev);
            EXPECT_DOUBLE_EQ(e.candidates[i].lev, levenshtein_similarity(e.y.tokens, e.candidates[i].segment.tokens));
        }
    }
}
