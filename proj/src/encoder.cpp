#include "tmret/encoder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "tmret/error.hpp"
#include "tmret/eval.hpp"

namespace tmret {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() { add(kUnkToken); }

void Vocabulary::add(const std::string& token) {
    if (index_.try_emplace(token, tokens_.size()).second) tokens_.push_back(token);
}

Vocabulary Vocabulary::from_segments(std::span<const Segment> segments) {
    Vocabulary v;
    for (const Segment& s : segments)
        for (const Token& t : s.tokens) v.add(t);
    return v;
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
    if (tokens.empty() || tokens.front() != kUnkToken) throw Error("vocabulary must start with " + std::string(kUnkToken));
    Vocabulary v;
    for (const auto& t : tokens.subspan(1)) {
        if (v.index_.contains(t)) throw Error("duplicate vocabulary entry: " + t);
        v.add(t);
    }
    return v;
}

std::size_t Vocabulary::index(const Token& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::indices(std::span<const Token> tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const Token& t : tokens) out.push_back(index(t));
    return out;
}

// ---------------------------------------------------------------------------
// Weights

Weights Weights::zeros(std::size_t vocab, std::size_t dim) {
    const auto v = static_cast<Eigen::Index>(vocab);
    const auto d = static_cast<Eigen::Index>(dim);
    Weights w;
    w.emb = Eigen::MatrixXd::Zero(v, d);
    w.proj = Eigen::MatrixXd::Zero(d, d);
    w.proj_bias = Eigen::VectorXd::Zero(d);
    w.a = 0.0;
    w.b = 0.0;
    w.bow_src = Eigen::MatrixXd::Zero(d, v);
    w.bow_src_bias = Eigen::VectorXd::Zero(v);
    w.bow_tgt = Eigen::MatrixXd::Zero(d, v);
    w.bow_tgt_bias = Eigen::VectorXd::Zero(v);
    return w;
}

void Weights::set_zero() {
    emb.setZero();
    proj.setZero();
    proj_bias.setZero();
    a = b = 0.0;
    bow_src.setZero();
    bow_src_bias.setZero();
    bow_tgt.setZero();
    bow_tgt_bias.setZero();
}

void Weights::add_scaled(const Weights& o, double scale) {
    emb += scale * o.emb;
    proj += scale * o.proj;
    proj_bias += scale * o.proj_bias;
    a += scale * o.a;
    b += scale * o.b;
    bow_src += scale * o.bow_src;
    bow_src_bias += scale * o.bow_src_bias;
    bow_tgt += scale * o.bow_tgt;
    bow_tgt_bias += scale * o.bow_tgt_bias;
}

void Weights::scale(double factor) {
    emb *= factor;
    proj *= factor;
    proj_bias *= factor;
    a *= factor;
    b *= factor;
    bow_src *= factor;
    bow_src_bias *= factor;
    bow_tgt *= factor;
    bow_tgt_bias *= factor;
}

std::size_t Weights::parameter_count() const {
    return static_cast<std::size_t>(emb.size() + proj.size() + proj_bias.size() + 2 + bow_src.size() +
                                    bow_src_bias.size() + bow_tgt.size() + bow_tgt_bias.size());
}

bool Weights::all_finite() const {
    return emb.allFinite() && proj.allFinite() && proj_bias.allFinite() && std::isfinite(a) && std::isfinite(b) &&
           bow_src.allFinite() && bow_src_bias.allFinite() && bow_tgt.allFinite() && bow_tgt_bias.allFinite();
}

void Weights::for_each(const std::function<void(double&)>& fn) {
    auto each = [&](auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) fn(m.data()[i]);
    };
    each(emb);
    each(proj);
    each(proj_bias);
    fn(a);
    fn(b);
    each(bow_src);
    each(bow_src_bias);
    each(bow_tgt);
    each(bow_tgt_bias);
}

bool Weights::operator==(const Weights& o) const {
    return emb == o.emb && proj == o.proj && proj_bias == o.proj_bias && a == o.a && b == o.b &&
           bow_src == o.bow_src && bow_src_bias == o.bow_src_bias && bow_tgt == o.bow_tgt &&
           bow_tgt_bias == o.bow_tgt_bias;
}

EncoderParams EncoderParams::init(Vocabulary vocab, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw Error("encoder dimension must be >= 1");
    EncoderParams p;
    p.vocab = std::move(vocab);
    p.w = Weights::zeros(p.vocab.size(), dim);

    std::mt19937_64 rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    auto fill = [&](auto& m, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    };
    fill(p.w.emb, 1.0);
    fill(p.w.proj, scale);
    fill(p.w.bow_src, 0.01);
    fill(p.w.bow_tgt, 0.01);
    p.w.a = 1.0;
    p.w.b = 0.0;
    return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

EncodeCache encode_forward(const EncoderParams& params, std::span<const Token> tokens) {
    EncodeCache c;
    c.rows = params.vocab.indices(tokens);
    if (c.rows.empty()) c.rows.push_back(Vocabulary::kUnk);

    const auto d = static_cast<Eigen::Index>(params.dim());
    c.mean = Eigen::VectorXd::Zero(d);
    for (const std::size_t r : c.rows) c.mean += params.w.emb.row(static_cast<Eigen::Index>(r)).transpose();
    c.mean /= static_cast<double>(c.rows.size());

    c.hidden = (params.w.proj * c.mean + params.w.proj_bias).array().tanh().matrix();
    c.norm = c.hidden.norm();
    if (c.norm > 0.0) {
        c.out = c.hidden / c.norm;
    } else {
        // Degenerate all-zero activation; pick a fixed unit vector.
        c.out = Eigen::VectorXd::Zero(d);
        c.out(0) = 1.0;
    }
    return c;
}

void encode_backward(const EncoderParams& params, const EncodeCache& c, const Eigen::VectorXd& d_out,
                     Weights& grad) {
    if (!(c.norm > 0.0)) return;
    const Eigen::VectorXd d_hidden = (d_out - c.out * c.out.dot(d_out)) / c.norm;
    const Eigen::VectorXd d_z = d_hidden.array() * (1.0 - c.hidden.array().square());
    grad.proj.noalias() += d_z * c.mean.transpose();
    grad.proj_bias += d_z;
    const Eigen::VectorXd d_mean = params.w.proj.transpose() * d_z / static_cast<double>(c.rows.size());
    for (const std::size_t r : c.rows) grad.emb.row(static_cast<Eigen::Index>(r)) += d_mean.transpose();
}

Eigen::VectorXd encode(const EncoderParams& params, const Segment& seg) {
    return encode_forward(params, seg.tokens).out;
}

double cosine(const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs) {
    const double denom = lhs.norm() * rhs.norm();
    return denom > 0.0 ? lhs.dot(rhs) / denom : 0.0;
}

double similarity(const EncoderParams& params, const Segment& x, const Segment& y) {
    return encode(params, x).dot(encode(params, y));
}

// ---------------------------------------------------------------------------
// Mapping

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

MappingValue mapping_f_with_grad(double a, double b, double t) {
    const double lo = -1.0 + kAtanhClamp;
    const double hi = 1.0 - kAtanhClamp;
    const double tc = std::clamp(t, lo, hi);
    const double at = std::atanh(tc);
    MappingValue v;
    v.f = sigmoid(a * at + b);
    const double s = v.f * (1.0 - v.f);
    v.df_dt = (t > lo && t < hi) ? s * a / (1.0 - tc * tc) : 0.0;
    v.df_da = s * at;
    v.df_db = s;
    return v;
}

double mapping_f(double a, double b, double t) { return mapping_f_with_grad(a, b, t).f; }

// ---------------------------------------------------------------------------
// Losses

double loss_regression(const EncoderParams& params, const Segment& x, const Segment& candidate, double lev_target,
                       ErrKind kind, Weights* grad) {
    if (!(lev_target >= 0.0 && lev_target <= 1.0)) throw Error("loss_regression: target must lie in [0, 1]");
    const EncodeCache cx = encode_forward(params, x.tokens);
    const EncodeCache cy = encode_forward(params, candidate.tokens);
    const double sim = cx.out.dot(cy.out);
    const MappingValue m = mapping_f_with_grad(params.w.a, params.w.b, sim);
    const double diff = m.f - lev_target;

    double loss = 0.0;
    double d_f = 0.0;
    if (kind == ErrKind::mse) {
        loss = diff * diff;
        d_f = 2.0 * diff;
    } else {
        loss = std::abs(diff);
        d_f = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    }
    if (grad && d_f != 0.0) {
        grad->a += d_f * m.df_da;
        grad->b += d_f * m.df_db;
        const double d_sim = d_f * m.df_dt;
        if (d_sim != 0.0) {
            encode_backward(params, cx, d_sim * cy.out, *grad);
            encode_backward(params, cy, d_sim * cx.out, *grad);
        }
    }
    return loss;
}

double loss_rank(const EncoderParams& params, const Segment& x, std::span<const Candidate> candidates, double margin,
                 Weights* grad) {
    if (candidates.size() < 2) throw Error("loss_rank: needs at least 2 candidates");
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].lev > candidates[i - 1].lev)
            throw Error("loss_rank: candidates must be sorted by Lev descending");

    const EncodeCache cx = encode_forward(params, x.tokens);
    std::vector<EncodeCache> cc;
    cc.reserve(candidates.size());
    std::vector<double> sims;
    for (const Candidate& c : candidates) {
        cc.push_back(encode_forward(params, c.segment.tokens));
        sims.push_back(cx.out.dot(cc.back().out));
    }

    double loss = 0.0;
    std::vector<double> d_sim(candidates.size(), 0.0);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double u = sims[i] - sims[j] + margin * std::abs(candidates[i].lev - candidates[j].lev);
            if (u > 0.0) {
                loss += u;
                d_sim[i] += 1.0;
                d_sim[j] -= 1.0;
            }
        }
    }
    if (grad) {
        Eigen::VectorXd d_x = Eigen::VectorXd::Zero(cx.out.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (d_sim[i] == 0.0) continue;
            d_x += d_sim[i] * cc[i].out;
            encode_backward(params, cc[i], d_sim[i] * cx.out, *grad);
        }
        encode_backward(params, cx, d_x, *grad);
    }
    return loss;
}

double loss_contrastive(const EncoderParams& params, std::span<const SegmentPair> batch, Weights* grad, double scale) {
    const std::size_t n = batch.size();
    if (n < 2) throw Error("loss_contrastive: batch needs at least 2 pairs");
    const auto d = static_cast<Eigen::Index>(params.dim());
    const auto nn = static_cast<Eigen::Index>(n);

    std::vector<EncodeCache> cx, cy;
    cx.reserve(n);
    cy.reserve(n);
    Eigen::MatrixXd X(nn, d), Y(nn, d);
    for (std::size_t i = 0; i < n; ++i) {
        cx.push_back(encode_forward(params, batch[i].source.tokens));
        cy.push_back(encode_forward(params, batch[i].target.tokens));
        X.row(static_cast<Eigen::Index>(i)) = cx.back().out.transpose();
        Y.row(static_cast<Eigen::Index>(i)) = cy.back().out.transpose();
    }
    const Eigen::MatrixXd S = scale * (X * Y.transpose());

    double loss = 0.0;
    Eigen::MatrixXd dS(nn, nn);
    for (Eigen::Index i = 0; i < nn; ++i) {
        const double mx = S.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (S.row(i).array() - mx).exp().matrix();
        const double z = e.sum();
        loss += -S(i, i) + mx + std::log(z);
        dS.row(i) = e / z;
        dS(i, i) -= 1.0;
    }
    if (grad) {
        const Eigen::MatrixXd dX = scale * dS * Y;
        const Eigen::MatrixXd dY = scale * dS.transpose() * X;
        for (std::size_t i = 0; i < n; ++i) {
            encode_backward(params, cx[i], dX.row(static_cast<Eigen::Index>(i)).transpose(), *grad);
            encode_backward(params, cy[i], dY.row(static_cast<Eigen::Index>(i)).transpose(), *grad);
        }
    }
    return loss;
}

namespace {

/// Bag counts over vocabulary rows.
std::vector<std::pair<std::size_t, double>> bag_of_words(const EncodeCache& c, std::span<const Token> tokens,
                                                         bool set_semantics) {
    std::vector<std::size_t> rows = c.rows;
    if (tokens.empty()) rows.clear();
    std::sort(rows.begin(), rows.end());
    std::vector<std::pair<std::size_t, double>> bag;
    for (const std::size_t r : rows) {
        if (!bag.empty() && bag.back().first == r) {
            if (!set_semantics) bag.back().second += 1.0;
        } else {
            bag.emplace_back(r, 1.0);
        }
    }
    return bag;
}

/// -sum_w count_w log softmax(W^T e + bias)_w, gradient into head/bias/d_e.
double bow_term(const Eigen::MatrixXd& head, const Eigen::VectorXd& bias, const Eigen::VectorXd& e,
                const std::vector<std::pair<std::size_t, double>>& bag, Eigen::MatrixXd* d_head,
                Eigen::VectorXd* d_bias, Eigen::VectorXd* d_e) {
    if (bag.empty()) return 0.0;
    const Eigen::VectorXd logits = head.transpose() * e + bias;
    const double mx = logits.maxCoeff();
    const Eigen::VectorXd ex = (logits.array() - mx).exp().matrix();
    const double lse = mx + std::log(ex.sum());

    double total = 0.0;
    double loss = 0.0;
    for (const auto& [row, count] : bag) {
        loss -= count * (logits(static_cast<Eigen::Index>(row)) - lse);
        total += count;
    }
    if (d_head) {
        Eigen::VectorXd d_logits = total * ex / ex.sum();
        for (const auto& [row, count] : bag) d_logits(static_cast<Eigen::Index>(row)) -= count;
        d_head->noalias() += e * d_logits.transpose();
        *d_bias += d_logits;
        *d_e += head * d_logits;
    }
    return loss;
}

}  // namespace

double loss_bow(const EncoderParams& params, const Segment& x, const Segment& y, bool set_semantics, Weights* grad) {
    const EncodeCache cx = encode_forward(params, x.tokens);
    const EncodeCache cy = encode_forward(params, y.tokens);
    const auto bag_x = bag_of_words(cx, x.tokens, set_semantics);
    const auto bag_y = bag_of_words(cy, y.tokens, set_semantics);

    Eigen::VectorXd d_ex = Eigen::VectorXd::Zero(cx.out.size());
    Eigen::VectorXd d_ey = Eigen::VectorXd::Zero(cy.out.size());
    double loss = bow_term(params.w.bow_src, params.w.bow_src_bias, cx.out, bag_y, grad ? &grad->bow_src : nullptr,
                           grad ? &grad->bow_src_bias : nullptr, &d_ex);
    loss += bow_term(params.w.bow_tgt, params.w.bow_tgt_bias, cy.out, bag_x, grad ? &grad->bow_tgt : nullptr,
                     grad ? &grad->bow_tgt_bias : nullptr, &d_ey);
    if (grad) {
        encode_backward(params, cx, d_ex, *grad);
        encode_backward(params, cy, d_ey, *grad);
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Training

std::string to_string(Objective objective) {
    switch (objective) {
        case Objective::contrastive: return "contrastive";
        case Objective::contrastive_bow: return "contrastive+bow";
        case Objective::ft_mse: return "ft-MSE";
        case Objective::ft_mae: return "ft-MAE";
        case Objective::ft_rank: return "ft-Rank";
    }
    return "?";
}

Objective parse_objective(const std::string& name) {
    for (auto o : {Objective::contrastive, Objective::contrastive_bow, Objective::ft_mse, Objective::ft_mae,
                   Objective::ft_rank})
        if (name == to_string(o)) return o;
    if (name == "dense") return Objective::contrastive;
    if (name == "dense+bow") return Objective::contrastive_bow;
    throw Error("unknown objective: " + name +
                " (expected contrastive, contrastive+bow, ft-MSE, ft-MAE or ft-Rank)");
}

namespace {

bool is_finetune(Objective o) { return o == Objective::ft_mse || o == Objective::ft_mae || o == Objective::ft_rank; }

bool usable(const TrainingExample& ex, Objective o) {
    if (o == Objective::ft_rank) return ex.candidates.size() >= 2;
    if (is_finetune(o)) return !ex.candidates.empty();
    return true;
}

void sgd_step(Weights& w, Weights& velocity, const Weights& grad, const TrainConfig& cfg) {
    velocity.scale(cfg.momentum);
    velocity.add_scaled(grad, 1.0);
    const double a = w.a;
    const double b = w.b;
    w.add_scaled(velocity, -cfg.lr);
    w.a = a - cfg.lr_ab * velocity.a;
    w.b = b - cfg.lr_ab * velocity.b;
}

}  // namespace

double validation_ndcg(const EncoderParams& params, std::span<const TrainingExample> examples) {
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<std::size_t> order;
    std::vector<double> sims, gains;
    for (const TrainingExample& ex : examples) {
        if (ex.candidates.empty()) continue;
        const Eigen::VectorXd ex_x = encode(params, ex.x);
        sims.clear();
        for (const Candidate& c : ex.candidates) sims.push_back(ex_x.dot(encode(params, c.segment)));
        order.resize(sims.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return sims[l] > sims[r]; });
        gains.clear();
        for (const std::size_t i : order) gains.push_back(ex.candidates[i].lev);
        sum += ndcg(gains);
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 1.0;
}

TrainResult train(const EncoderParams& init, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw Error("train: batch_size must be >= 1");
    const Objective obj = cfg.objective;
    std::vector<std::size_t> usable_idx;
    for (std::size_t i = 0; i < train_set.size(); ++i)
        if (usable(train_set[i], obj)) usable_idx.push_back(i);
    if (usable_idx.empty()) {
        if (is_finetune(obj))
            throw Error("train: objective " + to_string(obj) + " requires mined candidates (" +
                        (obj == Objective::ft_rank ? "at least 2" : "at least 1") + " per example)");
        throw Error("train: empty training set");
    }
    if (!is_finetune(obj) && usable_idx.size() < 2) throw Error("train: contrastive objectives need at least 2 pairs");

    TrainResult result{init, init, {}};
    EncoderParams& params = result.last;
    Weights grad = params.w.zeros_like();
    Weights velocity = params.w.zeros_like();
    std::mt19937_64 rng(cfg.seed);

    const bool validate = !valid_set.empty();
    TrainHistory& h = result.history;
    h.initial_ndcg = validate ? validation_ndcg(params, valid_set) : 0.0;
    h.best_ndcg = h.initial_ndcg;
    h.best_epoch = 0;

    std::vector<SegmentPair> pairs;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(usable_idx.begin(), usable_idx.end(), rng);
        for (std::size_t start = 0; start < usable_idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(usable_idx.size(), start + cfg.batch_size);
            const std::size_t n = end - start;
            if (!is_finetune(obj) && n < 2) continue;

            grad.set_zero();
            double loss = 0.0;
            if (is_finetune(obj)) {
                for (std::size_t k = start; k < end; ++k) {
                    const TrainingExample& ex = train_set[usable_idx[k]];
                    if (obj == Objective::ft_rank) {
                        loss += loss_rank(params, ex.x, ex.candidates, cfg.margin, &grad);
                    } else {
                        const ErrKind kind = obj == Objective::ft_mse ? ErrKind::mse : ErrKind::mae;
                        for (const Candidate& c : ex.candidates)
                            loss += loss_regression(params, ex.x, c.segment, c.lev, kind, &grad);
                    }
                }
            } else {
                pairs.clear();
                for (std::size_t k = start; k < end; ++k)
                    pairs.push_back(SegmentPair{train_set[usable_idx[k]].x, train_set[usable_idx[k]].y});
                loss += loss_contrastive(params, pairs, &grad, cfg.contrastive_scale);
                if (obj == Objective::contrastive_bow)
                    for (const auto& p : pairs) loss += loss_bow(params, p.source, p.target, cfg.bow_set_semantics, &grad);
            }
            const double inv = 1.0 / static_cast<double>(n);
            grad.scale(inv);
            h.step_loss.push_back(loss * inv);
            sgd_step(params.w, velocity, grad, cfg);
        }
        if (!params.w.all_finite()) throw Error("train: parameters diverged at epoch " + std::to_string(epoch));

        if (validate) {
            const double score = validation_ndcg(params, valid_set);
            h.epoch_ndcg.push_back(score);
            if (score > h.best_ndcg) {
                h.best_ndcg = score;
                h.best_epoch = epoch;
                result.params = params;
            }
        }
    }
    if (!validate) {
        h.best_epoch = cfg.epochs;
        result.params = params;
    }
    return result;
}

std::vector<TrainingExample> in_batch_examples(const ParallelCorpus& corpus, std::size_t batch_size) {
    if (batch_size < 2) throw Error("in_batch_examples: batch_size must be >= 2");
    std::vector<TrainingExample> out;
    out.reserve(corpus.size());
    for (std::size_t start = 0; start < corpus.size(); start += batch_size) {
        const std::size_t end = std::min(corpus.size(), start + batch_size);
        for (std::size_t i = start; i < end; ++i) {
            TrainingExample ex{corpus.pairs[i].source, corpus.pairs[i].target, {}};
            for (std::size_t j = start; j < end; ++j) {
                const Segment& t = corpus.pairs[j].target;
                ex.candidates.push_back(Candidate{t, levenshtein_similarity(ex.y.tokens, t.tokens)});
            }
            std::stable_sort(ex.candidates.begin(), ex.candidates.end(),
                             [](const Candidate& l, const Candidate& r) { return l.lev > r.lev; });
            out.push_back(std::move(ex));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config and checkpoint files

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error("train config: " + key + " expects a number, got \"" + v + "\"");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        const auto u = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw Error("train config: " + key + " expects a non-negative integer, got \"" + v + "\"");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("train config: " + key + " expects true/false, got \"" + v + "\"");
}

constexpr std::string_view kCheckpointMagic = "TMRENC\0\0";
constexpr std::uint32_t kCheckpointVersion = 1;

void write_matrix(detail::BinaryWriter& w, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) w.fixed<double>(m(r, c));
}

void read_matrix(detail::BinaryReader& r, Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.fixed<double>();
}

void write_vector(detail::BinaryWriter& w, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) w.fixed<double>(v(i));
}

void read_vector(detail::BinaryReader& r, Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.fixed<double>();
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("train config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "objective") cfg.objective = parse_objective(val);
        else if (key == "lr") cfg.lr = to_double(key, val);
        else if (key == "lr_ab") cfg.lr_ab = to_double(key, val);
        else if (key == "momentum") cfg.momentum = to_double(key, val);
        else if (key == "epochs") cfg.epochs = to_uint(key, val);
        else if (key == "batch_size") cfg.batch_size = to_uint(key, val);
        else if (key == "seed") cfg.seed = to_uint(key, val);
        else if (key == "d") cfg.dim = to_uint(key, val);
        else if (key == "m") cfg.margin = to_double(key, val);
        else if (key == "bow_set_semantics") cfg.bow_set_semantics = to_bool(key, val);
        else if (key == "contrastive_scale") cfg.contrastive_scale = to_double(key, val);
        else throw Error("train config line " + std::to_string(lineno) + ": unknown key \"" + key + "\"");
    }
    return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open train config: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str());
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string format_train_config(const TrainConfig& c) {
    std::ostringstream out;
    out << "objective = " << to_string(c.objective) << '\n'
        << "lr = " << shortest(c.lr) << '\n'
        << "lr_ab = " << shortest(c.lr_ab) << '\n'
        << "momentum = " << shortest(c.momentum) << '\n'
        << "epochs = " << c.epochs << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "seed = " << c.seed << '\n'
        << "d = " << c.dim << '\n'
        << "m = " << shortest(c.margin) << '\n'
        << "bow_set_semantics = " << (c.bow_set_semantics ? "true" : "false") << '\n'
        << "contrastive_scale = " << shortest(c.contrastive_scale) << '\n';
    return out.str();
}

void save_checkpoint(const EncoderParams& p, const std::filesystem::path& path, const std::string& config_echo) {
    detail::BinaryWriter w(path);
    w.bytes(kCheckpointMagic);
    w.fixed<std::uint32_t>(kCheckpointVersion);
    w.string(config_echo);
    w.fixed<std::uint64_t>(p.vocab.size());
    for (const auto& t : p.vocab.tokens()) w.string(t);
    w.fixed<std::uint64_t>(p.dim());
    write_matrix(w, p.w.emb);
    write_matrix(w, p.w.proj);
    write_vector(w, p.w.proj_bias);
    w.fixed<double>(p.w.a);
    w.fixed<double>(p.w.b);
    write_matrix(w, p.w.bow_src);
    write_vector(w, p.w.bow_src_bias);
    write_matrix(w, p.w.bow_tgt);
    write_vector(w, p.w.bow_tgt_bias);
    w.finish();
}

EncoderParams load_checkpoint(const std::filesystem::path& path, std::string* config_echo) {
    detail::BinaryReader r(path);
    r.expect_magic(kCheckpointMagic);
    const auto version = r.fixed<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw Error("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
    std::string echo = r.string();
    if (config_echo) *config_echo = std::move(echo);
    const auto v = r.fixed<std::uint64_t>();
    std::vector<std::string> tokens;
    tokens.reserve(v);
    for (std::uint64_t i = 0; i < v; ++i) tokens.push_back(r.string());
    const auto d = r.fixed<std::uint64_t>();
    if (d == 0) throw Error("checkpoint has zero dimension: " + path.string());

    EncoderParams p;
    p.vocab = Vocabulary::from_tokens(tokens);
    p.w = Weights::zeros(v, d);
    read_matrix(r, p.w.emb);
    read_matrix(r, p.w.proj);
    read_vector(r, p.w.proj_bias);
    p.w.a = r.fixed<double>();
    p.w.b = r.fixed<double>();
    read_matrix(r, p.w.bow_src);
    read_vector(r, p.w.bow_src_bias);
    read_matrix(r, p.w.bow_tgt);
    read_vector(r, p.w.bow_tgt_bias);
    if (!r.at_end()) throw Error("trailing bytes in checkpoint: " + path.string());
    return p;
}

}  // namespace tmret
