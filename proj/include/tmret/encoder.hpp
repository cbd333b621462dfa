#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tmret/corpus.hpp"
#include "tmret/text.hpp"

namespace tmret {

/// Token to row mapping for the embedding table. Row 0 is reserved for
/// unknown tokens.
class Vocabulary {
public:
    static constexpr std::size_t kUnk = 0;
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary();
    /// Every distinct token of `segments`, in first-seen order.
    static Vocabulary from_segments(std::span<const Segment> segments);
    static Vocabulary from_tokens(std::span<const std::string> tokens);

    std::size_t index(const Token& token) const;
    std::vector<std::size_t> indices(std::span<const Token> tokens) const;
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    void add(const std::string& token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// All trainable tensors. Also used as the gradient accumulator, which has the
/// same shapes.
struct Weights {
    Eigen::MatrixXd emb;        ///< V x d token embeddings
    Eigen::MatrixXd proj;       ///< d x d sentence projection
    Eigen::VectorXd proj_bias;  ///< d
    double a = 1.0;             ///< mapping slope
    double b = 0.0;             ///< mapping position
    Eigen::MatrixXd bow_src;    ///< d x V, predicts target tokens from a source embedding
    Eigen::VectorXd bow_src_bias;
    Eigen::MatrixXd bow_tgt;    ///< d x V, predicts source tokens from a target embedding
    Eigen::VectorXd bow_tgt_bias;

    static Weights zeros(std::size_t vocab, std::size_t dim);
    Weights zeros_like() const { return zeros(static_cast<std::size_t>(emb.rows()), static_cast<std::size_t>(emb.cols())); }

    void set_zero();
    /// this += scale * other
    void add_scaled(const Weights& other, double scale);
    void scale(double factor);
    std::size_t parameter_count() const;
    bool all_finite() const;
    /// Visits every scalar in a fixed order: emb, proj, proj_bias, a, b,
    /// bow_src, bow_src_bias, bow_tgt, bow_tgt_bias (matrices column-major).
    void for_each(const std::function<void(double&)>& fn);

    bool operator==(const Weights& o) const;
};

struct EncoderParams {
    Vocabulary vocab;
    Weights w;

    /// Gaussian init (std 1 for emb, 1/sqrt(d) for proj, 0.01 for the heads),
    /// a = 1, b = 0.
    static EncoderParams init(Vocabulary vocab, std::size_t dim, std::uint64_t seed);

    std::size_t dim() const { return static_cast<std::size_t>(w.proj.rows()); }
    std::size_t vocab_size() const { return vocab.size(); }

    bool operator==(const EncoderParams& o) const { return vocab == o.vocab && w == o.w; }
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct EncodeCache {
    std::vector<std::size_t> rows;  ///< vocabulary rows, [UNK] for empty input
    Eigen::VectorXd mean;           ///< mean token embedding
    Eigen::VectorXd hidden;         ///< tanh(proj * mean + bias)
    double norm = 0.0;              ///< ||hidden||
    Eigen::VectorXd out;            ///< hidden / norm
};

EncodeCache encode_forward(const EncoderParams& params, std::span<const Token> tokens);

/// Accumulates into `grad` the parameter gradient given dL/d(out).
void encode_backward(const EncoderParams& params, const EncodeCache& cache, const Eigen::VectorXd& d_out,
                     Weights& grad);

/// Mean-pooled token embeddings, affine projection, tanh, L2 normalization.
/// Unknown tokens use the UNK row; an empty segment encodes as [UNK].
Eigen::VectorXd encode(const EncoderParams& params, const Segment& seg);

double cosine(const Eigen::VectorXd& lhs, const Eigen::VectorXd& rhs);

/// Cosine of two encoded segments.
double similarity(const EncoderParams& params, const Segment& x, const Segment& y);

/// atanh is evaluated on t clamped to [-1 + 1e-6, 1 - 1e-6].
inline constexpr double kAtanhClamp = 1e-6;

/// f(t) = sigmoid(a * atanh(t) + b), mapping cosine into (0, 1).
double mapping_f(double a, double b, double t);

struct MappingValue {
    double f = 0.0;
    double df_dt = 0.0;
    double df_da = 0.0;
    double df_db = 0.0;
};

MappingValue mapping_f_with_grad(double a, double b, double t);

enum class ErrKind { mse, mae };

struct Candidate {
    Segment segment;
    double lev = 0.0;  ///< Lev(reference target, segment)

    bool operator==(const Candidate&) const = default;
};

/// A source, its reference translation and retrieved target-side candidates
/// sorted by Lev descending.
struct TrainingExample {
    Segment x;
    Segment y;
    std::vector<Candidate> candidates;

    bool operator==(const TrainingExample&) const = default;
};

/// Loss functions return the loss value and, when `grad` is non-null, add the
/// gradient with respect to every parameter into it.

/// Err(f(sim(x, candidate)), lev_target).
double loss_regression(const EncoderParams& params, const Segment& x, const Segment& candidate, double lev_target,
                       ErrKind kind, Weights* grad = nullptr);

/// Pairwise hinge over candidates sorted by Lev descending:
///   sum_{i > j} max(0, sim(x, c_i) - sim(x, c_j) + margin * |lev_i - lev_j|).
/// Throws on fewer than two candidates or unsorted input.
double loss_rank(const EncoderParams& params, const Segment& x, std::span<const Candidate> candidates,
                 double margin, Weights* grad = nullptr);

/// In-batch softmax: -sum_i log(exp(s_ii) / sum_j exp(s_ij)), s_ij = scale * sim(x_i, y_j).
/// Throws on batches smaller than two.
double loss_contrastive(const EncoderParams& params, std::span<const SegmentPair> batch, Weights* grad = nullptr,
                        double scale = 1.0);

/// -sum_{w in Y} log p_src(w | x) - sum_{w in X} log p_tgt(w | y), each p a
/// softmax over the vocabulary from its own linear head. With
/// `set_semantics` every token type counts once.
double loss_bow(const EncoderParams& params, const Segment& x, const Segment& y, bool set_semantics = true,
                Weights* grad = nullptr);

enum class Objective { contrastive, contrastive_bow, ft_mse, ft_mae, ft_rank };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& name);

struct TrainConfig {
    Objective objective = Objective::contrastive;
    double lr = 1e-4;     ///< all encoder weights
    double lr_ab = 1e-2;  ///< mapping slope and position
    double momentum = 0.0;
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::size_t dim = 64;
    double margin = 1.0;
    bool bow_set_semantics = true;
    /// Multiplier on cosines inside the contrastive softmax.
    double contrastive_scale = 1.0;

    bool operator==(const TrainConfig&) const = default;
};

/// `key = value` lines; '#' starts a comment. Unknown keys are errors.
TrainConfig load_train_config(const std::filesystem::path& path);
TrainConfig parse_train_config(const std::string& text);
std::string format_train_config(const TrainConfig& config);

struct TrainHistory {
    std::vector<double> step_loss;
    std::vector<double> epoch_ndcg;  ///< validation NDCG after each epoch
    double initial_ndcg = 0.0;       ///< before the first step
    std::size_t best_epoch = 0;      ///< 0 = the initial parameters
    double best_ndcg = 0.0;
};

struct TrainResult {
    EncoderParams params;  ///< best-validation-NDCG checkpoint
    EncoderParams last;    ///< parameters after the final epoch
    TrainHistory history;
};

/// Mean NDCG over validation examples: candidates ranked by model cosine
/// (ties keep candidate order), gains = candidate Lev. Examples without
/// candidates are skipped; returns 1 when none remain.
double validation_ndcg(const EncoderParams& params, std::span<const TrainingExample> examples);

/// Mini-batch gradient descent (optional momentum) with separate learning
/// rates for the mapping scalars. Batch gradients are means over the batch.
/// Deterministic given config.seed.
TrainResult train(const EncoderParams& init, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, const TrainConfig& config);

/// Candidates for in-batch validation: each example's candidates are the
/// reference targets of the other examples in its batch of `batch_size`,
/// plus its own reference, with Lev against its own reference.
std::vector<TrainingExample> in_batch_examples(const ParallelCorpus& corpus, std::size_t batch_size);

/// Versioned little-endian checkpoint: magic, version, config echo,
/// vocabulary, shapes, then every tensor as row-major float64.
void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path,
                     const std::string& config_echo = "");
EncoderParams load_checkpoint(const std::filesystem::path& path, std::string* config_echo = nullptr);

}  // namespace tmret
