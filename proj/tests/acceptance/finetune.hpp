#pragma once

// Synthetic fine-tuning experiment shared by the acceptance suite and the
// tuning driver.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmret/encoder.hpp"

namespace tmret::acceptance {

struct FinetuneSetup {
    std::size_t n_train = 5000;
    std::size_t n_valid = 500;
    std::size_t n_pool = 2000;
    std::uint64_t generator_seed = 1;
    std::uint64_t corpus_seed = 11;
    TrainConfig baseline;
    TrainConfig finetune;
    /// Also train dense+bow, ft-MAE and ft-Rank (for the pool-growth check).
    bool all_kinds = false;
    double target_rate = 0.5;
};

FinetuneSetup default_setup();

/// Applies one `key=value` override (base.lr, ft.epochs, corpus_seed, ...);
/// returns false for an unknown key.
bool apply_override(FinetuneSetup& setup, const std::string& assignment);

struct RetrieverScore {
    double lev_at_1 = 0.0;
    double retrieval_rate = 0.0;
    double ndcg = 0.0;
};

struct FinetuneOutcome {
    RetrieverScore baseline;
    RetrieverScore finetuned;
    double mapping_error = 0.0;  ///< mean |f(sim) - Lev| on held-out candidates
    std::vector<double> ft_epoch_ndcg;
    double ft_initial_ndcg = 0.0;
    std::size_t ft_best_epoch = 0;
    double seconds = 0.0;

    EncoderParams baseline_params;
    EncoderParams finetuned_params;
    /// Every trained encoder by retriever name (dense, ft-MSE, and with
    /// all_kinds also dense+bow, ft-MAE, ft-Rank).
    std::vector<std::pair<std::string, EncoderParams>> models;
    std::vector<TrainingExample> valid;  ///< held-out pairs with pool candidates
};

FinetuneOutcome run_finetune(const FinetuneSetup& setup, bool verbose);

}  // namespace tmret::acceptance
