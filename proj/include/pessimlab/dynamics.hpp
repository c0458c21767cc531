#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pessimlab/core.hpp"

namespace pessimlab {

struct ModelConfig {
    int n_total = 7;
    int n_elite = 5;
    std::vector<int> hidden_sizes = {64, 64};
    double learning_rate = 1e-3;
    std::vector<double> weight_decay;  // per linear layer; empty = uniform 1e-4
    int epochs = 40;
    int batch_size = 64;
    double logvar_min = -10.0;
    double logvar_max = 4.0;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    std::vector<double> resolved_weight_decay() const;  // one entry per linear layer
};

// Fully-connected net with swish hidden activations; parameters live in one
// flat vector (W0, b0, W1, b1, ...) so the optimizer, the finite-difference
// oracle, and the checkpoint writer all see the same layout.
struct Mlp {
    std::vector<int> layer_sizes;  // [d_in, hidden..., d_raw_out]
    Vec params;

    static Mlp create(const std::vector<int>& sizes, Rng& init_rng);
    std::size_t param_count() const;
    Vec forward(const Vec& input) const;
};

struct TrainMeta {
    Vec validation_mse;  // per member
    int epochs_run = 0;
};

struct EnsembleModel {
    ModelConfig config;
    std::size_t d_s = 0;
    std::size_t d_a = 0;
    NormStats norm;  // copied from the training dataset
    std::vector<Mlp> members;
    std::vector<bool> elite_mask;
    TrainMeta train_meta;
    // Provenance of the training data.
    std::string train_env_id;
    std::string train_tier;
    std::uint64_t train_seed = 0;

    std::size_t output_dim() const { return d_s + 1; }
    std::vector<std::size_t> elite_indices() const;
};

// Whitened inputs paired with (next_state - state, reward) targets.
struct NllBatch {
    std::vector<Vec> inputs;
    std::vector<Vec> targets;
};

// Mean over the batch of the per-dimension Gaussian negative log density
// summed over output dims, plus the per-layer weight-decay term.
double nll_loss(const Mlp& member, const NllBatch& batch, const ModelConfig& cfg);

// Exact gradient of nll_loss with respect to member.params.
Vec nll_gradient(const Mlp& member, const NllBatch& batch, const ModelConfig& cfg);

EnsembleModel train_ensemble(const Dataset& ds, const ModelConfig& cfg, int workers = 0);

EnsemblePrediction predict(const EnsembleModel& model, const Vec& state, const Vec& action);

DiagonalGaussian predict_member(const EnsembleModel& model, std::size_t member, const Vec& state,
                                const Vec& action);

struct SampleResult {
    Vec next_state;
    double reward = 0.0;
    std::size_t member_index = 0;
};

// Uniform elite choice, then a draw from that member's diagonal Gaussian.
SampleResult sample_next(const EnsembleModel& model, const Vec& state, const Vec& action, Rng& rng);

// Checkpoint: one-line JSON header followed by a flat little-endian float64
// parameter block; round-trips bit-exactly.
void save_model(const EnsembleModel& model, const std::string& path);
EnsembleModel load_model(const std::string& path);

}  // namespace pessimlab
