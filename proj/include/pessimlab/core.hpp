#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pessimlab/common.hpp"

namespace pessimlab {

struct Transition {
    Vec state;
    Vec action;
    double reward = 0.0;
    Vec next_state;
    bool terminal = false;
};

struct DatasetMeta {
    std::string env_id;
    std::string tier;  // random | medium | expert | mixed | medium-expert
    std::uint64_t seed = 0;
    std::size_t size = 0;
    std::vector<std::string> behavior_policies;  // provenance tags, e.g. {"random","medium"}
    double mean_episode_return = 0.0;
    bool has_mean_episode_return = false;
    double reference_random = 0.0;
    double reference_expert = 0.0;
    bool has_references = false;
};

struct NormStats {
    Vec input_mean;  // over concatenated (state, action) columns
    Vec input_std;   // floored at 1e-8
};

// Per-member predictive distribution over (next-state dims, reward).
struct DiagonalGaussian {
    Vec mean;
    Vec var;
};

struct EnsemblePrediction {
    std::vector<DiagonalGaussian> members;
    std::vector<bool> elite_mask;

    std::size_t dim() const { return members.empty() ? 0 : members.front().mean.size(); }
    void validate() const;
};

struct Dataset {
    std::vector<Transition> transitions;
    DatasetMeta meta;
    NormStats norm;

    std::size_t size() const { return transitions.size(); }
    std::size_t state_dim() const { return transitions.empty() ? 0 : transitions.front().state.size(); }
    std::size_t action_dim() const { return transitions.empty() ? 0 : transitions.front().action.size(); }
};

// Empirical mean/std of the concatenated (state, action) columns.
NormStats compute_norm(const std::vector<Transition>& transitions);

// Validates dimensions/finiteness, fills meta.size and norm.
Dataset make_dataset(std::vector<Transition> transitions, DatasetMeta meta);

// Emits <path>.csv and <path>.meta.json; round-trips bit-identically.
void dataset_write(const Dataset& ds, const std::string& path);

// Reads both files, verifies stored norm against a recomputation (1e-8).
Dataset dataset_read(const std::string& path);

// Elementwise ((s,a) - input_mean) / input_std.
Vec normalize_input(const NormStats& norm, const Vec& state, const Vec& action);
Vec normalize_input(const Dataset& ds, const Vec& state, const Vec& action);

// 17-significant-digit decimal text; round-trips any double bit-exactly.
std::string format_g17(double x);

}  // namespace pessimlab
