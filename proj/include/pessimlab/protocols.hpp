#pragma once

#include <map>
#include <string>

#include "pessimlab/envlab.hpp"
#include "pessimlab/pmdp.hpp"
#include "pessimlab/stats.hpp"

namespace pessimlab {

struct PenaltyCalibration {
    Vec penalties;  // aligned with CalibrationReport::errors
    bool has_correlations = false;
    double spearman = 0.0;
    double pearson = 0.0;
    double skew = 0.0;
    double kurtosis = 0.0;
    bool has_shape = false;
};

struct CalibrationReport {
    std::string env_id;
    std::string train_tier;
    std::string eval_tier;
    int n_models = 0;
    std::uint64_t seed = 0;
    std::string error_kind;  // "state_mse" or "mixture_nll"
    Vec errors;              // per transition
    std::map<PenaltyKind, PenaltyCalibration> per_kind;
    bool degenerate = false;  // zero-variance errors; correlations undefined
};

enum class TrueErrorMode { EliteMixtureMean, SampledMember };

// Transfer protocol: penalties vs squared next-state error of the elite
// mixture mean, per transition of an evaluation dataset (typically gathered
// by a different behavior policy than the training set).
CalibrationReport transfer_calibration(const EnsembleModel& model, const Dataset& eval_ds,
                                       const std::vector<PenaltyKind>& kinds, std::uint64_t seed,
                                       TrueErrorMode mode = TrueErrorMode::EliteMixtureMean);

// Same pairing with the error replaced by the negative log density of the
// true (s', r) under the equal-weight ensemble mixture.
CalibrationReport log_likelihood_calibration(const EnsembleModel& model, const Dataset& eval_ds,
                                             const std::vector<PenaltyKind>& kinds, std::uint64_t seed);

// True Model-Based replay: per step, squared distance between the model next
// state and the oracle step from the same (s, a), plus the 2-norm distance to
// the nearest (s, a) in the offline data. Mutates the records in place.
void replay_rollouts(std::vector<RolloutRecord>& records, const OracleEnv& env, const Dataset& ds);

struct OODCell {
    double auc = 0.0;
    double ap = 0.0;
    std::vector<PrPoint> pr;
};

struct OODReport {
    std::vector<int> percentiles;
    std::vector<std::string> error_types;  // "dynamics", "distribution"
    // cells[error_type][percentile][kind]
    std::map<std::string, std::map<int, std::map<PenaltyKind, OODCell>>> cells;
    std::map<std::string, std::map<int, double>> oracle_auc;  // true error scored against itself
    std::map<std::string, std::map<int, std::size_t>> positives;
    std::size_t n_steps = 0;
};

// Pooled spike detection: label = error above the pooled percentile, score =
// min-max normalized penalty over the pooled steps.
OODReport ood_event_report(const std::vector<RolloutRecord>& records, const std::vector<int>& percentiles,
                           const std::vector<PenaltyKind>& kinds);

struct ErrorCurves {
    Vec median_true_mse;    // per timestep
    Vec median_dist_error;  // per timestep
    // z-scored penalty traces per record; empty trace = constant penalty
    std::vector<std::map<PenaltyKind, Vec>> zscore_traces;
};

ErrorCurves error_curves(const std::vector<RolloutRecord>& records);

}  // namespace pessimlab
