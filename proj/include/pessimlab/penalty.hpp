#pragma once

#include <string>

#include "pessimlab/core.hpp"

namespace pessimlab {

enum class PenaltyKind { MaxAleatoric, MaxPairwiseDiff, LLVar, LOOKL, EnsembleStd, EnsembleVar };

inline constexpr PenaltyKind kAllPenaltyKinds[] = {
    PenaltyKind::MaxAleatoric, PenaltyKind::MaxPairwiseDiff, PenaltyKind::LLVar,
    PenaltyKind::LOOKL,        PenaltyKind::EnsembleStd,     PenaltyKind::EnsembleVar,
};

std::string penalty_kind_name(PenaltyKind kind);           // lowercase snake_case
PenaltyKind penalty_kind_from_name(const std::string& s);  // inverse, throws on unknown

enum class PenaltyDims { StateAndReward, StateOnly };

struct PenaltyContext {
    PenaltyDims dims_used = PenaltyDims::StateAndReward;
    bool use_all_members = true;   // penalties see all N members even though
                                   // sampling draws from elites only
    bool aleatoric_use_std = false;  // Frobenius norm over std entries instead of variances
    int fixed_member = -1;           // >= 0 pins the LLVar/LOOKL member choice
    Rng* member_selector = nullptr;  // required by LLVar/LOOKL when fixed_member < 0
};

// Equal-weight Gaussian-mixture mean and variance per dimension; the variance
// combines aleatoric (mean member variance) and epistemic (mean-squared
// disagreement) terms.
struct MixtureMoments {
    Vec mean;
    Vec var;
};
MixtureMoments mixture_moments(const EnsemblePrediction& pred);

double compute_penalty(PenaltyKind kind, const EnsemblePrediction& pred, PenaltyContext& ctx);

// Diagonal-Gaussian KL divergence, summed over dimensions.
double gaussian_kl(const DiagonalGaussian& p, const DiagonalGaussian& q);

enum class NormalizeMode { MinMax01, ZScore };

struct NormalizeResult {
    Vec values;
    bool degenerate = false;  // constant input under minmax: all zeros
};
NormalizeResult normalize_penalties(const Vec& values, NormalizeMode mode);

}  // namespace pessimlab
