#pragma once

#include <cstdint>
#include <vector>

#include "pessimlab/common.hpp"

namespace pessimlab {

struct PairedSample {
    Vec x;
    Vec y;
};

// Average ranks (1-based, ties share the mean of their rank range).
Vec average_ranks(const Vec& values);

// Spearman rank correlation: Pearson correlation of average-rank data.
// Throws ValidationError("undefined correlation") on constant input.
double spearman(const PairedSample& sample);

double pearson(const PairedSample& sample);

// Shape moments use population central moments; kurtosis is excess (normal -> 0).
double skewness(const Vec& xs);
double kurtosis(const Vec& xs);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

// Mann-Whitney AUC with ties counted one half. Both classes must be present.
double roc_auc(const Vec& scores, const std::vector<int>& labels);

// Step-interpolated average precision over descending-score thresholds.
double average_precision(const Vec& scores, const std::vector<int>& labels);

std::vector<PrPoint> pr_curve(const Vec& scores, const std::vector<int>& labels);

enum class AggregateStat { Mean, Median, Iqm };

// Interquartile mean: mean of the middle 50% (floor(n/4) trimmed per side).
double iqm_of(Vec xs);

double aggregate_stat(const Vec& xs, AggregateStat stat);

struct CiEstimate {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
};

// Stratified bootstrap: resamples within each task, statistic over the pooled
// sample, percentile interval. Deterministic given seed.
CiEstimate bootstrap_ci(const std::vector<Vec>& values_by_task, AggregateStat stat, int resamples,
                        double level, std::uint64_t seed);

// Mean over tasks of P(X > Y) + 0.5 P(X = Y) across all within-task pairs.
double probability_of_improvement(const std::vector<Vec>& x_by_task, const std::vector<Vec>& y_by_task);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
};

WelchResult welch_t_test(const Vec& x, const Vec& y);

}  // namespace pessimlab
