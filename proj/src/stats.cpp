#include "pessimlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pessimlab {

namespace {

void check_pair(const PairedSample& s, std::size_t min_n) {
    if (s.x.size() != s.y.size()) throw ValidationError("paired sample length mismatch");
    if (s.x.size() < min_n) throw ValidationError("paired sample too small");
    if (!all_finite(s.x) || !all_finite(s.y)) throw ValidationError("non-finite entry in paired sample");
}

bool is_constant(const Vec& xs) {
    for (double x : xs)
        if (x != xs.front()) return false;
    return true;
}

// Counts of each class and validation shared by the classifier metrics.
void check_binary(const Vec& scores, const std::vector<int>& labels, std::size_t& n_pos, std::size_t& n_neg) {
    if (scores.size() != labels.size() || scores.empty())
        throw ValidationError("scores/labels length mismatch");
    if (!all_finite(scores)) throw ValidationError("non-finite score");
    n_pos = 0;
    for (int l : labels) n_pos += (l != 0);
    n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("single class");
}

// Regularized incomplete beta via Lentz continued fraction; used for the
// Student-t CDF in the Welch helper.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double betai_reg(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                         b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

Vec average_ranks(const Vec& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Vec ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const PairedSample& sample) {
    check_pair(sample, 2);
    const std::size_t n = sample.x.size();
    const double mx = mean_of(sample.x), my = mean_of(sample.y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = sample.x[i] - mx, dy = sample.y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ValidationError("undefined correlation");
    return sxy / std::sqrt(sxx * syy);
}

double spearman(const PairedSample& sample) {
    check_pair(sample, 2);
    if (is_constant(sample.x) || is_constant(sample.y)) throw ValidationError("undefined correlation");
    return pearson({average_ranks(sample.x), average_ranks(sample.y)});
}

namespace {

double central_moment(const Vec& xs, int k, double mean) {
    double s = 0.0;
    for (double x : xs) s += std::pow(x - mean, k);
    return s / static_cast<double>(xs.size());
}

}  // namespace

double skewness(const Vec& xs) {
    if (xs.size() < 3) throw ValidationError("skewness needs n >= 3");
    const double m = mean_of(xs);
    const double m2 = central_moment(xs, 2, m);
    if (m2 == 0.0) throw ValidationError("zero variance");
    return central_moment(xs, 3, m) / std::pow(m2, 1.5);
}

double kurtosis(const Vec& xs) {
    if (xs.size() < 3) throw ValidationError("kurtosis needs n >= 3");
    const double m = mean_of(xs);
    const double m2 = central_moment(xs, 2, m);
    if (m2 == 0.0) throw ValidationError("zero variance");
    return central_moment(xs, 4, m) / (m2 * m2) - 3.0;
}

double roc_auc(const Vec& scores, const std::vector<int>& labels) {
    std::size_t n_pos = 0, n_neg = 0;
    check_binary(scores, labels, n_pos, n_neg);
    const Vec ranks = average_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != 0) rank_sum += ranks[i];
    const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<PrPoint> pr_curve(const Vec& scores, const std::vector<int>& labels) {
    std::size_t n_pos = 0, n_neg = 0;
    check_binary(scores, labels, n_pos, n_neg);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<PrPoint> points;
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] != 0)
                ++tp;
            else
                ++fp;
        }
        points.push_back({static_cast<double>(tp) / static_cast<double>(n_pos),
                          static_cast<double>(tp) / static_cast<double>(tp + fp)});
        i = j + 1;
    }
    return points;
}

double average_precision(const Vec& scores, const std::vector<int>& labels) {
    const std::vector<PrPoint> points = pr_curve(scores, labels);
    double ap = 0.0, prev_recall = 0.0;
    for (const PrPoint& p : points) {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return ap;
}

double iqm_of(Vec xs) {
    if (xs.empty()) throw ValidationError("iqm of empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t cut = xs.size() / 4;
    double s = 0.0;
    for (std::size_t i = cut; i < xs.size() - cut; ++i) s += xs[i];
    return s / static_cast<double>(xs.size() - 2 * cut);
}

double aggregate_stat(const Vec& xs, AggregateStat stat) {
    switch (stat) {
        case AggregateStat::Mean: return mean_of(xs);
        case AggregateStat::Median: return median_of(xs);
        case AggregateStat::Iqm: return iqm_of(xs);
    }
    throw ValidationError("unknown aggregate statistic");
}

CiEstimate bootstrap_ci(const std::vector<Vec>& values_by_task, AggregateStat stat, int resamples,
                        double level, std::uint64_t seed) {
    if (values_by_task.empty()) throw ValidationError("bootstrap needs at least one task");
    if (resamples < 100) throw ValidationError("bootstrap needs >= 100 resamples");
    if (level <= 0.0 || level >= 1.0) throw ValidationError("bootstrap level must be in (0,1)");
    Vec pooled;
    for (const Vec& task : values_by_task) {
        if (task.empty()) throw ValidationError("bootstrap task with no values");
        pooled.insert(pooled.end(), task.begin(), task.end());
    }

    CiEstimate ci;
    ci.level = level;
    ci.point = aggregate_stat(pooled, stat);

    Vec replicas(static_cast<std::size_t>(resamples), 0.0);
    parallel_for(replicas.size(), default_workers(), [&](std::size_t b) {
        Rng rng(mix_seed(seed, b));
        Vec sample;
        sample.reserve(pooled.size());
        for (const Vec& task : values_by_task)
            for (std::size_t i = 0; i < task.size(); ++i) sample.push_back(task[rng.index(task.size())]);
        replicas[b] = aggregate_stat(sample, stat);
    });
    const double alpha = 1.0 - level;
    ci.lo = quantile_linear(replicas, alpha / 2.0);
    ci.hi = quantile_linear(replicas, 1.0 - alpha / 2.0);
    return ci;
}

double probability_of_improvement(const std::vector<Vec>& x_by_task, const std::vector<Vec>& y_by_task) {
    if (x_by_task.size() != y_by_task.size() || x_by_task.empty())
        throw ValidationError("task mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < x_by_task.size(); ++t) {
        const Vec& xs = x_by_task[t];
        Vec ys = y_by_task[t];
        if (xs.empty() || ys.empty()) throw ValidationError("task mismatch");
        std::sort(ys.begin(), ys.end());
        double wins2 = 0.0;  // 2*(wins + 0.5*ties), kept integral
        for (double x : xs) {
            const auto lo = std::lower_bound(ys.begin(), ys.end(), x);
            const auto hi = std::upper_bound(ys.begin(), ys.end(), x);
            wins2 += 2.0 * static_cast<double>(lo - ys.begin()) + static_cast<double>(hi - lo);
        }
        total += wins2 / (2.0 * static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
    }
    return total / static_cast<double>(x_by_task.size());
}

WelchResult welch_t_test(const Vec& x, const Vec& y) {
    if (x.size() < 2 || y.size() < 2) throw ValidationError("welch test needs n >= 2 per sample");
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    const double mx = mean_of(x), my = mean_of(y);
    double vx = 0.0, vy = 0.0;
    for (double v : x) vx += (v - mx) * (v - mx);
    for (double v : y) vy += (v - my) * (v - my);
    vx /= nx - 1.0;
    vy /= ny - 1.0;
    const double se2 = vx / nx + vy / ny;
    if (se2 == 0.0) throw ValidationError("zero variance");
    WelchResult out;
    out.t = (mx - my) / std::sqrt(se2);
    out.df = se2 * se2 / (vx * vx / (nx * nx * (nx - 1.0)) + vy * vy / (ny * ny * (ny - 1.0)));
    out.p_two_sided = betai_reg(out.df / 2.0, 0.5, out.df / (out.df + out.t * out.t));
    return out;
}

}  // namespace pessimlab
