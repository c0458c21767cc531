#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pessimlab/stats.hpp"

using namespace pessimlab;

namespace {

// O(n^2) average ranks by counting; independent of the sort-based path.
Vec brute_ranks(const Vec& v) {
    Vec ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            less += (v[j] < v[i]);
            equal += (v[j] == v[i]);
        }
        ranks[i] = static_cast<double>(less) + 0.5 * static_cast<double>(equal + 1);
    }
    return ranks;
}

double brute_spearman(const PairedSample& s) { return pearson({brute_ranks(s.x), brute_ranks(s.y)}); }

double brute_auc(const Vec& scores, const std::vector<int>& labels) {
    double num2 = 0.0;  // 2*(wins + 0.5*ties)
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++n_pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j])
                num2 += 2.0;
            else if (scores[i] == scores[j])
                num2 += 1.0;
        }
    }
    n_neg = scores.size() - n_pos;
    return num2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Re-scans the full sample at every distinct threshold (descending).
double brute_ap(const Vec& scores, const std::vector<int>& labels) {
    Vec thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t total_pos = 0;
    for (int l : labels) total_pos += (l != 0);
    double ap = 0.0, prev_recall = 0.0;
    for (double thr : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= thr) {
                if (labels[i])
                    ++tp;
                else
                    ++fp;
            }
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

double brute_poi(const std::vector<Vec>& xs, const std::vector<Vec>& ys) {
    double total = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        double num2 = 0.0;
        for (double x : xs[t])
            for (double y : ys[t]) {
                if (x > y)
                    num2 += 2.0;
                else if (x == y)
                    num2 += 1.0;
            }
        total += num2 / (2.0 * static_cast<double>(xs[t].size()) * static_cast<double>(ys[t].size()));
    }
    return total / static_cast<double>(xs.size());
}

Vec random_vec(Rng& rng, std::size_t n, double lo, double hi) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Coarse grid so ties actually occur.
Vec random_tied_vec(Rng& rng, std::size_t n) {
    Vec v(n);
    for (double& x : v) x = static_cast<double>(rng.integer(0, 9));
    return v;
}

}  // namespace

TEST_CASE("spearman basics") {
    CHECK(spearman({{1, 2, 3}, {10, 20, 30}}) == doctest::Approx(1.0));
    CHECK(spearman({{1, 2, 3}, {30, 20, 10}}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(spearman({{1, 1, 1}, {1, 2, 3}}), ValidationError);
}

TEST_CASE("spearman matches brute-force average ranks exactly, with ties") {
    PairedSample tied{{1, 2, 2, 3}, {1, 3, 2, 4}};
    CHECK(spearman(tied) == brute_spearman(tied));
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng.index(199);
        PairedSample s{random_tied_vec(rng, n), random_tied_vec(rng, n)};
        bool degenerate = true;
        for (double v : s.x) degenerate = degenerate && v == s.x.front();
        bool degy = true;
        for (double v : s.y) degy = degy && v == s.y.front();
        if (degenerate || degy) continue;
        CHECK(spearman(s) == brute_spearman(s));
        CHECK(average_ranks(s.x) == brute_ranks(s.x));
    }
}

TEST_CASE("pearson basics and affine invariance") {
    Rng rng(7);
    const Vec x = random_vec(rng, 40, -5, 5);
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] + 1.0;
    CHECK(pearson({x, y}) == doctest::Approx(1.0));

    const Vec y2 = random_vec(rng, 40, -5, 5);
    const double r = pearson({x, y2});
    Vec xs(x.size()), ys(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xs[i] = 3.5 * x[i] - 2.0;
        ys[i] = 0.25 * y2[i] + 11.0;
    }
    CHECK(pearson({xs, ys}) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("shape moments") {
    CHECK(skewness({-1, 0, 1}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(skewness({2, 2, 2}), ValidationError);

    // Monte Carlo: excess kurtosis of a standard normal is 0.
    Rng rng(123);
    Vec xs(1000000);
    for (double& x : xs) x = rng.normal();
    CHECK(std::fabs(kurtosis(xs)) < 0.05);
    CHECK(std::fabs(skewness(xs)) < 0.02);
}

TEST_CASE("roc_auc basics") {
    CHECK(roc_auc({1, 0, 1, 0}, {1, 0, 1, 0}) == doctest::Approx(1.0));
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_auc({1, 2}, {1, 1}), ValidationError);
}

TEST_CASE("classifier metrics match O(n^2) oracles exactly") {
    Rng rng(99);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 10 + rng.index(191);
        Vec scores = random_tied_vec(rng, n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform01() < 0.3 ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        CHECK(roc_auc(scores, labels) == brute_auc(scores, labels));
        CHECK(average_precision(scores, labels) == brute_ap(scores, labels));
    }
}

TEST_CASE("AUC properties") {
    Rng rng(2024);
    Vec scores = random_vec(rng, 120, -3, 3);
    std::vector<int> labels(scores.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = rng.uniform01() < 0.5;
    labels[0] = 1;
    labels[1] = 0;

    const double auc = roc_auc(scores, labels);
    // Invariance under strictly increasing transforms.
    Vec exp_scores(scores.size()), affine_scores(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        exp_scores[i] = std::exp(scores[i]);
        affine_scores[i] = 4.0 * scores[i] + 7.0;
    }
    CHECK(roc_auc(exp_scores, labels) == doctest::Approx(auc).epsilon(1e-12));
    CHECK(roc_auc(affine_scores, labels) == doctest::Approx(auc).epsilon(1e-12));

    // Tie-free scores: flipping the sign complements the AUC.
    Vec neg(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) neg[i] = -scores[i];
    CHECK(roc_auc(neg, labels) == doctest::Approx(1.0 - auc).epsilon(1e-12));

    // Spearman shares the monotone-invariance property.
    Vec other = random_vec(rng, scores.size(), 0, 1);
    CHECK(spearman({exp_scores, other}) == doctest::Approx(spearman({scores, other})).epsilon(1e-12));
}

TEST_CASE("pr_curve precision at every achieved recall") {
    const Vec scores{0.9, 0.8, 0.7, 0.6, 0.5};
    const std::vector<int> labels{1, 0, 1, 1, 0};
    const auto curve = pr_curve(scores, labels);
    REQUIRE(curve.size() == 5);
    CHECK(curve.front().recall == doctest::Approx(1.0 / 3.0));
    CHECK(curve.front().precision == doctest::Approx(1.0));
    CHECK(curve.back().recall == doctest::Approx(1.0));
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall >= curve[i - 1].recall);
}

TEST_CASE("bootstrap_ci basics") {
    const std::vector<Vec> constant{{3.0, 3.0}, {3.0, 3.0, 3.0}};
    const CiEstimate c = bootstrap_ci(constant, AggregateStat::Mean, 200, 0.95, 1);
    CHECK(c.point == 3.0);
    CHECK(c.lo == 3.0);
    CHECK(c.hi == 3.0);

    Rng rng(5);
    std::vector<Vec> tasks{random_vec(rng, 30, 0, 1), random_vec(rng, 25, 0, 2)};
    const CiEstimate ci = bootstrap_ci(tasks, AggregateStat::Iqm, 500, 0.95, 9);
    Vec pooled;
    for (const auto& t : tasks) pooled.insert(pooled.end(), t.begin(), t.end());
    CHECK(ci.point == doctest::Approx(iqm_of(pooled)));
    CHECK(ci.lo <= ci.point);
    CHECK(ci.point <= ci.hi);

    // Determinism given seed.
    const CiEstimate ci2 = bootstrap_ci(tasks, AggregateStat::Iqm, 500, 0.95, 9);
    CHECK(ci.lo == ci2.lo);
    CHECK(ci.hi == ci2.hi);
}

TEST_CASE("bootstrap coverage for the mean of Uniform(0,1)") {
    int covered = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(1000 + trial);
        std::vector<Vec> tasks{random_vec(rng, 1000, 0, 1)};
        const CiEstimate ci = bootstrap_ci(tasks, AggregateStat::Mean, 2000, 0.95, 77 + trial);
        if (ci.lo <= 0.5 && 0.5 <= ci.hi) ++covered;
    }
    CHECK(covered >= 93);
}

TEST_CASE("probability_of_improvement") {
    const std::vector<Vec> a{{1, 2, 3}, {4, 5}};
    CHECK(probability_of_improvement(a, a) == doctest::Approx(0.5));

    const std::vector<Vec> hi{{10, 11}, {12}};
    const std::vector<Vec> lo{{1, 2}, {3}};
    CHECK(probability_of_improvement(hi, lo) == 1.0);
    CHECK_THROWS_AS(probability_of_improvement(hi, {{1.0}}), ValidationError);

    Rng rng(404);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Vec> xs, ys;
        const std::size_t tasks = 1 + rng.index(4);
        for (std::size_t t = 0; t < tasks; ++t) {
            xs.push_back(random_tied_vec(rng, 1 + rng.index(30)));
            ys.push_back(random_tied_vec(rng, 1 + rng.index(30)));
        }
        CHECK(probability_of_improvement(xs, ys) == brute_poi(xs, ys));
    }
}

TEST_CASE("poi(X, X) = 0.5 for random X") {
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Vec> xs{random_tied_vec(rng, 2 + rng.index(40))};
        CHECK(probability_of_improvement(xs, xs) == doctest::Approx(0.5));
    }
}

TEST_CASE("welch t test") {
    const Vec same{1.0, 2.0, 3.0, 4.0};
    const WelchResult eq = welch_t_test(same, same);
    CHECK(eq.t == doctest::Approx(0.0));
    CHECK(eq.p_two_sided == doctest::Approx(1.0));

    // Classic critical value: t = 2.228 with df = 10 gives p = 0.05 two-sided.
    // Construct samples, then check the CDF helper through the public API by
    // scaling a known configuration.
    const Vec x{1.1, 1.9, 3.2, 3.8, 5.0, 6.1};
    const Vec y{0.9, 2.1, 2.8, 4.2, 5.2, 5.8};
    const WelchResult w = welch_t_test(x, y);
    CHECK(std::fabs(w.t) < 1.0);
    CHECK(w.p_two_sided > 0.3);

    const Vec big{10, 11, 12, 10.5, 11.5};
    const Vec small{1, 2, 1.5, 2.5, 1.8};
    CHECK(welch_t_test(big, small).p_two_sided < 1e-4);
}

TEST_CASE("iqm and median conventions") {
    CHECK(iqm_of({1, 2, 3, 4}) == doctest::Approx(2.5));
    CHECK(iqm_of({0, 100, 1, 2, 3, 4, 5, -100}) == doctest::Approx(2.5));
    CHECK(median_of({1, 2, 3, 4}) == doctest::Approx(2.5));
    CHECK(median_of({5, 1, 3}) == doctest::Approx(3.0));
}
