#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "pessimlab/core.hpp"

using namespace pessimlab;

namespace {

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d_s, std::size_t d_a) {
    std::vector<Transition> transitions(n);
    for (auto& tr : transitions) {
        tr.state.resize(d_s);
        tr.next_state.resize(d_s);
        tr.action.resize(d_a);
        for (double& v : tr.state) v = rng.uniform(-5, 5);
        for (double& v : tr.next_state) v = rng.uniform(-5, 5);
        for (double& v : tr.action) v = rng.uniform(-1, 1);
        tr.reward = rng.uniform(-10, 10);
        tr.terminal = rng.uniform01() < 0.1;
    }
    DatasetMeta meta;
    meta.env_id = "pointmass2d";
    meta.tier = "random";
    meta.seed = 7;
    return make_dataset(std::move(transitions), std::move(meta));
}

std::string temp_base(const std::string& tag) { return "/tmp/pessimlab_core_" + tag; }

bool transitions_equal(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Transition& x = a.transitions[i];
        const Transition& y = b.transitions[i];
        if (x.state != y.state || x.action != y.action || x.next_state != y.next_state) return false;
        if (x.reward != y.reward || x.terminal != y.terminal) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("empty dataset rejected") {
    CHECK_THROWS_WITH_AS(make_dataset({}, {}), "empty dataset", ValidationError);
}

TEST_CASE("single-transition bookkeeping") {
    Rng rng(1);
    const Dataset ds = random_dataset(rng, 1, 4, 2);
    CHECK(ds.meta.size == 1);
    const std::string base = temp_base("single");
    dataset_write(ds, base);
    std::ifstream csv(base + ".csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 2);  // header + one row
    const Dataset back = dataset_read(base);
    CHECK(back.meta.size == 1);
    CHECK(back.meta.env_id == "pointmass2d");
}

TEST_CASE("write/read round-trips field-for-field on a 1000-row dataset") {
    Rng rng(2);
    const Dataset ds = random_dataset(rng, 1000, 4, 2);
    const std::string base = temp_base("big");
    dataset_write(ds, base);
    const Dataset back = dataset_read(base);
    CHECK(transitions_equal(ds, back));
    CHECK(back.norm.input_mean == ds.norm.input_mean);
    CHECK(back.norm.input_std == ds.norm.input_std);
}

TEST_CASE("round-trip property over many random datasets") {
    Rng rng(3);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + rng.index(30);
        const std::size_t d_s = 1 + rng.index(4);
        const std::size_t d_a = 1 + rng.index(3);
        const Dataset ds = random_dataset(rng, n, d_s, d_a);
        const std::string base = temp_base("prop");
        dataset_write(ds, base);
        const Dataset back = dataset_read(base);
        REQUIRE(transitions_equal(ds, back));
        REQUIRE(back.meta.tier == ds.meta.tier);
    }
}

TEST_CASE("read rejects corrupted inputs") {
    Rng rng(4);
    const Dataset ds = random_dataset(rng, 5, 2, 1);
    const std::string base = temp_base("corrupt");

    SUBCASE("NaN cell") {
        dataset_write(ds, base);
        std::ifstream in(base + ".csv");
        std::string content, line;
        std::getline(in, content);
        content += "\n";
        for (int i = 0; std::getline(in, line); ++i)
            content += (i == 3 ? "nan,0,0,0,0,0,0" : line) + "\n";
        in.close();
        std::ofstream(base + ".csv") << content;
        CHECK_THROWS_WITH_AS(dataset_read(base), "non-finite value at row 3", ValidationError);
    }
    SUBCASE("meta size mismatch") {
        Dataset bad = ds;
        bad.meta.size = 7;
        CHECK_THROWS_AS(dataset_write(bad, base), ValidationError);
        dataset_write(ds, base);
        // Tamper with the stored size.
        std::ifstream mf(base + ".meta.json");
        std::string meta((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
        mf.close();
        const auto pos = meta.find("\"size\": 5");
        REQUIRE(pos != std::string::npos);
        meta.replace(pos, 9, "\"size\": 6");
        std::ofstream(base + ".meta.json") << meta;
        CHECK_THROWS_AS(dataset_read(base), ValidationError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(dataset_read("/tmp/pessimlab_nope"), ValidationError); }
    SUBCASE("tampered norm") {
        dataset_write(ds, base);
        std::ifstream mf(base + ".meta.json");
        std::string meta((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());
        mf.close();
        const auto pos = meta.find("\"input_mean\": [");
        REQUIRE(pos != std::string::npos);
        meta.insert(pos + 15, "9.5, ");
        const auto comma = meta.find(',', pos + 20);
        meta.erase(comma, meta.find(']', pos) - comma);
        std::ofstream(base + ".meta.json") << meta;
        CHECK_THROWS_AS(dataset_read(base), ValidationError);
    }
}

TEST_CASE("normalize_input") {
    Rng rng(5);
    const Dataset ds = random_dataset(rng, 200, 3, 2);

    SUBCASE("mean maps to zero") {
        Vec s(ds.norm.input_mean.begin(), ds.norm.input_mean.begin() + 3);
        Vec a(ds.norm.input_mean.begin() + 3, ds.norm.input_mean.end());
        for (double v : normalize_input(ds, s, a)) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("constant column stays finite via the std floor") {
        std::vector<Transition> transitions = ds.transitions;
        for (auto& tr : transitions) tr.action[0] = 2.5;
        const Dataset flat = make_dataset(std::move(transitions), ds.meta);
        CHECK(flat.norm.input_std[3] == 1e-8);
        const Vec out = normalize_input(flat, flat.transitions[0].state, {2.5, 0.0});
        CHECK(all_finite(out));
        CHECK(out[3] == 0.0);
    }
    SUBCASE("matches direct recomputation") {
        Vec s{0.3, -1.2, 2.0}, a{0.5, -0.25};
        const Vec got = normalize_input(ds, s, a);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(got[i] == (s[i] - ds.norm.input_mean[i]) / ds.norm.input_std[i]);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(got[3 + i] == (a[i] - ds.norm.input_mean[3 + i]) / ds.norm.input_std[3 + i]);
    }
    SUBCASE("affine in its input") {
        Rng arng(6);
        for (int rep = 0; rep < 50; ++rep) {
            Vec x(5), y(5);
            for (double& v : x) v = arng.uniform(-3, 3);
            for (double& v : y) v = arng.uniform(-3, 3);
            const double alpha = arng.uniform01();
            Vec mixed(5);
            for (std::size_t i = 0; i < 5; ++i) mixed[i] = alpha * x[i] + (1 - alpha) * y[i];
            const Vec nx = normalize_input(ds, {x[0], x[1], x[2]}, {x[3], x[4]});
            const Vec ny = normalize_input(ds, {y[0], y[1], y[2]}, {y[3], y[4]});
            const Vec nm = normalize_input(ds, {mixed[0], mixed[1], mixed[2]}, {mixed[3], mixed[4]});
            for (std::size_t i = 0; i < 5; ++i)
                CHECK(nm[i] == doctest::Approx(alpha * nx[i] + (1 - alpha) * ny[i]).epsilon(1e-10));
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(normalize_input(ds, {1.0}, {0.0, 0.0}), ValidationError);
    }
}

TEST_CASE("norm recomputation matches stored values") {
    Rng rng(7);
    const Dataset ds = random_dataset(rng, 500, 4, 2);
    const NormStats again = compute_norm(ds.transitions);
    for (std::size_t i = 0; i < again.input_mean.size(); ++i) {
        CHECK(std::fabs(again.input_mean[i] - ds.norm.input_mean[i]) < 1e-10);
        CHECK(std::fabs(again.input_std[i] - ds.norm.input_std[i]) < 1e-10);
    }
}

TEST_CASE("format_g17 round-trips doubles") {
    Rng rng(8);
    for (int rep = 0; rep < 1000; ++rep) {
        const double x = (rng.uniform01() - 0.5) * std::pow(10.0, rng.integer(-12, 12));
        CHECK(std::strtod(format_g17(x).c_str(), nullptr) == x);
    }
}
