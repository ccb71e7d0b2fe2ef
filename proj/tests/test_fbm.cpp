#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <fraccusum/fbm.hpp>

#include "test_support.hpp"

using namespace fraccusum;

TEST_CASE("fgn_autocovariance closed form", "[fbm]") {
    HurstIndex half(0.5);
    CHECK(fgn_autocovariance(half, 0, 1.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(fgn_autocovariance(half, 3, 1.0) == Catch::Approx(0.0).margin(1e-15));

    HurstIndex h75(0.75);
    CHECK(fgn_autocovariance(h75, 1, 1.0) ==
          Catch::Approx(oracle::fgn_autocov_075_lag1).epsilon(1e-14));

    // step scaling gamma(k; step) = step^{2H} gamma(k; 1)
    for (std::size_t k : {0u, 1u, 5u}) {
        const double scaled = fgn_autocovariance(h75, k, 0.01);
        const double unit = fgn_autocovariance(h75, k, 1.0);
        CHECK(scaled == Catch::Approx(std::pow(0.01, 1.5) * unit).epsilon(1e-12));
    }

    CHECK_THROWS_AS(fgn_autocovariance(half, 0, 0.0), std::invalid_argument);
}

TEST_CASE("HurstIndex guard range", "[fbm]") {
    CHECK_THROWS_AS(HurstIndex(0.0), std::domain_error);
    CHECK_THROWS_AS(HurstIndex(0.005), std::domain_error);
    CHECK_THROWS_AS(HurstIndex(0.995), std::domain_error);
    CHECK_THROWS_AS(HurstIndex(1.2), std::domain_error);
    CHECK_NOTHROW(HurstIndex(0.01));
    CHECK_NOTHROW(HurstIndex(0.99));
}

TEST_CASE("Grid validation", "[fbm]") {
    CHECK_THROWS_AS(Grid(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(Grid(-0.1, 10), std::invalid_argument);
    CHECK_THROWS_AS(Grid(0.1, 1), std::invalid_argument);
    Grid g(0.25, 4);
    CHECK(g.time(2) == 0.5);
    CHECK(g.horizon() == 1.0);
    CHECK(g.points() == 5);
}

TEST_CASE("sample_fbm determinism and zero start", "[fbm]") {
    HurstIndex h(0.7);
    Grid grid(0.01, 1024);
    SamplePath a = sample_fbm(h, grid, Seed{12345, 9});
    SamplePath b = sample_fbm(h, grid, Seed{12345, 9});
    SamplePath c = sample_fbm(h, grid, Seed{12345, 10});
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.values[0] == 0.0);
    CHECK(a.change_point == kTauInfinity);
}

TEST_CASE("Brownian case: increment variance and whiteness", "[fbm][mc]") {
    HurstIndex h(0.5);
    const std::size_t n = 100;
    const double step = 0.04;
    Grid grid(step, n);
    FgnSampler sampler(h, grid);

    std::vector<double> incr;
    incr.reserve(100 * n);
    for (std::uint64_t r = 0; r < 100; ++r) {
        SamplePath p = sampler.sample(Seed{777, r});
        for (std::size_t j = 0; j < n; ++j) incr.push_back(p.values[j + 1] - p.values[j]);
    }
    const std::size_t total = incr.size();
    CHECK(total == 10000);

    const double var = testutil::variance(incr);
    CHECK(std::abs(var - step) <= 4.0 * step * std::sqrt(2.0 / static_cast<double>(total)));

    // lag-1 sample autocorrelation, pooled: |rho| < 4/sqrt(n)
    const double m = testutil::mean(incr);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < total; ++i)
        num += (incr[i] - m) * (incr[i + 1] - m);
    for (std::size_t i = 0; i < total; ++i) den += (incr[i] - m) * (incr[i] - m);
    CHECK(std::abs(num / den) < 4.0 / std::sqrt(static_cast<double>(total)));
}

TEST_CASE("self-similarity: Var(xi_T)/T^{2H} near 1", "[fbm][mc]") {
    const std::size_t n = 256;
    const std::size_t reps = 10000;
    for (double hv : {0.3, 0.5, 0.75}) {
        HurstIndex h(hv);
        Grid grid(1.0 / static_cast<double>(n), n);
        FgnSampler sampler(h, grid);
        std::vector<double> terminal(reps);
        for (std::uint64_t r = 0; r < reps; ++r)
            terminal[r] = sampler.sample(Seed{2024, r}).values.back();
        const double ratio = testutil::variance(terminal) / std::pow(grid.horizon(), 2.0 * hv);
        const double band = 5.0 / std::sqrt(static_cast<double>(reps));
        INFO("H = " << hv << " ratio = " << ratio);
        CHECK(ratio > 1.0 - band);
        CHECK(ratio < 1.0 + band);
    }
}

TEST_CASE("exact sampler: iid reduction at H=1/2", "[fbm][mc]") {
    HurstIndex h(0.5);
    const std::size_t n = 64;
    Grid grid(0.5, n);
    FbmExactSampler sampler(h, grid);
    std::vector<double> incr;
    for (std::uint64_t r = 0; r < 200; ++r) {
        SamplePath p = sampler.sample(Seed{5, r});
        for (std::size_t j = 0; j < n; ++j) incr.push_back(p.values[j + 1] - p.values[j]);
    }
    const double tol = 4.0 * 0.5 / std::sqrt(static_cast<double>(incr.size()));
    CHECK(std::abs(testutil::variance(incr) - 0.5) < 2.0 * tol);
    const double m = testutil::mean(incr);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < incr.size(); ++i) num += (incr[i] - m) * (incr[i + 1] - m);
    for (double x : incr) den += (x - m) * (x - m);
    CHECK(std::abs(num / den) < 4.0 / std::sqrt(static_cast<double>(incr.size())));
}

TEST_CASE("circulant and Cholesky samplers agree in distribution", "[fbm][mc]") {
    HurstIndex h(0.75);
    const std::size_t n = 256;
    Grid grid(1.0 / static_cast<double>(n), n);
    FgnSampler fast(h, grid);
    FbmExactSampler exact(h, grid);
    const std::size_t reps = 10000;
    std::vector<double> a(reps), b(reps);
    for (std::uint64_t r = 0; r < reps; ++r) {
        a[r] = fast.sample(Seed{91, r}).values.back();
        b[r] = exact.sample(Seed{1091, r}).values.back();
    }
    const double p = testutil::ks_two_sample_pvalue(a, b);
    INFO("KS p-value = " << p);
    CHECK(p > 0.01);
}

TEST_CASE("sample autocovariance matches closed form at H=0.65", "[fbm][mc]") {
    HurstIndex h(0.65);
    const std::size_t n = 128;
    Grid grid(1.0, n);
    FbmExactSampler sampler(h, grid);
    const std::size_t reps = 100;
    std::vector<std::vector<double>> paths(reps);
    for (std::uint64_t r = 0; r < reps; ++r) paths[r] = sampler.sample(Seed{31, r}).values;

    for (std::size_t lag : {0u, 1u, 2u, 3u}) {
        double acc = 0.0;
        std::size_t count = 0;
        for (const auto& v : paths)
            for (std::size_t j = 0; j + lag < n; ++j) {
                acc += (v[j + 1] - v[j]) * (v[j + lag + 1] - v[j + lag]);
                ++count;
            }
        const double est = acc / static_cast<double>(count);
        const double expect = fgn_autocovariance(h, lag, 1.0);
        INFO("lag " << lag << ": " << est << " vs " << expect);
        // pooled pairs are dependent within a path; scale the 4/sqrt(N) band
        // by an effective-sample factor of 2
        CHECK(std::abs(est - expect) < 8.0 / std::sqrt(static_cast<double>(count)));
    }
}

TEST_CASE("exact sampler size guard", "[fbm]") {
    HurstIndex h(0.6);
    CHECK_THROWS_AS(FbmExactSampler(h, Grid(0.001, 4097)), SizeLimitExceededError);
}

TEST_CASE("inject_drift: polynomial closed form", "[fbm]") {
    Grid grid(0.1, 10);
    SamplePath zero(grid, std::vector<double>(11, 0.0));

    SamplePath same = inject_drift(zero, DriftSpec::polynomial(0.0, 0.7), 0.0);
    CHECK(same.values == zero.values);

    SamplePath lin = inject_drift(zero, DriftSpec::polynomial(1.0, 0.0), 0.0);
    CHECK(lin.values[10] == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(lin.values[5] == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(lin.change_point == 0.0);

    SamplePath pre = inject_drift(zero, DriftSpec::polynomial(1.0, 0.0), kTauInfinity);
    CHECK(pre.values == zero.values);
    CHECK(pre.change_point == kTauInfinity);

    CHECK_THROWS_AS(inject_drift(zero, DriftSpec::polynomial(1.0, 0.0), 0.5),
                    UnsupportedTauError);
}

TEST_CASE("inject_drift: state-dependent Euler recursion", "[fbm]") {
    Grid grid(0.25, 4);
    SamplePath zero(grid, std::vector<double>(5, 0.0));
    DriftSpec fou = DriftSpec::affine(1.0, -0.5);

    SamplePath out = inject_drift(zero, fou, 0.0);
    // x_{j+1} = x_j + (1 - 0.5 x_j) * 0.25 on a zero noise path
    double x = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        x = x + (1.0 - 0.5 * x) * 0.25;
        CHECK(out.values[j + 1] == Catch::Approx(x).epsilon(1e-14));
    }

    // driving noise enters additively per cell
    std::vector<double> vals{0.0, 0.1, -0.2, 0.05, 0.3};
    SamplePath noisy(grid, std::move(vals));
    SamplePath driven = inject_drift(noisy, fou, 0.0);
    double y = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        y = y + (1.0 - 0.5 * y) * 0.25 + (noisy.values[j + 1] - noisy.values[j]);
        CHECK(driven.values[j + 1] == Catch::Approx(y).epsilon(1e-14));
    }
}

TEST_CASE("DriftSpec validation and helpers", "[fbm]") {
    CHECK_THROWS_AS(DriftSpec::polynomial(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(DriftSpec::bounded_power(0.0, 0.0, 1.0), std::invalid_argument);

    DriftSpec bp = DriftSpec::bounded_power(0.5, -0.8, 0.5);
    CHECK(bp.b(0.25) == Catch::Approx(0.5 - 0.2 + 0.5).epsilon(1e-14));
    CHECK(bp.b(4.0) == Catch::Approx(0.5 - 3.2 + 1.0).epsilon(1e-14));

    CHECK(DriftSpec::polynomial(1.0, 0.25).satisfies_energy_condition(0.75));
    CHECK_FALSE(DriftSpec::polynomial(1.0, -0.5).satisfies_energy_condition(0.75));
}
