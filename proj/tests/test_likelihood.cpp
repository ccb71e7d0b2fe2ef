#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <fraccusum/fbm.hpp>
#include <fraccusum/likelihood.hpp>

#include "test_support.hpp"

using namespace fraccusum;

TEST_CASE("poly_coefficients closed form", "[likelihood]") {
    PolyCoefficients base = poly_coefficients(HurstIndex(0.5), 0.0);
    CHECK(base.d == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(base.v == Catch::Approx(1.0).epsilon(1e-14));

    // alpha = 0 leaves every Gamma ratio and the trailing factor at 1
    for (double hv : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        CHECK(poly_coefficients(HurstIndex(hv), 0.0).d == Catch::Approx(1.0).epsilon(1e-13));
    }

    PolyCoefficients pc = poly_coefficients(HurstIndex(0.75), 0.25);
    CHECK(pc.d == Catch::Approx(oracle::d_075_025).epsilon(1e-13));
    CHECK(pc.v == Catch::Approx(oracle::v_075_025).epsilon(1e-13));

    PolyCoefficients neg = poly_coefficients(HurstIndex(0.3), -0.2);
    CHECK(neg.d == Catch::Approx(oracle::d_03_m02).epsilon(1e-13));
    CHECK(neg.v == Catch::Approx(oracle::v_03_m02).epsilon(1e-13));

    CHECK_THROWS_AS(poly_coefficients(HurstIndex(0.75), -0.76), std::domain_error);
}

TEST_CASE("q_process_poly traces", "[likelihood]") {
    Grid grid(0.1, 10);

    QTrace constant = q_process_poly(HurstIndex(0.5), 0.8, 0.0, grid);
    for (double q : constant.q) CHECK(q == Catch::Approx(0.8).epsilon(1e-14));
    CHECK_FALSE(constant.singular_origin);

    QTrace zero = q_process_poly(HurstIndex(0.7), 0.0, 0.25, grid);
    for (double q : zero.q) CHECK(q == 0.0);

    QTrace frac = q_process_poly(HurstIndex(0.75), 1.0, 0.25, grid);
    CHECK(frac.q[0] == 0.0);
    CHECK(frac.q[10] == Catch::Approx(oracle::d_075_025).epsilon(1e-13));
    CHECK_FALSE(frac.singular_origin);

    QTrace sing = q_process_poly(HurstIndex(0.3), 1.0, -0.2, grid);
    CHECK(sing.q[0] == 0.0);
    CHECK(sing.singular_origin);
    CHECK(sing.q[1] > sing.q[10]);
}

TEST_CASE("q_process_numeric: zero drift and constant-drift reduction", "[likelihood]") {
    Grid grid(0.01, 200);
    SamplePath path = sample_fbm(HurstIndex(0.5), grid, Seed{3, 0});
    VolatilitySpec sigma = VolatilitySpec::constant(1.0);

    QTrace zero = q_process_numeric(DriftSpec::polynomial(0.0, 0.0), path, HurstIndex(0.5), sigma);
    for (double q : zero.q) CHECK(q == 0.0);

    QTrace constant =
        q_process_numeric(DriftSpec::polynomial(2.5, 0.0), path, HurstIndex(0.5), sigma);
    for (double q : constant.q) CHECK(q == Catch::Approx(2.5).epsilon(1e-10));
}

TEST_CASE("q_process_numeric matches the closed form away from the origin", "[likelihood]") {
    const std::size_t n = 1000;
    Grid grid(0.001, n);
    SamplePath zero(grid, std::vector<double>(n + 1, 0.0));
    VolatilitySpec sigma = VolatilitySpec::constant(1.0);

    for (double hv : {0.3, 0.5, 0.75}) {
        for (double alpha : {0.0, hv - 0.5, 0.25}) {
            HurstIndex h(hv);
            QTrace numeric =
                q_process_numeric(DriftSpec::polynomial(1.0, alpha), zero, h, sigma);
            const double d = poly_coefficients(h, alpha).d;
            double worst = 0.0;
            for (std::size_t k = n / 10; k <= n; ++k) {
                const double expect = d * std::pow(grid.time(k), alpha);
                worst = std::max(worst, std::abs(numeric.q[k] - expect) / std::abs(expect));
            }
            INFO("H = " << hv << " alpha = " << alpha << " worst rel err = " << worst);
            CHECK(worst < 1e-3);
        }
    }
}

TEST_CASE("q_process_numeric: H=1/2 state-dependent reduction", "[likelihood]") {
    const std::size_t n = 1000;
    Grid grid(0.001, n);
    SamplePath path = sample_fbm(HurstIndex(0.5), grid, Seed{77, 1});
    DriftSpec fou = DriftSpec::affine(0.5, -0.8);
    QTrace q = q_process_numeric(fou, path, HurstIndex(0.5), VolatilitySpec::constant(1.0));

    // at H=1/2 the kernel is 1 and the clock is t, so Q_{t_k} recovers
    // b(xi) at the previous cell midpoint up to one increment of noise
    double acc = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double b_mid = fou.b(0.5 * (path.values[k - 1] + path.values[k]));
        acc += std::abs(q.q[k] - b_mid);
    }
    CHECK(acc / static_cast<double>(n) < 0.02);
}

TEST_CASE("llr_trace: zero Q and grid mismatch", "[likelihood]") {
    Grid grid(0.01, 64);
    SamplePath path = sample_fbm(HurstIndex(0.6), grid, Seed{8, 2});
    MartingaleTrace m = fundamental_transform(path, HurstIndex(0.6), VolatilitySpec::constant(1.0));

    QTrace zero{grid, std::vector<double>(65, 0.0), false};
    LLRTrace l = llr_trace(zero, m);
    for (double u : l.u) CHECK(u == 0.0);
    for (double v : l.qv_u) CHECK(v == 0.0);

    QTrace other{Grid(0.02, 64), std::vector<double>(65, 0.0), false};
    CHECK_THROWS_AS(llr_trace(other, m), GridMismatchError);
}

TEST_CASE("llr_trace reproduces the classical Brownian likelihood", "[likelihood]") {
    const double mu = 1.3;
    Grid grid(0.005, 400);
    SamplePath path = sample_fbm(HurstIndex(0.5), grid, Seed{21, 5});
    HurstIndex h(0.5);
    VolatilitySpec sigma = VolatilitySpec::constant(1.0);

    MartingaleTrace m = fundamental_transform(path, h, sigma);
    QTrace q = q_process_poly(h, mu, 0.0, grid);
    LLRTrace l = llr_trace(q, m);

    CHECK(l.u[0] == 0.0);
    for (std::size_t k = 0; k <= 400; ++k) {
        const double expect = mu * path.values[k] - 0.5 * mu * mu * grid.time(k);
        CHECK(std::abs(l.u[k] - expect) < 1e-12);
        CHECK(l.qv_u[k] == Catch::Approx(mu * mu * grid.time(k)).margin(1e-12));
    }
}

TEST_CASE("linear-energy case: qv_u is linear with slope theta^2 v", "[likelihood]") {
    const double theta = 0.9;
    const std::size_t n = 2000;
    Grid grid(0.001, n);
    for (double hv : {0.3, 0.75}) {
        HurstIndex h(hv);
        const double alpha = hv - 0.5;
        QTrace q = q_process_poly(h, theta, alpha, grid);
        MartingaleTrace m{grid, std::vector<double>(n + 1, 0.0),
                          detail::qv_closed_form(grid, frac_constants(h).lambda_h, hv)};
        LLRTrace l = llr_trace(q, m);

        std::vector<double> t(n + 1);
        for (std::size_t k = 0; k <= n; ++k) t[k] = grid.time(k);
        testutil::LineFit fit = testutil::fit_line(t, l.qv_u);
        const double kappa = theta * theta * poly_coefficients(h, alpha).v;
        INFO("H = " << hv << " slope = " << fit.slope << " kappa = " << kappa
                    << " R2 = " << fit.r_squared);
        CHECK(fit.r_squared > 0.999);
        CHECK(std::abs(fit.slope / kappa - 1.0) < 0.02);

        for (std::size_t k = 1; k <= n; ++k) CHECK(l.qv_u[k] >= l.qv_u[k - 1]);
    }
}

TEST_CASE("energy_growth closed form and domain", "[likelihood]") {
    CHECK(energy_growth(HurstIndex(0.5), 1.0, 0.0, 3.7) == Catch::Approx(3.7).epsilon(1e-14));
    CHECK(energy_growth(HurstIndex(0.7), 0.0, 0.0, 5.0) == 0.0);
    CHECK(energy_growth(HurstIndex(0.75), 1.0, 0.25, 2.0) ==
          Catch::Approx(2.0 * oracle::v_075_025).epsilon(1e-13));
    // quadratic amplitude scaling
    CHECK(energy_growth(HurstIndex(0.75), 2.0, 0.25, 2.0) ==
          Catch::Approx(8.0 * oracle::v_075_025).epsilon(1e-13));
    CHECK_THROWS_AS(energy_growth(HurstIndex(0.75), 1.0, -0.25, 1.0), std::domain_error);
    CHECK_THROWS_AS(energy_growth(HurstIndex(0.75), 1.0, -0.3, 1.0), std::domain_error);
}

TEST_CASE("Wald identity at a fixed horizon under the noise law", "[likelihood][mc]") {
    HurstIndex h(0.75);
    const std::size_t n = 512;
    Grid grid(1.0 / static_cast<double>(n), n);
    FgnSampler sampler(h, grid);
    VolatilitySpec sigma = VolatilitySpec::constant(1.0);
    QTrace q = q_process_poly(h, 1.0, 0.25, grid);

    const std::size_t reps = 3000;
    std::vector<double> gap(reps);
    for (std::uint64_t r = 0; r < reps; ++r) {
        MartingaleTrace m = fundamental_transform_fast(sampler.sample(Seed{909, r}), h, sigma);
        LLRTrace l = llr_trace(q, m);
        gap[r] = -l.u.back() - 0.5 * l.qv_u.back();
    }
    const double m = testutil::mean(gap);
    const double se = testutil::std_error(gap);
    INFO("gap = " << m << " se = " << se);
    CHECK(std::abs(m) < 3.0 * se);
}
