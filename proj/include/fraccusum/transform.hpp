#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fraccusum/fft.hpp"
#include "fraccusum/grid.hpp"
#include "fraccusum/volatility.hpp"

namespace fraccusum {

/// c_H = 2H Gamma(3/2-H) Gamma(H+1/2),
/// lambda_H = 2H Gamma(3-2H) Gamma(H+1/2) / Gamma(3/2-H).
struct FracConstants {
    double c_h = 1.0;
    double lambda_h = 1.0;
};

inline FracConstants frac_constants(const HurstIndex& hurst) {
    const double h = hurst.value();
    FracConstants fc;
    fc.c_h = 2.0 * h * std::tgamma(1.5 - h) * std::tgamma(h + 0.5);
    fc.lambda_h = 2.0 * h * std::tgamma(3.0 - 2.0 * h) * std::tgamma(h + 0.5) / std::tgamma(1.5 - h);
    return fc;
}

/// k_H(t,s) = c_H^{-1} s^{1/2-H} (t-s)^{1/2-H} on 0 < s < t. The endpoint
/// singularities for H > 1/2 are integrable; callers quadrature at interior
/// points only.
inline double kernel_k(const HurstIndex& hurst, double t, double s) {
    if (!(s > 0.0 && s < t))
        throw std::domain_error("kernel_k: require 0 < s < t");
    const double p = 0.5 - hurst.value();
    return std::pow(s, p) * std::pow(t - s, p) / frac_constants(hurst).c_h;
}

/// Discretized fundamental martingale zeta and its deterministic quadratic
/// variation <zeta>_t = lambda_H^{-1} t^{2-2H}.
struct MartingaleTrace {
    Grid grid;
    std::vector<double> zeta;   // count+1 points, zeta[0] = 0
    std::vector<double> qv;     // count+1 points, strictly increasing
};

namespace detail {

inline std::vector<double> qv_closed_form(const Grid& grid, double lambda_h, double hurst) {
    std::vector<double> qv(grid.points());
    const double expo = 2.0 - 2.0 * hurst;
    for (std::size_t nidx = 0; nidx < qv.size(); ++nidx)
        qv[nidx] = std::pow(grid.time(nidx), expo) / lambda_h;
    return qv;
}

/// Midpoint integrand pieces shared by the direct and fast transforms:
/// phi[j] = (j+1/2)^{1/2-H} * dxi_j / sigma(s_j*).
inline std::vector<double> midpoint_sources(const SamplePath& path, double p,
                                            const VolatilitySpec& sigma) {
    const Grid& grid = path.grid;
    std::vector<double> phi(grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) {
        const double dxi = path.values[j + 1] - path.values[j];
        phi[j] = std::pow(static_cast<double>(j) + 0.5, p) * dxi / sigma.at_midpoint(grid, j);
    }
    return phi;
}

} // namespace detail

/// zeta_{t_n} = sum_{j<n} k_H(t_n, s_j*) (xi_{j+1} - xi_j) / sigma(s_j*),
/// with s_j* the cell midpoint. Direct O(n^2) evaluation; the reference the
/// fast path is checked against.
inline MartingaleTrace fundamental_transform(const SamplePath& path, const HurstIndex& hurst,
                                             const VolatilitySpec& sigma) {
    const Grid& grid = path.grid;
    const FracConstants fc = frac_constants(hurst);
    const double p = 0.5 - hurst.value();
    const double scale = std::pow(grid.step, 1.0 - 2.0 * hurst.value()) / fc.c_h;

    const std::vector<double> phi = detail::midpoint_sources(path, p, sigma);
    std::vector<double> zeta(grid.points(), 0.0);
    for (std::size_t n = 1; n <= grid.count; ++n) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += std::pow(static_cast<double>(n - j) - 0.5, p) * phi[j];
        zeta[n] = scale * acc;
    }
    return MartingaleTrace{grid, std::move(zeta),
                           detail::qv_closed_form(grid, fc.lambda_h, hurst.value())};
}

/// Same sums as fundamental_transform, reorganized as one causal convolution
/// (the kernel factorizes as s^{1/2-H} times (t-s)^{1/2-H}); O(n log n).
inline MartingaleTrace fundamental_transform_fast(const SamplePath& path, const HurstIndex& hurst,
                                                  const VolatilitySpec& sigma) {
    const Grid& grid = path.grid;
    const FracConstants fc = frac_constants(hurst);
    const double p = 0.5 - hurst.value();
    const double scale = std::pow(grid.step, 1.0 - 2.0 * hurst.value()) / fc.c_h;

    const std::vector<double> phi = detail::midpoint_sources(path, p, sigma);
    std::vector<double> weights(grid.count);
    for (std::size_t m = 1; m <= grid.count; ++m)
        weights[m - 1] = std::pow(static_cast<double>(m) - 0.5, p);

    std::vector<double> conv(grid.count);
    detail::causal_convolution(weights, phi, conv);

    std::vector<double> zeta(grid.points(), 0.0);
    for (std::size_t n = 1; n <= grid.count; ++n)
        zeta[n] = scale * conv[n - 1];
    return MartingaleTrace{grid, std::move(zeta),
                           detail::qv_closed_form(grid, fc.lambda_h, hurst.value())};
}

} // namespace fraccusum
