#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fraccusum/drift.hpp"
#include "fraccusum/errors.hpp"
#include "fraccusum/fft.hpp"
#include "fraccusum/grid.hpp"
#include "fraccusum/transform.hpp"
#include "fraccusum/volatility.hpp"

namespace fraccusum {

/// Closed-form polynomial-drift coefficients:
///   d = [Gamma(3-2H) Gamma(3/2-H+a)] / [Gamma(3-2H+a) Gamma(3/2-H)]
///       * (2-2H+a)/(2-2H)
///   v = d^2 / lambda_H * (1-H)/(1-H+a)
struct PolyCoefficients {
    double d = 1.0;
    double v = 1.0;
};

inline PolyCoefficients poly_coefficients(const HurstIndex& hurst, double alpha) {
    const double h = hurst.value();
    if (!(1.5 - h + alpha > 0.0) || !(3.0 - 2.0 * h + alpha > 0.0))
        throw std::domain_error("poly_coefficients: Gamma argument must be positive");
    PolyCoefficients pc;
    pc.d = std::tgamma(3.0 - 2.0 * h) * std::tgamma(1.5 - h + alpha) /
           (std::tgamma(3.0 - 2.0 * h + alpha) * std::tgamma(1.5 - h)) *
           (2.0 - 2.0 * h + alpha) / (2.0 - 2.0 * h);
    pc.v = pc.d * pc.d / frac_constants(hurst).lambda_h * (1.0 - h) / (1.0 - h + alpha);
    return pc;
}

/// Drift-to-noise trace Q at the grid times. For exponents alpha < 0 the
/// continuous Q diverges at the origin; the trace then records 0 at t_0 and
/// flags it, leaving a documented O(step^{..}) undercount in the first
/// integration cell rather than an infinity.
struct QTrace {
    Grid grid;
    std::vector<double> q;
    bool singular_origin = false;
};

/// Q_t = theta * d_{H,alpha} * t^alpha for the polynomial drift family.
inline QTrace q_process_poly(const HurstIndex& hurst, double theta, double alpha,
                             const Grid& grid) {
    const double d = poly_coefficients(hurst, alpha).d;
    QTrace out{grid, std::vector<double>(grid.points(), 0.0), alpha < 0.0};
    for (std::size_t n = 1; n <= grid.count; ++n)
        out.q[n] = theta * d * std::pow(grid.time(n), alpha);
    out.q[0] = alpha == 0.0 ? theta * d : 0.0;
    return out;
}

namespace detail {

inline constexpr std::size_t kPsiBottomCells = 16;

/// psi(t_n) ~= int_0^{t_n} k_H(t_n,s) mu_s / sigma(s) ds for all n, in
/// O(n log n). The (t-s)^{1/2-H} factor is integrated exactly across each
/// cell (it is singular at s = t for H > 1/2, where a plain midpoint value
/// leaves an O(step^{3/2-H}) boundary layer that survives the clock
/// differencing); the remaining factor is evaluated at cell midpoints. The
/// first kPsiBottomCells cells get the mirrored treatment for the s^{1/2-H}
/// factor, singular at s = 0.
inline std::vector<double> psi_quadrature(const Grid& grid, const HurstIndex& hurst,
                                          const std::vector<double>& mu_over_sigma_mid) {
    const std::size_t n = grid.count;
    const double p = 0.5 - hurst.value();
    const double scale = std::pow(grid.step, 2.0 - 2.0 * hurst.value()) /
                         frac_constants(hurst).c_h;

    std::vector<double> weights(n);
    for (std::size_t m = 1; m <= n; ++m)
        weights[m - 1] = (std::pow(static_cast<double>(m), p + 1.0) -
                          std::pow(static_cast<double>(m - 1), p + 1.0)) / (p + 1.0);
    std::vector<double> phi(n);
    for (std::size_t j = 0; j < n; ++j)
        phi[j] = std::pow(static_cast<double>(j) + 0.5, p) * mu_over_sigma_mid[j];

    std::vector<double> conv(n);
    causal_convolution(weights, phi, conv);

    const std::size_t kbot = std::min(kPsiBottomCells, n);
    std::vector<double> bottom_delta(kbot);
    for (std::size_t j = 0; j < kbot; ++j) {
        const double cell_integral = (std::pow(static_cast<double>(j + 1), p + 1.0) -
                                      std::pow(static_cast<double>(j), p + 1.0)) / (p + 1.0);
        bottom_delta[j] = (cell_integral - std::pow(static_cast<double>(j) + 0.5, p)) *
                          mu_over_sigma_mid[j];
    }

    std::vector<double> psi(grid.points(), 0.0);
    for (std::size_t nn = 1; nn <= n; ++nn) {
        double corr = 0.0;
        for (std::size_t j = 0; j < std::min(kbot, nn); ++j)
            corr += bottom_delta[j] *
                    std::pow(static_cast<double>(nn - j) - 0.5, p);
        psi[nn] = scale * (conv[nn - 1] + corr);
    }
    return psi;
}

} // namespace detail

/**
 * Q from quadrature: psi(t_n) as above, differenced in the <zeta> clock.
 * Deterministic drifts use the central stencil, which attributes the
 * difference quotient at t_n itself; state-dependent drifts must stay
 * adapted (Q_{t_n} may not look past t_n, or the stochastic integral in the
 * log-likelihood acquires a bias), so they use the backward stencil.
 */
inline QTrace q_process_numeric(const DriftSpec& drift, const SamplePath& path,
                                const HurstIndex& hurst, const VolatilitySpec& sigma) {
    const Grid& grid = path.grid;
    const std::size_t n = grid.count;

    std::vector<double> mu_mid(n);
    bool all_zero = true;
    for (std::size_t j = 0; j < n; ++j) {
        const double mu = drift.state_dependent()
                              ? drift.b(0.5 * (path.values[j] + path.values[j + 1]))
                              : drift.mu_time((static_cast<double>(j) + 0.5) * grid.step);
        mu_mid[j] = mu / sigma.at_midpoint(grid, j);
        all_zero = all_zero && mu_mid[j] == 0.0;
    }
    if (all_zero) return QTrace{grid, std::vector<double>(grid.points(), 0.0), false};

    const std::vector<double> psi = detail::psi_quadrature(grid, hurst, mu_mid);
    const std::vector<double> qv =
        detail::qv_closed_form(grid, frac_constants(hurst).lambda_h, hurst.value());

    QTrace out{grid, std::vector<double>(grid.points(), 0.0), false};
    if (drift.state_dependent()) {
        for (std::size_t k = 1; k <= n; ++k)
            out.q[k] = (psi[k] - psi[k - 1]) / (qv[k] - qv[k - 1]);
    } else {
        for (std::size_t k = 1; k < n; ++k)
            out.q[k] = (psi[k + 1] - psi[k - 1]) / (qv[k + 1] - qv[k - 1]);
        out.q[n] = (psi[n] - psi[n - 1]) / (qv[n] - qv[n - 1]);
    }
    out.q[0] = out.q[1];
    return out;
}

/// Log-likelihood ratio trace u and its accumulated quadratic variation.
struct LLRTrace {
    Grid grid;
    std::vector<double> u;      // u[0] = 0
    std::vector<double> qv_u;   // nondecreasing, qv_u[0] = 0
};

/// u_n = sum_{j<n} Q_j (zeta_{j+1} - zeta_j) - 1/2 sum_{j<n} Q_j^2 dqv_j.
/// Left-point evaluation: zeta is the P_infinity martingale, so the Ito
/// (non-anticipating) sum is the consistent discretization.
inline LLRTrace llr_trace(const QTrace& q, const MartingaleTrace& m) {
    if (!(q.grid == m.grid))
        throw GridMismatchError("llr_trace: Q and martingale traces disagree on the grid");
    const std::size_t n = q.grid.count;
    LLRTrace out{q.grid, std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
    double u_acc = 0.0;
    double qv_acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dz = m.zeta[j + 1] - m.zeta[j];
        const double dqv = m.qv[j + 1] - m.qv[j];
        const double qj = q.q[j];
        u_acc += qj * dz - 0.5 * qj * qj * dqv;
        qv_acc += qj * qj * dqv;
        out.u[j + 1] = u_acc;
        out.qv_u[j + 1] = qv_acc;
    }
    return out;
}

/// Accumulated detection energy int_0^t Q^2 d<zeta> = theta^2 v_{H,alpha}
/// t^{2-2H+2alpha} for polynomial drift. Requires alpha > H-1, the full
/// energy condition; below it the integral is not even finite-growing and
/// the detector loses its optimality guarantee.
inline double energy_growth(const HurstIndex& hurst, double theta, double alpha, double t) {
    if (!(alpha > hurst.value() - 1.0))
        throw std::domain_error("energy_growth: alpha must exceed H - 1");
    const PolyCoefficients pc = poly_coefficients(hurst, alpha);
    return theta * theta * pc.v * std::pow(t, 2.0 - 2.0 * hurst.value() + 2.0 * alpha);
}

} // namespace fraccusum
