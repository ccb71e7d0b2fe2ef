#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "fraccusum/likelihood.hpp"

namespace fraccusum {

/// g(x) = e^{-x} + x - 1, the worst-case K-L detection divergence of the
/// CUSUM rule at threshold x. expm1 keeps the x^2/2 behaviour near 0 intact.
inline double g_fn(double x) {
    if (!(x >= 0.0)) throw std::domain_error("g_fn: x must be >= 0");
    return std::expm1(-x) + x;
}

/// h(x) = e^{x} - x - 1, the K-L false-alarm divergence at threshold x.
inline double h_fn(double x) {
    if (!(x >= 0.0)) throw std::domain_error("h_fn: x must be >= 0");
    return std::expm1(x) - x;
}

struct Threshold {
    double c = 1.0;

    explicit Threshold(double c_) : c(c_) {
        if (!(c > 0.0)) throw std::invalid_argument("Threshold: c must be > 0");
    }
};

struct FalseAlarmBudget {
    double gamma = 1.0;

    explicit FalseAlarmBudget(double gamma_) : gamma(gamma_) {
        if (!(gamma > 0.0)) throw std::invalid_argument("FalseAlarmBudget: gamma must be > 0");
    }
};

/// Solves h(c) = gamma. h is strictly increasing and convex on (0,inf), so
/// Newton from the top of a verified bracket converges monotonically; plain
/// bisection takes over on any iterate that leaves the bracket.
inline Threshold calibrate_threshold(const FalseAlarmBudget& budget) {
    const double gamma = budget.gamma;
    double lo = 0.0;                                    // h(0) = 0 < gamma
    // h(x) >= x^2/2 makes sqrt(2 gamma) an upper bracket; for large gamma
    // log(gamma+2)+5 is far tighter (h there is ~150 gamma)
    double hi = std::min(std::sqrt(2.0 * gamma), std::log(gamma + 2.0) + 5.0);
    while (h_fn(hi) < gamma) hi *= 2.0;

    // the root satisfies c = log(gamma + c + 1), so log(gamma+2) is close
    double x = std::min(hi, std::log(gamma + 2.0));
    const double tol = 1e-13 * gamma;
    for (int it = 0; it < 200; ++it) {
        const double f = h_fn(x) - gamma;
        if (std::abs(f) <= tol) break;
        (f > 0.0 ? hi : lo) = x;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
        const double step = f / std::expm1(x);          // h'(x) = e^x - 1
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return Threshold(x);
}

/// One CUSUM pass over an LLR trace. Crossing is checked at grid points
/// only, so y can land strictly above c; the excess is recorded as
/// overshoot and shows up as upward bias in both operating characteristics.
struct DetectionResult {
    bool stopped = false;
    std::optional<std::size_t> stop_index;
    std::optional<double> stop_time;
    std::optional<double> overshoot;
    std::optional<double> qv_at_stop;
    std::optional<double> u_at_stop;
    std::vector<double> y;             // y_n = u_n - min_{k<=n} u_k >= 0
    std::vector<double> running_min;   // nonincreasing
};

inline DetectionResult cusum_run(const LLRTrace& llr, const Threshold& threshold) {
    const std::size_t points = llr.u.size();
    DetectionResult res;
    res.y.resize(points);
    res.running_min.resize(points);
    double run_min = llr.u[0];
    for (std::size_t n = 0; n < points; ++n) {
        run_min = std::min(run_min, llr.u[n]);
        res.running_min[n] = run_min;
        res.y[n] = llr.u[n] - run_min;
        if (res.y[n] >= threshold.c) {
            res.stopped = true;
            res.stop_index = n;
            res.stop_time = llr.grid.time(n);
            res.overshoot = res.y[n] - threshold.c;
            res.qv_at_stop = llr.qv_u[n];
            res.u_at_stop = llr.u[n];
            res.y.resize(n + 1);
            res.running_min.resize(n + 1);
            break;
        }
    }
    return res;
}

/// Closed-form operating characteristics in the <u> clock:
/// K-L detection divergence g(c) and K-L false-alarm divergence h(c).
inline std::pair<double, double> theoretical_characteristics(const Threshold& threshold) {
    return {g_fn(threshold.c), h_fn(threshold.c)};
}

/// Real-time characteristics for the linear-energy polynomial case
/// alpha = H - 1/2, where <u>_t = kappa t with kappa = theta^2 v_{H,H-1/2}:
/// expected detection delay 2 g(c)/kappa, expected false-alarm period
/// 2 h(c)/kappa.
inline std::pair<double, double> lorden_characteristics_poly(const HurstIndex& hurst,
                                                             double theta,
                                                             const Threshold& threshold) {
    if (theta == 0.0)
        throw std::domain_error("lorden_characteristics_poly: theta must be nonzero");
    const double alpha = hurst.value() - 0.5;
    const double kappa = theta * theta * poly_coefficients(hurst, alpha).v;
    return {2.0 * g_fn(threshold.c) / kappa, 2.0 * h_fn(threshold.c) / kappa};
}

} // namespace fraccusum
