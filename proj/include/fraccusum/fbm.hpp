#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "fraccusum/errors.hpp"
#include "fraccusum/fft.hpp"
#include "fraccusum/grid.hpp"
#include "fraccusum/rng.hpp"

namespace fraccusum {

/// Autocovariance of fractional Gaussian noise increments on a uniform grid:
/// gamma(k) = (step^{2H}/2) * (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
inline double fgn_autocovariance(const HurstIndex& hurst, std::size_t lag, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("fgn_autocovariance: step must be > 0");
    const double two_h = 2.0 * hurst.value();
    const double k = static_cast<double>(lag);
    const double up = std::pow(k + 1.0, two_h);
    const double mid = 2.0 * std::pow(k, two_h);
    const double down = std::pow(std::abs(k - 1.0), two_h);
    return 0.5 * std::pow(step, two_h) * (up - mid + down);
}

/**
 * Exact fGn sampler by circulant embedding (spectral method), O(n log n)
 * per path after an O(n log n) setup.
 *
 * The covariance circulant of size 2n is nonnegative definite for fGn at
 * every H in (0,1); the PSD check below only guards floating-point noise,
 * clamping eigenvalues above -1e-8 * max to zero and refusing anything
 * worse.
 */
class FgnSampler {
public:
    FgnSampler(const HurstIndex& hurst, const Grid& grid)
        : grid_(grid), m_(2 * grid.count) {
        const std::size_t n = grid_.count;
        std::vector<double> circ(m_);
        for (std::size_t k = 0; k <= n; ++k)
            circ[k] = fgn_autocovariance(hurst, k, grid_.step);
        for (std::size_t k = 1; k < n; ++k)
            circ[m_ - k] = circ[k];

        detail::FftPlan& plan = detail::fft_plan(m_);
        for (std::size_t i = 0; i < m_; ++i) plan.in()[i] = {circ[i], 0.0};
        plan.forward();

        double max_ev = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            max_ev = std::max(max_ev, plan.out()[i].real());
        sqrt_ev_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            const double ev = plan.out()[i].real();
            if (ev < -1e-8 * max_ev)
                throw EmbeddingNotPsdError("FgnSampler: circulant eigenvalue below PSD tolerance");
            sqrt_ev_[i] = std::sqrt(std::max(ev, 0.0));
        }
    }

    const Grid& grid() const { return grid_; }

    /// n fGn increments with autocovariance fgn_autocovariance. Reentrant.
    std::vector<double> sample_increments(Seed seed) const {
        const std::size_t n = grid_.count;
        Pcg64 rng(seed);
        std::vector<double> z(m_);
        fill_standard_normal(rng, z);

        detail::FftPlan& plan = detail::fft_plan(m_);
        std::complex<double>* w = plan.in();
        const double inv_sqrt2 = 0.70710678118654752440;
        w[0] = {sqrt_ev_[0] * z[0], 0.0};
        w[n] = {sqrt_ev_[n] * z[1], 0.0};
        for (std::size_t k = 1; k < n; ++k) {
            const double re = sqrt_ev_[k] * inv_sqrt2 * z[2 * k];
            const double im = sqrt_ev_[k] * inv_sqrt2 * z[2 * k + 1];
            w[k] = {re, im};
            w[m_ - k] = {re, -im};
        }
        plan.forward();

        const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
        std::vector<double> incr(n);
        for (std::size_t j = 0; j < n; ++j)
            incr[j] = plan.out()[j].real() * scale;
        return incr;
    }

    SamplePath sample(Seed seed) const {
        return path_from_increments(grid_, sample_increments(seed));
    }

    static SamplePath path_from_increments(const Grid& grid, const std::vector<double>& incr) {
        std::vector<double> values(grid.points());
        values[0] = 0.0;
        for (std::size_t j = 0; j < grid.count; ++j)
            values[j + 1] = values[j] + incr[j];
        return SamplePath(grid, std::move(values));
    }

private:
    Grid grid_;
    std::size_t m_;
    std::vector<double> sqrt_ev_;
};

/**
 * Dense Cholesky sampler over the increment covariance matrix. O(n^3) setup,
 * O(n^2) per path; the cross-validation oracle for FgnSampler, guarded to
 * n <= 4096.
 */
class FbmExactSampler {
public:
    static constexpr std::size_t kMaxCount = 4096;

    FbmExactSampler(const HurstIndex& hurst, const Grid& grid) : grid_(grid) {
        const std::size_t n = grid.count;
        if (n > kMaxCount)
            throw SizeLimitExceededError("FbmExactSampler: grid.count exceeds 4096");
        std::vector<double> gamma(n);
        for (std::size_t k = 0; k < n; ++k)
            gamma[k] = fgn_autocovariance(hurst, k, grid.step);

        // lower-triangular Cholesky of the Toeplitz covariance
        chol_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double sum = gamma[i - j];
                for (std::size_t k = 0; k < j; ++k)
                    sum -= chol_[i * n + k] * chol_[j * n + k];
                if (i == j) {
                    if (!(sum > 0.0))
                        throw std::runtime_error("FbmExactSampler: covariance not positive definite");
                    chol_[i * n + i] = std::sqrt(sum);
                } else {
                    chol_[i * n + j] = sum / chol_[j * n + j];
                }
            }
        }
    }

    const Grid& grid() const { return grid_; }

    std::vector<double> sample_increments(Seed seed) const {
        const std::size_t n = grid_.count;
        Pcg64 rng(seed);
        std::vector<double> z(n);
        fill_standard_normal(rng, z);
        std::vector<double> incr(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= i; ++k)
                acc += chol_[i * n + k] * z[k];
            incr[i] = acc;
        }
        return incr;
    }

    SamplePath sample(Seed seed) const {
        return FgnSampler::path_from_increments(grid_, sample_increments(seed));
    }

private:
    Grid grid_;
    std::vector<double> chol_;
};

/// One-shot circulant sample (builds the spectrum each call; use FgnSampler
/// directly to amortize over replicates).
inline SamplePath sample_fbm(const HurstIndex& hurst, const Grid& grid, Seed seed) {
    return FgnSampler(hurst, grid).sample(seed);
}

/// One-shot Cholesky oracle sample.
inline SamplePath sample_fbm_exact(const HurstIndex& hurst, const Grid& grid, Seed seed) {
    return FbmExactSampler(hurst, grid).sample(seed);
}

/**
 * Superimposes the post-change drift on a noise path. Only tau = 0 and
 * tau = infinity are representable: the closed-form identities under test
 * need exactly these two laws, and gluing an intermediate change point onto
 * a non-Markov path is outside scope.
 *
 * Polynomial drift integrates in closed form; state-dependent drift builds
 * the diffusion-type path by explicit Euler along the realized noise, with
 * step refinement as the accuracy control.
 */
inline SamplePath inject_drift(const SamplePath& path, const DriftSpec& drift, double tau) {
    if (tau == kTauInfinity) {
        SamplePath out = path;
        out.change_point = kTauInfinity;
        out.drift = drift;
        return out;
    }
    if (tau != 0.0)
        throw UnsupportedTauError("inject_drift: tau must be 0 or infinity");

    const Grid& grid = path.grid;
    std::vector<double> values(grid.points());
    values[0] = 0.0;
    if (!drift.state_dependent()) {
        for (std::size_t j = 1; j <= grid.count; ++j)
            values[j] = path.values[j] + drift.integral_time(grid.time(j));
    } else {
        for (std::size_t j = 0; j < grid.count; ++j) {
            const double noise_incr = path.values[j + 1] - path.values[j];
            values[j + 1] = values[j] + drift.b(values[j]) * grid.step + noise_incr;
        }
    }
    SamplePath out(grid, std::move(values));
    out.change_point = 0.0;
    out.drift = drift;
    return out;
}

} // namespace fraccusum
