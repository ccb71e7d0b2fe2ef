#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace fraccusum::detail {

// FFTW plan creation/destruction is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Complex-to-complex DFT workspace for one transform size. Plans use
/// FFTW_ESTIMATE, which picks its algorithm deterministically, so results
/// are bit-identical across runs and threads.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        in_ = fftw_alloc_complex(n);
        out_ = fftw_alloc_complex(n);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    ~FftPlan() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(in_);
        fftw_free(out_);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    std::size_t size() const { return n_; }
    std::complex<double>* in() { return reinterpret_cast<std::complex<double>*>(in_); }
    std::complex<double>* out() { return reinterpret_cast<std::complex<double>*>(out_); }

    void forward() { fftw_execute(fwd_); }
    void backward() { fftw_execute(bwd_); }   // unnormalized

private:
    std::size_t n_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

/// Per-thread plan cache. Each worker reuses its plans across replicates
/// without touching the global planner lock after first use.
inline FftPlan& fft_plan(std::size_t n) {
    thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

/// Lower-triangular discrete convolution out[n] = sum_{j<n} a[n-j] b[j]
/// for n = 1..len, with a indexed 1..len. Zero-padded FFT, O(len log len).
inline void causal_convolution(std::span<const double> a_1based,
                               std::span<const double> b,
                               std::span<double> out_1based) {
    const std::size_t len = b.size();
    std::size_t m = 1;
    while (m < 2 * len) m <<= 1;

    FftPlan& plan = fft_plan(m);
    std::complex<double>* in = plan.in();
    std::complex<double>* out = plan.out();

    // pack a into the real lane and b into the imaginary lane: one forward
    // transform yields both spectra by Hermitian splitting
    for (std::size_t i = 0; i < m; ++i) in[i] = {0.0, 0.0};
    for (std::size_t i = 0; i < len; ++i) in[i + 1].real(a_1based[i]);
    for (std::size_t i = 0; i < len; ++i) in[i].imag(b[i]);
    plan.forward();

    std::vector<std::complex<double>> prod(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::complex<double> fk = out[k];
        const std::complex<double> fmk = std::conj(out[(m - k) % m]);
        const std::complex<double> fa = 0.5 * (fk + fmk);
        const std::complex<double> fb = std::complex<double>(0.0, -0.5) * (fk - fmk);
        prod[k] = fa * fb;
    }
    for (std::size_t k = 0; k < m; ++k) in[k] = prod[k];
    plan.backward();

    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t n = 1; n <= len; ++n)
        out_1based[n - 1] = out[n].real() * scale;
}

} // namespace fraccusum::detail
