#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace gnsstwin {

/// RAII wrapper over FFTW complex transforms of one fixed length. Plan
/// creation is serialized (FFTW requirement); execution is per-object.
class Fft {
  public:
    explicit Fft(std::size_t n) : n_(n), in_(n), out_(n) {
        if (n == 0) throw std::invalid_argument("Fft: zero length");
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf(in_), buf(out_), FFTW_FORWARD, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_1d(static_cast<int>(n), buf(in_), buf(out_), FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    ~Fft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }

    std::vector<std::complex<double>> forward(const std::complex<double>* x) {
        std::copy(x, x + n_, in_.begin());
        fftw_execute(fwd_);
        return out_;
    }

    /// Unnormalized inverse (FFTW convention); divide by n for the identity.
    std::vector<std::complex<double>> inverse(const std::complex<double>* x) {
        std::copy(x, x + n_, in_.begin());
        fftw_execute(inv_);
        return out_;
    }

  private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
    static fftw_complex* buf(std::vector<std::complex<double>>& v) {
        return reinterpret_cast<fftw_complex*>(v.data());
    }

    std::size_t n_;
    std::vector<std::complex<double>> in_, out_;
    fftw_plan fwd_{}, inv_{};
};

}  // namespace gnsstwin
