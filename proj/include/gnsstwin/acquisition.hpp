#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "gnsstwin/cacode.hpp"
#include "gnsstwin/constants.hpp"
#include "gnsstwin/fft.hpp"
#include "gnsstwin/synth.hpp"

namespace gnsstwin {

struct AcquisitionResult {
    int prn = 0;
    bool detected = false;
    double code_phase_chips = 0.0;  // incoming code phase at the first sample
    double doppler_hz = 0.0;        // excluding the IF
    double peak_metric = 0.0;       // peak to second peak outside the exclusion zone
};

struct AcquisitionConfig {
    double doppler_span_hz = 10e3;  // searched as [-span, +span]
    double bin_hz = 500.0;
    double threshold = 2.0;
    bool fine_frequency = true;     // 5 ms coherent refinement
};

/// Parallel code-phase search: per Doppler bin, carrier wipeoff and circular
/// correlation via FFT, with noncoherent power summation over the available
/// code periods (capped at 20; power discards data-bit signs), then an
/// optional multi-period phase-slope refinement of the Doppler.
inline AcquisitionResult acquire(const std::complex<double>* x, std::size_t n, double fs,
                                 double f_if_hz, int prn, const AcquisitionConfig& cfg = {}) {
    const auto spc = static_cast<std::size_t>(std::llround(fs * kCaCodePeriodS));
    if (n < 2 * spc) throw std::invalid_argument("acquire: need at least two code periods");
    if (fs < 2.046e6) throw std::invalid_argument("acquire: sample rate below two samples per chip");
    const auto n_bins_half = static_cast<int>(std::llround(cfg.doppler_span_hz / cfg.bin_hz));
    if (std::abs(n_bins_half * cfg.bin_hz - cfg.doppler_span_hz) > 1e-9)
        throw std::invalid_argument("acquire: doppler span must be a multiple of the bin size");

    const auto code = ca_code(prn);
    Fft fft(spc);

    // Sampled one-period replica spectrum, conjugated.
    std::vector<std::complex<double>> replica(spc);
    const double chips_per_sample = kCaChipRateHz / fs;
    for (std::size_t k = 0; k < spc; ++k) {
        const auto idx = static_cast<std::int64_t>(static_cast<double>(k) * chips_per_sample);
        replica[k] = {static_cast<double>(code.chip(idx)), 0.0};
    }
    auto code_spec = fft.forward(replica.data());
    for (auto& v : code_spec) v = std::conj(v);

    const auto& trig = TrigTable::instance();
    std::vector<std::complex<double>> wiped(spc);
    std::vector<double> plane(spc);
    const std::size_t n_seg = std::min<std::size_t>(n / spc, 20);

    double best_power = -1.0;
    double best_doppler = 0.0;
    std::size_t best_lag = 0;
    std::vector<double> best_plane;

    for (int b = -n_bins_half; b <= n_bins_half; ++b) {
        const double fd = b * cfg.bin_hz;
        const double f_total = f_if_hz + fd;
        std::fill(plane.begin(), plane.end(), 0.0);
        for (std::size_t seg = 0; seg < n_seg; ++seg) {
            const std::size_t off = seg * spc;
            for (std::size_t k = 0; k < spc; ++k) {
                double c, s;
                trig.sincos(f_total * static_cast<double>(off + k) / fs, c, s);
                wiped[k] = x[off + k] * std::complex<double>(c, -s);
            }
            auto spec = fft.forward(wiped.data());
            for (std::size_t k = 0; k < spc; ++k) spec[k] *= code_spec[k];
            const auto corr = fft.inverse(spec.data());
            for (std::size_t k = 0; k < spc; ++k) plane[k] += std::norm(corr[k]);
        }
        const auto it = std::max_element(plane.begin(), plane.end());
        if (*it > best_power) {
            best_power = *it;
            best_doppler = fd;
            best_lag = static_cast<std::size_t>(it - plane.begin());
            best_plane = plane;
        }
    }

    // Peak-to-second-peak metric, excluding +/-1 chip around the main peak.
    const auto excl = static_cast<std::ptrdiff_t>(std::ceil(fs / kCaChipRateHz));
    double second = 0.0;
    for (std::size_t k = 0; k < spc; ++k) {
        auto dist = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(best_lag);
        if (dist > static_cast<std::ptrdiff_t>(spc / 2)) dist -= static_cast<std::ptrdiff_t>(spc);
        if (dist < -static_cast<std::ptrdiff_t>(spc / 2)) dist += static_cast<std::ptrdiff_t>(spc);
        if (std::abs(dist) <= excl) continue;
        second = std::max(second, best_plane[k]);
    }

    AcquisitionResult out;
    out.prn = prn;
    out.peak_metric = (second > 0.0) ? best_power / second : 1e9;
    out.detected = out.peak_metric >= cfg.threshold;
    // Lag L means the replica shifted by L matches: the incoming code phase
    // at sample 0 is the code index at -L samples.
    const double lag_chips = static_cast<double>(best_lag) * chips_per_sample;
    out.code_phase_chips = std::fmod(static_cast<double>(kCaCodeLength) - lag_chips +
                                         static_cast<double>(kCaCodeLength),
                                     static_cast<double>(kCaCodeLength));
    out.doppler_hz = best_doppler;
    if (!out.detected) return out;

    // Fine frequency: phase slope of coherent prompts over consecutive code
    // periods; pair products are squared so data-bit flips drop out.
    const std::size_t n_coh = std::min<std::size_t>(n / spc, 6);
    if (cfg.fine_frequency && n_coh >= 3) {
        std::vector<std::complex<double>> prompts;
        for (std::size_t seg = 0; seg < n_coh; ++seg) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t k = 0; k < spc; ++k) {
                const std::size_t si = seg * spc + k;
                const auto idx =
                    static_cast<std::int64_t>(static_cast<double>(si) * chips_per_sample +
                                              out.code_phase_chips) ;
                double c, s;
                trig.sincos((f_if_hz + out.doppler_hz) * static_cast<double>(si) / fs, c, s);
                acc += x[si] * std::complex<double>(c, -s) * static_cast<double>(code.chip(idx));
            }
            prompts.push_back(acc);
        }
        std::complex<double> rot{0.0, 0.0};
        for (std::size_t m = 0; m + 1 < prompts.size(); ++m) {
            const auto p = prompts[m + 1] * std::conj(prompts[m]);
            rot += p * p;  // squared: data-insensitive
        }
        const double delta = std::arg(rot) / 2.0 / (kTwoPi * kCaCodePeriodS);
        if (std::abs(delta) <= cfg.bin_hz / 2.0 + 1.0) out.doppler_hz += delta;
    }
    return out;
}

}  // namespace gnsstwin
