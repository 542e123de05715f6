#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnsstwin/constants.hpp"
#include "gnsstwin/synth.hpp"

namespace gnsstwin {

struct InterferenceSpec {
    enum class Kind { chirp, cwi, fmcw, pulse };
    Kind kind = Kind::cwi;
    double amplitude = 0.0;    // sqrt(W); may be derived from jsr_db upstream
    double f0_hz = 0.0;        // chirp start frequency
    double sweep_hz_s = 0.0;   // chirp rate k
    double f_i_hz = 0.0;       // cwi/fmcw/pulse tone frequency
    double phase_rad = 0.0;
    double beta_rad = 0.0;     // fmcw modulation depth
    double f_m_hz = 0.0;       // fmcw modulation rate
    double pulse_width_s = 0.0;
    double pulse_period_s = 0.0;
    double start_s = 0.0;      // active window, relative to scenario start
    double stop_s = 1e30;

    void validate(double fs) const {
        if (amplitude < 0.0) throw std::invalid_argument("interference amplitude must be >= 0");
        if (stop_s <= start_s) throw std::invalid_argument("interference stop must follow start");
        if (kind == Kind::pulse) {
            if (!(pulse_width_s > 0.0) || !(pulse_period_s > pulse_width_s))
                throw std::invalid_argument("pulse width must be positive and below the period");
        }
        if (kind == Kind::chirp) {
            const double span = std::min(stop_s - start_s, 1e6);
            const double f_end = f0_hz + sweep_hz_s * span;
            if (std::abs(f0_hz) > fs / 2.0 || std::abs(f_end) > fs / 2.0)
                throw std::invalid_argument("chirp sweeps outside the sampled band");
        }
        if (kind == Kind::fmcw && f_m_hz <= 0.0 && beta_rad != 0.0)
            throw std::invalid_argument("fmcw modulation rate must be positive");
    }
};

/// Adds the interference waveform to `out` for n samples whose first sample
/// sits t_offset_s after the scenario start. Phase is a closed form of
/// absolute time, so any block partition emits identical samples.
inline void gen_interference(const InterferenceSpec& spec, double t_offset_s,
                             std::complex<double>* out, std::size_t n, double fs) {
    spec.validate(fs);
    const auto& trig = TrigTable::instance();
    const double inv_fs = 1.0 / fs;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t_offset_s + static_cast<double>(k) * inv_fs;
        if (t < spec.start_s || t >= spec.stop_s) continue;
        const double ta = t - spec.start_s;  // time inside the active window
        double cycles = 0.0;
        double amp = spec.amplitude;
        switch (spec.kind) {
            case InterferenceSpec::Kind::chirp:
                cycles = spec.f0_hz * ta + 0.5 * spec.sweep_hz_s * ta * ta + spec.phase_rad / kTwoPi;
                break;
            case InterferenceSpec::Kind::cwi:
                cycles = spec.f_i_hz * ta + spec.phase_rad / kTwoPi;
                break;
            case InterferenceSpec::Kind::fmcw: {
                double cm, sm;
                trig.sincos(spec.f_m_hz * ta, cm, sm);
                cycles = spec.f_i_hz * ta + spec.beta_rad * sm / kTwoPi + spec.phase_rad / kTwoPi;
                break;
            }
            case InterferenceSpec::Kind::pulse: {
                const double in_period = std::fmod(ta, spec.pulse_period_s);
                if (in_period >= spec.pulse_width_s) amp = 0.0;
                cycles = spec.f_i_hz * ta + spec.phase_rad / kTwoPi;
                break;
            }
        }
        if (amp == 0.0) continue;
        double c, s;
        trig.sincos(cycles, c, s);
        out[k] += std::complex<double>(amp * c, amp * s);
    }
}

struct MultipathPath {
    double alpha = 0.0;          // amplitude ratio vs direct
    double excess_delay_s = 0.0; // > 0
    double phase_rad = 0.0;      // reflected carrier phase offset
    double delay_ramp_sps = 0.0; // optional drift of the excess delay
};

struct MultipathSpec {
    int prn = 0;
    std::vector<MultipathPath> paths;

    void validate() const {
        if (paths.size() > 8) throw std::invalid_argument("multipath: more than 8 paths per PRN");
        for (const auto& p : paths) {
            if (!(p.alpha >= 0.0 && p.alpha <= 1.0))
                throw std::invalid_argument("multipath: alpha must be in [0, 1]");
            if (!(p.excess_delay_s > 0.0))
                throw std::invalid_argument("multipath: excess delay must be positive");
        }
    }
};

/// Replica channel truth for one reflected path: same modulation mechanics
/// as the direct ray, with the code/carrier timeline shifted by the excess
/// delay (and its ramp) and the amplitude scaled by alpha.
inline ChannelTruth make_multipath_truth(const ChannelTruth& direct, const MultipathPath& path) {
    ChannelTruth mp = direct;
    mp.code_chips0 -= path.excess_delay_s * kCaChipRateHz;
    mp.carrier_cycles0 += -kL1Hz * path.excess_delay_s + path.phase_rad / kTwoPi;
    for (auto& a : mp.amplitude) a *= path.alpha;
    if (path.delay_ramp_sps != 0.0) {
        for (auto& r : mp.code_rate_cps) r -= path.delay_ramp_sps * kCaChipRateHz;
        for (auto& f : mp.carrier_freq_hz) f -= path.delay_ramp_sps * kL1Hz;
    }
    return mp;
}

}  // namespace gnsstwin
