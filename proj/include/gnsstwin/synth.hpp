#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "gnsstwin/cacode.hpp"
#include "gnsstwin/constants.hpp"
#include "gnsstwin/gps_time.hpp"
#include "gnsstwin/lnav.hpp"

namespace gnsstwin {

/// sin/cos of 2*pi*cycles via a linearly interpolated table; max error is
/// about 1.2e-9, far below every quantization and tracking tolerance, and
/// roughly 4x faster than libm on the synthesis hot path.
class TrigTable {
  public:
    static const TrigTable& instance() {
        static const TrigTable table;
        return table;
    }

    void sincos(double cycles, double& c, double& s) const {
        double frac = cycles - std::floor(cycles);
        double x = frac * kSize;
        const int i = static_cast<int>(x);
        const double u = x - i;
        c = cos_[i] + u * (cos_[i + 1] - cos_[i]);
        s = sin_[i] + u * (sin_[i + 1] - sin_[i]);
    }

  private:
    static constexpr int kSize = 1 << 16;
    std::vector<double> cos_, sin_;

    TrigTable() : cos_(kSize + 1), sin_(kSize + 1) {
        for (int i = 0; i <= kSize; ++i) {
            const double ang = kTwoPi * i / kSize;
            cos_[i] = std::cos(ang);
            sin_[i] = std::sin(ang);
        }
    }
};

/// A contiguous run of complex baseband samples.
struct IqBlock {
    std::vector<std::complex<double>> samples;
    double fs = 0.0;
    GpsTime epoch;       // time of the first sample
    double scale = 1.0;  // full-scale amplitude hint for quantization

    std::size_t size() const { return samples.size(); }
};

/// Per-satellite truth dynamics sampled on the (typically 100 Hz) truth
/// grid: rates are linearly interpolated inside each segment, so phases are
/// quadratic. Phase anchors refer to sample index 0 of the scenario.
struct ChannelTruth {
    int prn = 0;
    double rate_hz = 100.0;                 // truth grid rate
    std::vector<double> code_rate_cps;      // chips/s at grid points
    std::vector<double> carrier_freq_hz;    // full NCO frequency (IF + effective Doppler)
    std::vector<double> amplitude;          // sqrt(W) at grid points
    double code_chips0 = 0.0;               // absolute chips past the nav-message origin at sample 0
    double carrier_cycles0 = 0.0;           // absolute carrier cycles at sample 0

    std::size_t segments() const { return code_rate_cps.empty() ? 0 : code_rate_cps.size() - 1; }
};

/// Sequential synthesis cursor for one satellite channel. Segment anchors
/// (not block anchors) carry the phase, so a block boundary placed anywhere
/// inside a segment produces bit-identical samples.
struct ChannelState {
    int prn = 0;
    std::int64_t next_sample = 0;        // next scenario sample index to render
    std::ptrdiff_t segment = -1;         // current truth segment
    std::int64_t segment_start_sample = 0;
    double segment_code_chips = 0.0;     // absolute chips at segment start
    double segment_carrier_cycles = 0.0; // absolute cycles at segment start

    // Observability mirrors, updated at block ends.
    double code_phase_chips = 0.0;   // in [0, 1023)
    double carrier_phase_cycles = 0.0;  // in [0, 1)
    double doppler_hz = 0.0;
    double doppler_rate_hz_s = 0.0;
    double amplitude = 0.0;
    std::int64_t data_bit_index = 0;
};

inline ChannelState make_channel_state(const ChannelTruth& truth) {
    ChannelState st;
    st.prn = truth.prn;
    st.next_sample = 0;
    st.segment = -1;
    return st;
}

/// Renders n samples starting at state.next_sample into `out` (adding to the
/// existing content). The caller owns block slicing; any partition of the
/// sample axis yields identical values.
inline void synthesize_channel_block(ChannelState& state, const ChannelTruth& truth,
                                     const SpreadingCode& code, const NavMessage& nav,
                                     std::complex<double>* out, std::size_t n, double fs) {
    if (truth.segments() == 0) throw std::invalid_argument("channel truth has no segments");
    const double samples_per_segment = fs / truth.rate_hz;
    const double inv_fs = 1.0 / fs;
    const auto& trig = TrigTable::instance();

    auto segment_first_sample = [&](std::ptrdiff_t seg) {
        return static_cast<std::int64_t>(std::ceil(static_cast<double>(seg) * samples_per_segment));
    };

    std::int64_t i = state.next_sample;
    const std::int64_t end = i + static_cast<std::int64_t>(n);
    std::size_t out_idx = 0;

    while (i < end) {
        // Enter the segment containing sample i, advancing anchors one
        // segment at a time so every partition takes the same path.
        if (state.segment < 0) {
            state.segment = 0;
            state.segment_start_sample = 0;
            state.segment_code_chips = truth.code_chips0;
            state.segment_carrier_cycles = truth.carrier_cycles0;
        }
        while (i >= segment_first_sample(state.segment + 1)) {
            const auto seg = static_cast<std::size_t>(state.segment);
            if (seg + 2 > truth.segments())
                throw std::runtime_error("channel truth ends inside the requested block");
            const std::int64_t s0 = state.segment_start_sample;
            const std::int64_t s1 = segment_first_sample(state.segment + 1);
            const double seg_dt = 1.0 / truth.rate_hz;
            const double dt = static_cast<double>(s1 - s0) * inv_fs;
            const double cr0 = truth.code_rate_cps[seg];
            const double crr = (truth.code_rate_cps[seg + 1] - cr0) / seg_dt;
            const double cf0 = truth.carrier_freq_hz[seg];
            const double cfr = (truth.carrier_freq_hz[seg + 1] - cf0) / seg_dt;
            state.segment_code_chips += dt * (cr0 + 0.5 * crr * dt);
            state.segment_carrier_cycles += dt * (cf0 + 0.5 * cfr * dt);
            state.segment_start_sample = s1;
            ++state.segment;
        }

        const auto seg = static_cast<std::size_t>(state.segment);
        if (seg + 1 > truth.segments())
            throw std::runtime_error("channel truth ends inside the requested block");
        const std::int64_t seg_end_sample = segment_first_sample(state.segment + 1);
        const std::int64_t stop = std::min(end, seg_end_sample);

        const double seg_dt = 1.0 / truth.rate_hz;
        const double cr0 = truth.code_rate_cps[seg];
        const double crr = (truth.code_rate_cps[seg + 1] - cr0) / seg_dt;
        const double cf0 = truth.carrier_freq_hz[seg];
        const double cfr = (truth.carrier_freq_hz[seg + 1] - cf0) / seg_dt;
        const double a0 = truth.amplitude[seg];
        const double ar = (truth.amplitude[seg + 1] - a0) / seg_dt;
        const std::int64_t s0 = state.segment_start_sample;

        // Chip/bit walkers, initialized from the segment anchor.
        const double cp_start = state.segment_code_chips +
                                static_cast<double>(i - s0) * inv_fs *
                                    (cr0 + 0.5 * crr * static_cast<double>(i - s0) * inv_fs);
        if (cp_start < 0.0)
            throw std::runtime_error("code phase before nav-message origin; widen the lead-in");
        auto chip_abs = static_cast<std::int64_t>(cp_start);
        int code_idx = static_cast<int>(chip_abs % kCaCodeLength);
        auto bit_idx = static_cast<std::int64_t>(chip_abs / kChipsPerBit);
        int chips_in_bit = static_cast<int>(chip_abs % kChipsPerBit);
        double next_chip = static_cast<double>(chip_abs + 1);

        // Bounds: the last bit this segment can touch must exist.
        const double cp_seg_end = state.segment_code_chips +
                                  (static_cast<double>(seg_end_sample - s0) * inv_fs) *
                                      (cr0 + 0.5 * crr * static_cast<double>(seg_end_sample - s0) * inv_fs);
        if (static_cast<std::int64_t>(cp_seg_end / kChipsPerBit) >=
            static_cast<std::int64_t>(nav.bits.size()))
            throw std::runtime_error("nav message too short for the requested block");

        for (; i < stop; ++i, ++out_idx) {
            const double dt = static_cast<double>(i - s0) * inv_fs;
            const double cp = state.segment_code_chips + dt * (cr0 + 0.5 * crr * dt);
            const double ph = state.segment_carrier_cycles + dt * (cf0 + 0.5 * cfr * dt);
            while (cp >= next_chip) {
                next_chip += 1.0;
                if (++code_idx == kCaCodeLength) code_idx = 0;
                if (++chips_in_bit == kChipsPerBit) {
                    chips_in_bit = 0;
                    ++bit_idx;
                }
            }
            const double symbol =
                static_cast<double>(code.chips[static_cast<std::size_t>(code_idx)] *
                                    nav.bits[static_cast<std::size_t>(bit_idx)]);
            const double amp = a0 + ar * dt;
            double c, s;
            trig.sincos(ph, c, s);
            out[out_idx] += std::complex<double>(amp * symbol * c, amp * symbol * s);
        }

        // Refresh the observability mirrors at the cursor.
        const double dt = static_cast<double>(i - s0) * inv_fs;
        const double cp = state.segment_code_chips + dt * (cr0 + 0.5 * crr * dt);
        const double ph = state.segment_carrier_cycles + dt * (cf0 + 0.5 * cfr * dt);
        state.code_phase_chips = std::fmod(cp, static_cast<double>(kCaCodeLength));
        state.carrier_phase_cycles = ph - std::floor(ph);
        state.doppler_hz = cf0 + cfr * dt;
        state.doppler_rate_hz_s = cfr;
        state.amplitude = a0 + ar * dt;
        state.data_bit_index = static_cast<std::int64_t>(cp / kChipsPerBit);
    }
    state.next_sample = end;
}

/// Samplewise sum of channel contributions plus circular complex AWGN of
/// total variance n0 * fs. The generator is consumed sequentially, so a
/// fixed seed gives a bit-identical stream.
inline IqBlock mix_and_noise(const std::vector<IqBlock>& contributions, double n0_w_hz, double fs,
                             std::mt19937_64& rng) {
    IqBlock out;
    out.fs = fs;
    if (!contributions.empty()) {
        out.epoch = contributions.front().epoch;
        out.samples.assign(contributions.front().size(), {0.0, 0.0});
        for (const auto& c : contributions) {
            if (c.size() != out.size() || c.fs != fs || std::abs(c.epoch - out.epoch) > 1e-12)
                throw std::invalid_argument("mix_and_noise: mismatched block metadata");
            for (std::size_t k = 0; k < out.size(); ++k) out.samples[k] += c.samples[k];
        }
    }
    if (n0_w_hz > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(n0_w_hz * fs / 2.0));
        for (auto& v : out.samples) v += std::complex<double>(gauss(rng), gauss(rng));
    }
    return out;
}

struct QuantizedIq {
    int bits = 8;
    double scale = 1.0;          // input amplitude mapped to full scale
    std::int64_t clipped = 0;    // saturated component count
    std::vector<std::int8_t> data8;    // interleaved I,Q (8-bit mode)
    std::vector<std::int16_t> data16;  // interleaved I,Q (16-bit mode)
};

/// Scales so full_scale_sigma * sigma maps to full scale, then rounds and
/// saturates. sigma_override pins the scale across a streamed file; when
/// zero, sigma is measured from the block itself.
inline QuantizedIq quantize_iq(const IqBlock& block, int bits, double full_scale_sigma = 3.0,
                               double sigma_override = 0.0) {
    if (bits != 8 && bits != 16) throw std::invalid_argument("quantize_iq: bits must be 8 or 16");
    if (!(full_scale_sigma > 0.0))
        throw std::invalid_argument("quantize_iq: full_scale_sigma must be positive");

    double sigma = sigma_override;
    if (sigma <= 0.0) {
        double acc = 0.0;
        for (const auto& v : block.samples) acc += std::norm(v);
        sigma = block.samples.empty() ? 0.0 : std::sqrt(acc / (2.0 * static_cast<double>(block.samples.size())));
    }

    QuantizedIq out;
    out.bits = bits;
    const double full = (bits == 8) ? 127.0 : 32767.0;
    out.scale = (sigma > 0.0) ? full_scale_sigma * sigma : 1.0;
    const double gain = full / out.scale;

    auto convert = [&](double x) {
        double q = std::round(x * gain);
        if (q > full) {
            q = full;
            ++out.clipped;
        } else if (q < -full) {
            q = -full;
            ++out.clipped;
        }
        return q;
    };

    if (bits == 8) {
        out.data8.reserve(block.samples.size() * 2);
        for (const auto& v : block.samples) {
            out.data8.push_back(static_cast<std::int8_t>(convert(v.real())));
            out.data8.push_back(static_cast<std::int8_t>(convert(v.imag())));
        }
    } else {
        out.data16.reserve(block.samples.size() * 2);
        for (const auto& v : block.samples) {
            out.data16.push_back(static_cast<std::int16_t>(convert(v.real())));
            out.data16.push_back(static_cast<std::int16_t>(convert(v.imag())));
        }
    }
    return out;
}

}  // namespace gnsstwin
