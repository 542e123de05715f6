#pragma once

// Closed-loop test signals: single- or multi-channel composites with known
// injected truth, sized for unit tests.

#include <random>
#include <vector>

#include "gnsstwin/lnav.hpp"
#include "gnsstwin/synth.hpp"
#include "support/test_ephemeris.hpp"

namespace testsupport {

struct SignalChannel {
    int prn = 26;
    double code_phase_chips = 0.0;   // incoming code phase at sample 0
    double doppler_hz = 0.0;         // at t = 0
    double doppler_rate_hz_s = 0.0;  // linear ramp
    double cn0_dbhz = 45.0;
};

struct SignalSpec {
    double fs = 2.5e6;
    double duration_s = 0.1;
    double n0_w_hz = 1e-20;  // noise density; 0 disables noise, amplitudes = 1
    std::uint64_t seed = 1234;
    std::vector<SignalChannel> channels;
};

struct MadeSignal {
    gnsstwin::IqBlock block;
    std::vector<gnsstwin::ChannelTruth> truths;
    std::vector<gnsstwin::NavMessage> navs;
};

inline MadeSignal make_signal(const SignalSpec& spec) {
    using namespace gnsstwin;
    MadeSignal out;
    const auto n = static_cast<std::size_t>(std::llround(spec.fs * spec.duration_s));
    const auto segments = static_cast<std::size_t>(std::ceil(spec.duration_s * 100.0)) + 2;

    std::vector<IqBlock> contributions;
    for (const auto& ch : spec.channels) {
        ChannelTruth truth;
        truth.prn = ch.prn;
        truth.rate_hz = 100.0;
        const double amp = (spec.n0_w_hz > 0.0)
                               ? std::sqrt(spec.n0_w_hz * std::pow(10.0, ch.cn0_dbhz / 10.0))
                               : 1.0;
        for (std::size_t k = 0; k <= segments; ++k) {
            const double t = static_cast<double>(k) / truth.rate_hz;
            const double fd = ch.doppler_hz + ch.doppler_rate_hz_s * t;
            truth.carrier_freq_hz.push_back(fd);
            truth.code_rate_cps.push_back(kCaChipRateHz * (1.0 + fd / kL1Hz));
            truth.amplitude.push_back(amp);
        }
        // Two bits of lead-in so early/multipath offsets stay positive.
        truth.code_chips0 = 2.0 * kChipsPerBit + ch.code_phase_chips;
        truth.carrier_cycles0 = 0.0;

        // Real LNAV bits so bit sync and decode see true subframes.
        const auto eph = test_constellation().at(((ch.prn - 1) % 24) + 1);
        auto nav_eph = eph;
        nav_eph.prn = ch.prn;
        const std::size_t nbits = static_cast<std::size_t>(spec.duration_s * 50.0) + 150;
        auto nav = build_nav_message(nav_eph, scenario_epoch(), nbits);

        IqBlock contrib;
        contrib.fs = spec.fs;
        contrib.samples.assign(n, {0.0, 0.0});
        auto st = make_channel_state(truth);
        synthesize_channel_block(st, truth, ca_code(ch.prn), nav, contrib.samples.data(), n,
                                 spec.fs);
        contributions.push_back(std::move(contrib));
        out.truths.push_back(std::move(truth));
        out.navs.push_back(std::move(nav));
    }

    std::mt19937_64 rng(spec.seed);
    if (contributions.empty()) {
        IqBlock silent;
        silent.fs = spec.fs;
        silent.samples.assign(n, {0.0, 0.0});
        contributions.push_back(std::move(silent));
    }
    out.block = mix_and_noise(contributions, spec.n0_w_hz, spec.fs, rng);
    return out;
}

}  // namespace testsupport
