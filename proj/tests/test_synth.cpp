#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gnsstwin/synth.hpp"
#include "support/test_ephemeris.hpp"

using namespace gnsstwin;

namespace {

ChannelTruth const_truth(int prn, std::size_t segments, double code_rate, double carrier_freq,
                         double amp, double code_chips0 = 0.0, double carrier_cycles0 = 0.0) {
    ChannelTruth t;
    t.prn = prn;
    t.rate_hz = 100.0;
    t.code_rate_cps.assign(segments + 1, code_rate);
    t.carrier_freq_hz.assign(segments + 1, carrier_freq);
    t.amplitude.assign(segments + 1, amp);
    t.code_chips0 = code_chips0;
    t.carrier_cycles0 = carrier_cycles0;
    return t;
}

NavMessage all_ones_nav(int prn, std::size_t n_bits) {
    NavMessage nav;
    nav.prn = prn;
    nav.bits.assign(n_bits, +1);
    return nav;
}

}  // namespace

TEST_CASE("frozen phase terms reproduce the chip sequence exactly") {
    const auto code = ca_code(7);
    const auto nav = all_ones_nav(7, 100);
    // Offset by an eighth of a chip so no sample sits exactly on a chip
    // boundary (there the assignment is at floating-point mercy).
    const auto truth = const_truth(7, 10, kCaChipRateHz, 0.0, 1.0, 0.125);
    auto state = make_channel_state(truth);

    const double fs = 4.092e6;  // 4 samples per chip
    std::vector<std::complex<double>> out(4092, {0.0, 0.0});
    synthesize_channel_block(state, truth, code, nav, out.data(), out.size(), fs);

    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto chip_index = static_cast<std::size_t>(0.125 + 0.25 * static_cast<double>(k));
        const int chip = code.chips[chip_index % 1023];
        CHECK(out[k].real() == doctest::Approx(chip).epsilon(1e-12));
        CHECK(out[k].imag() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("carrier phase accumulates frequency times time") {
    const auto code = ca_code(1);
    const auto nav = all_ones_nav(1, 100);
    const auto truth = const_truth(1, 10, kCaChipRateHz, 1000.0, 1.0);
    const double fs = 2.5e6;

    auto state = make_channel_state(truth);
    std::vector<std::complex<double>> out(1250, {0.0, 0.0});  // 0.5 ms
    synthesize_channel_block(state, truth, code, nav, out.data(), out.size(), fs);
    CHECK(state.carrier_phase_cycles == doctest::Approx(0.5).epsilon(1e-9));

    out.assign(1250, {0.0, 0.0});
    synthesize_channel_block(state, truth, code, nav, out.data(), out.size(), fs);
    // 1 ms at 1000 Hz: exactly 1.000 cycle, i.e. fractional phase back at 0.
    CHECK(std::min(state.carrier_phase_cycles, 1.0 - state.carrier_phase_cycles) < 1e-9);
}

TEST_CASE("code doppler advances the code phase by the scale factor") {
    const auto code = ca_code(3);
    const auto nav = all_ones_nav(3, 100);
    const double fd = 1000.0;
    const double code_rate = kCaChipRateHz * (1.0 + fd / kL1Hz);
    const auto truth = const_truth(3, 10, code_rate, fd, 1.0);

    auto state = make_channel_state(truth);
    const double fs = 2.5e6;
    std::vector<std::complex<double>> out(2500, {0.0, 0.0});  // 1 ms
    synthesize_channel_block(state, truth, code, nav, out.data(), out.size(), fs);

    // Past one nominal period the excess is 1023 * fd / fL1 = 6.49e-4 chips.
    CHECK(state.code_phase_chips == doctest::Approx(6.4935e-4).epsilon(1e-3));
}

TEST_CASE("block partitioning does not change a single sample") {
    const auto code = ca_code(13);
    const auto nav = all_ones_nav(13, 100);

    // Dynamics that vary across segments: ramping Doppler and amplitude.
    ChannelTruth truth;
    truth.prn = 13;
    truth.rate_hz = 100.0;
    for (int k = 0; k <= 12; ++k) {
        const double fd = 1200.0 + 35.0 * k;
        truth.carrier_freq_hz.push_back(fd);
        truth.code_rate_cps.push_back(kCaChipRateHz * (1.0 + fd / kL1Hz));
        truth.amplitude.push_back(1.0 + 0.01 * k);
    }
    truth.code_chips0 = 511.25;
    truth.carrier_cycles0 = 0.33;

    const double fs = 2.5e6;
    const std::size_t total = 250000;  // 100 ms

    std::vector<std::complex<double>> whole(total, {0.0, 0.0});
    auto st1 = make_channel_state(truth);
    synthesize_channel_block(st1, truth, code, nav, whole.data(), total, fs);

    std::vector<std::complex<double>> pieces(total, {0.0, 0.0});
    auto st2 = make_channel_state(truth);
    std::size_t done = 0;
    std::mt19937 rng(5);
    std::uniform_int_distribution<std::size_t> chunk(1, 7001);
    while (done < total) {
        const std::size_t n = std::min(chunk(rng), total - done);
        synthesize_channel_block(st2, truth, code, nav, pieces.data() + done, n, fs);
        done += n;
    }

    for (std::size_t k = 0; k < total; ++k) {
        CHECK(whole[k].real() == pieces[k].real());
        CHECK(whole[k].imag() == pieces[k].imag());
    }
    CHECK(st1.next_sample == st2.next_sample);
    CHECK(st1.carrier_phase_cycles == st2.carrier_phase_cycles);
    CHECK(st1.code_phase_chips == st2.code_phase_chips);
}

TEST_CASE("mean squared amplitude equals amplitude^2 over whole periods") {
    const auto code = ca_code(21);
    const auto nav = all_ones_nav(21, 100);
    const double amp = 3.7e-8;
    const auto truth = const_truth(21, 20, kCaChipRateHz, 777.0, amp);
    auto state = make_channel_state(truth);

    const double fs = 2.5e6;
    const std::size_t n = 25000;  // 10 code periods
    std::vector<std::complex<double>> out(n, {0.0, 0.0});
    synthesize_channel_block(state, truth, code, nav, out.data(), n, fs);

    double acc = 0.0;
    for (const auto& v : out) acc += std::norm(v);
    CHECK(acc / n == doctest::Approx(amp * amp).epsilon(1e-3));
}

TEST_CASE("truth gap inside a block is an error") {
    const auto code = ca_code(2);
    const auto nav = all_ones_nav(2, 100);
    const auto truth = const_truth(2, 5, kCaChipRateHz, 0.0, 1.0);  // covers 50 ms
    auto state = make_channel_state(truth);
    std::vector<std::complex<double>> out(250000, {0.0, 0.0});
    CHECK_THROWS(synthesize_channel_block(state, truth, code, nav, out.data(), out.size(), 2.5e6));
}

TEST_CASE("mix: empty input with zero noise is the all-zero block") {
    std::mt19937_64 rng(1);
    auto blk = mix_and_noise({}, 0.0, 2.5e6, rng);
    CHECK(blk.samples.empty());

    IqBlock zero;
    zero.fs = 2.5e6;
    zero.samples.assign(100, {0.0, 0.0});
    auto out = mix_and_noise({zero}, 0.0, 2.5e6, rng);
    for (const auto& v : out.samples) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("mix: superposition doubles in-phase channels") {
    IqBlock a;
    a.fs = 2.5e6;
    a.samples.assign(64, {0.5, -0.25});
    std::mt19937_64 rng(7);
    const auto out = mix_and_noise({a, a}, 0.0, 2.5e6, rng);
    for (const auto& v : out.samples) {
        CHECK(v.real() == doctest::Approx(1.0));
        CHECK(v.imag() == doctest::Approx(-0.5));
    }
}

TEST_CASE("mix: noise variance calibrated to N0 fs within 2 percent") {
    const double fs = 2.5e6;
    const double n0 = std::pow(10.0, -20.4);  // -204 dBW/Hz
    IqBlock silent;
    silent.fs = fs;
    silent.samples.assign(2'000'000, {0.0, 0.0});
    std::mt19937_64 rng(2026);
    const auto out = mix_and_noise({silent}, n0, fs, rng);
    double acc = 0.0;
    for (const auto& v : out.samples) acc += std::norm(v);
    const double var = acc / static_cast<double>(out.samples.size());
    CHECK(var == doctest::Approx(n0 * fs).epsilon(0.02));

    // Determinism: the same seed reproduces the same stream.
    std::mt19937_64 rng2(2026);
    const auto out2 = mix_and_noise({silent}, n0, fs, rng2);
    CHECK(out2.samples[12345] == out.samples[12345]);
}

TEST_CASE("mix rejects mismatched metadata") {
    IqBlock a, b;
    a.fs = b.fs = 2.5e6;
    a.samples.assign(10, {0, 0});
    b.samples.assign(11, {0, 0});
    std::mt19937_64 rng(3);
    CHECK_THROWS(mix_and_noise({a, b}, 0.0, 2.5e6, rng));
}

TEST_CASE("quantize: zero input gives zero bytes") {
    IqBlock blk;
    blk.fs = 2.5e6;
    blk.samples.assign(100, {0.0, 0.0});
    const auto q = quantize_iq(blk, 8, 3.0, 1.0);
    CHECK(q.data8.size() == 200);
    for (auto v : q.data8) CHECK(v == 0);
    CHECK(q.clipped == 0);
}

TEST_CASE("quantize: overdrive saturates at +/-127 and counts clips") {
    IqBlock blk;
    blk.fs = 2.5e6;
    blk.samples.assign(16, {10.0, -10.0});
    const auto q = quantize_iq(blk, 8, 3.0, 1.0);  // full scale at 3.0
    CHECK(q.clipped == 32);
    for (std::size_t k = 0; k < q.data8.size(); k += 2) {
        CHECK(q.data8[k] == 127);
        CHECK(q.data8[k + 1] == -127);
    }
}

TEST_CASE("quantize: gaussian clip fraction matches the 3-sigma tail") {
    IqBlock blk;
    blk.fs = 2.5e6;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    blk.samples.resize(1'000'000);
    for (auto& v : blk.samples) v = {gauss(rng), gauss(rng)};
    const auto q = quantize_iq(blk, 8, 3.0);
    const double frac = static_cast<double>(q.clipped) / (2.0 * blk.samples.size());
    CHECK(frac == doctest::Approx(0.0027).epsilon(0.37));  // 0.27% +/- 0.1%
    CHECK(std::abs(frac - 0.0027) < 0.001);
}

TEST_CASE("quantize: 16-bit path uses the full scale") {
    IqBlock blk;
    blk.fs = 2.5e6;
    blk.samples = {{1.0, -1.0}, {0.5, 0.25}};
    const auto q = quantize_iq(blk, 16, 1.0, 1.0);
    CHECK(q.data16[0] == 32767);
    CHECK(q.data16[1] == -32767);
    CHECK(q.data16[2] == 16384);  // round(0.5 * 32767)
}
