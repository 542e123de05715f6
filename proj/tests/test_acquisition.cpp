#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gnsstwin/acquisition.hpp"
#include "support/closed_loop.hpp"

using namespace gnsstwin;

TEST_CASE("known injected signal is acquired with tight code and doppler") {
    testsupport::SignalSpec spec;
    spec.fs = 2.5e6;
    spec.duration_s = 0.012;
    spec.channels = {{26, 512.0, 1000.0, 0.0, 45.0}};
    const auto sig = testsupport::make_signal(spec);

    const auto res = acquire(sig.block.samples.data(), sig.block.samples.size(), spec.fs, 0.0, 26);
    REQUIRE(res.detected);
    CHECK(res.peak_metric > 2.0);
    CHECK(std::abs(res.doppler_hz - 1000.0) <= 250.0);
    // Fine-frequency refinement narrows well inside the bin.
    CHECK(std::abs(res.doppler_hz - 1000.0) <= 50.0);
    double dphase = std::abs(res.code_phase_chips - 512.0);
    dphase = std::min(dphase, 1023.0 - dphase);
    CHECK(dphase <= 0.5);
}

TEST_CASE("works at negative doppler and nonzero IF") {
    testsupport::SignalSpec spec;
    spec.fs = 4.0e6;
    spec.duration_s = 0.012;
    spec.channels = {{7, 100.25, -3200.0, 0.0, 46.0}};
    auto sig = testsupport::make_signal(spec);

    // Shift the whole composite to a 250 kHz IF, as a low-IF front end would.
    const auto& trig = TrigTable::instance();
    for (std::size_t k = 0; k < sig.block.samples.size(); ++k) {
        double c, s;
        trig.sincos(250e3 * static_cast<double>(k) / spec.fs, c, s);
        sig.block.samples[k] *= std::complex<double>(c, s);
    }

    const auto res = acquire(sig.block.samples.data(), sig.block.samples.size(), spec.fs, 250e3, 7);
    REQUIRE(res.detected);
    CHECK(std::abs(res.doppler_hz + 3200.0) <= 50.0);
    double dphase = std::abs(res.code_phase_chips - 100.25);
    dphase = std::min(dphase, 1023.0 - dphase);
    CHECK(dphase <= 0.5);
}

TEST_CASE("weak 38 dB-Hz signal still acquires within tolerance") {
    testsupport::SignalSpec spec;
    spec.fs = 2.5e6;
    spec.duration_s = 0.022;
    spec.seed = 555;
    spec.channels = {{11, 700.5, -4100.0, 0.0, 38.0}};
    const auto sig = testsupport::make_signal(spec);
    const auto res = acquire(sig.block.samples.data(), sig.block.samples.size(), spec.fs, 0.0, 11);
    REQUIRE(res.detected);
    CHECK(std::abs(res.doppler_hz + 4100.0) <= 250.0);
    double dphase = std::abs(res.code_phase_chips - 700.5);
    dphase = std::min(dphase, 1023.0 - dphase);
    CHECK(dphase <= 0.5);
}

TEST_CASE("pure noise: false alarm rate below 1 percent at threshold 2") {
    int false_alarms = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        testsupport::SignalSpec spec;
        spec.fs = 2.5e6;
        spec.duration_s = 0.002;
        spec.seed = 7000 + trial;
        spec.channels = {};  // noise only
        const auto sig = testsupport::make_signal(spec);
        AcquisitionConfig cfg;
        cfg.fine_frequency = false;
        const auto res =
            acquire(sig.block.samples.data(), sig.block.samples.size(), spec.fs, 0.0, 13, cfg);
        if (res.detected) ++false_alarms;
    }
    CHECK(false_alarms <= 1);
}

TEST_CASE("a PRN absent from the composite is not detected") {
    testsupport::SignalSpec spec;
    spec.fs = 2.5e6;
    spec.duration_s = 0.012;
    spec.channels = {{26, 512.0, 1000.0, 0.0, 47.0}, {7, 40.0, -2500.0, 0.0, 46.0}};
    const auto sig = testsupport::make_signal(spec);

    const auto res = acquire(sig.block.samples.data(), sig.block.samples.size(), spec.fs, 0.0, 19);
    CHECK_FALSE(res.detected);
}

TEST_CASE("input validation") {
    std::vector<std::complex<double>> tiny(100, {0.0, 0.0});
    CHECK_THROWS(acquire(tiny.data(), tiny.size(), 2.5e6, 0.0, 1));
    std::vector<std::complex<double>> low(4000, {0.0, 0.0});
    CHECK_THROWS(acquire(low.data(), low.size(), 1.0e6, 0.0, 1));
    std::vector<std::complex<double>> ok(6000, {0.0, 0.0});
    AcquisitionConfig cfg;
    cfg.doppler_span_hz = 1234.0;  // not a multiple of the bin
    CHECK_THROWS(acquire(ok.data(), ok.size(), 2.5e6, 0.0, 1, cfg));
}
