#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gnsstwin/trajectory.hpp"
#include "support/test_ephemeris.hpp"

using namespace gnsstwin;

namespace {

const GpsTime t0 = testsupport::scenario_epoch();

double max_central_diff_error(const Trajectory& tr) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < tr.samples.size(); ++i) {
        const double h = tr.samples[i + 1].tow - tr.samples[i - 1].tow;
        const Vec3 fd = (tr.samples[i + 1].r - tr.samples[i - 1].r) / h;
        worst = std::max(worst, (fd - tr.samples[i].v).norm());
    }
    return worst;
}

}  // namespace

TEST_CASE("static profile: constant position, zero velocity") {
    const StaticProfile p{{26.5 * kDegToRad, 80.2 * kDegToRad, 100.0}};
    const auto tr = build_static_trajectory(p, t0, 2.0);
    REQUIRE(tr.samples.size() == 201);
    for (const auto& s : tr.samples) {
        CHECK(s.v.norm() == 0.0);
        CHECK((s.r - tr.samples.front().r).norm() == 0.0);
    }
    CHECK(tr.samples.front().r.norm() > 6.2e6);
    CHECK(tr.samples.front().r.norm() < 7.0e6);
}

TEST_CASE("moderate profile: 25 m/s straight for 60 s covers 1500 m") {
    ModerateProfile p;
    p.start = {26.5 * kDegToRad, 80.2 * kDegToRad, 100.0};
    p.waypoints = {{0.0, 0.0, 0.0}, {60.0, 0.0, 1500.0}};
    const auto tr = build_moderate_trajectory(p, t0, 60.0);
    const double displacement = (tr.samples.back().r - tr.samples.front().r).norm();
    CHECK(displacement == doctest::Approx(1500.0).epsilon(1.0 / 1500.0));
    CHECK(tr.samples[500].v.norm() == doctest::Approx(25.0).epsilon(1e-9));
    CHECK(max_central_diff_error(tr) < 1e-3);
}

TEST_CASE("moderate profile with a corner stays C1 and passes the speed gate") {
    ModerateProfile p;
    p.start = {26.5 * kDegToRad, 80.2 * kDegToRad, 100.0};
    p.waypoints = {{0.0, 0.0, 0.0}, {40.0, 0.0, 1000.0}, {80.0, 800.0, 1000.0}};
    p.corner_s = 4.0;
    const auto tr = build_moderate_trajectory(p, t0, 80.0);
    CHECK(max_central_diff_error(tr) < 1e-3);
    // Before the corner: due north at 25; after: due east at 20.
    CHECK(tr.at(t0.tow + 10.0).v.norm() == doctest::Approx(25.0).epsilon(1e-6));
    CHECK(tr.at(t0.tow + 70.0).v.norm() == doctest::Approx(20.0).epsilon(1e-6));

    ModerateProfile fast = p;
    fast.waypoints[1] = {40.0, 0.0, 1500.0};  // 37.5 m/s leg
    CHECK_THROWS_AS(build_moderate_trajectory(fast, t0, 80.0), std::invalid_argument);

    ModerateProfile bad = p;
    bad.waypoints[1].t = 90.0;  // non-monotonic
    CHECK_THROWS_AS(build_moderate_trajectory(bad, t0, 80.0), std::invalid_argument);
}

TEST_CASE("ballistic apex matches the closed form without drag") {
    HighDynamicsProfile p;
    p.launch = {26.5 * kDegToRad, 80.2 * kDegToRad, 0.0};
    p.speed_mps = 300.0;
    p.elevation_deg = 45.0;
    p.drag_area_over_mass = 0.0;
    p.required_peak_accel = 0.0;  // no-drag launch has only gravity
    const auto tr = build_high_dynamics_trajectory(p, t0, 45.0);

    double apex = -1.0;
    for (const auto& s : tr.samples)
        apex = std::max(apex, geodetic_from_ecef(s.r).height_m);
    // (300 sin45)^2 / (2 g) with g = 9.80665; central gravity at this site
    // differs from the standard constant by < 0.4%, allow 1%.
    const double expect = std::pow(300.0 * std::sin(kPi / 4.0), 2.0) / (2.0 * 9.80665);
    CHECK(apex == doctest::Approx(expect).epsilon(0.01));
    CHECK(expect == doctest::Approx(2294.0).epsilon(1e-3));
}

TEST_CASE("high dynamics profile exceeds 20 g and stays self-consistent") {
    HighDynamicsProfile p;
    p.launch = {26.5 * kDegToRad, 80.2 * kDegToRad, 0.0};
    const auto tr = build_high_dynamics_trajectory(p, t0, 60.0);

    double peak = 0.0;
    for (const auto& s : tr.samples) peak = std::max(peak, s.a.norm());
    CHECK(peak > 196.133);

    CHECK(max_central_diff_error(tr) < 0.1);

    // Unreachable threshold errors out.
    HighDynamicsProfile weak = p;
    weak.speed_mps = 100.0;
    CHECK_THROWS_AS(build_high_dynamics_trajectory(weak, t0, 10.0), std::invalid_argument);
}

TEST_CASE("hermite interpolation reproduces stored samples and stays smooth") {
    HighDynamicsProfile p;
    p.launch = {26.5 * kDegToRad, 80.2 * kDegToRad, 0.0};
    const auto tr = build_high_dynamics_trajectory(p, t0, 20.0);

    const auto& mid = tr.samples[500];
    const auto got = tr.at(mid.tow);
    CHECK((got.r - mid.r).norm() < 1e-9);
    CHECK((got.v - mid.v).norm() < 1e-9);

    // Between-sample interpolation stays within the kinematic envelope.
    const auto between = tr.at(mid.tow + 0.004);
    CHECK((between.r - mid.r).norm() < mid.v.norm() * 0.005 + 1.0);
}

TEST_CASE("trajectory samples strictly increase in time") {
    const StaticProfile p{{10.0 * kDegToRad, 10.0 * kDegToRad, 0.0}};
    const auto tr = build_static_trajectory(p, t0, 1.0);
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
        CHECK(tr.samples[i].tow > tr.samples[i - 1].tow);
}

TEST_CASE("duration and rate validation") {
    const StaticProfile p{{0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(build_static_trajectory(p, t0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_static_trajectory(p, t0, 10.0, 50.0), std::invalid_argument);
}
