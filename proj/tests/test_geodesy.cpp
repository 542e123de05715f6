#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gnsstwin/geodesy.hpp"

using namespace gnsstwin;

TEST_CASE("equator / prime meridian maps to the semi-major axis") {
    const Vec3 p = ecef_from_geodetic({0.0, 0.0, 0.0});
    CHECK(p.x() == doctest::Approx(6378137.0).epsilon(1e-12));
    CHECK(p.y() == doctest::Approx(0.0).scale(1.0));
    CHECK(p.z() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("polar axis point maps to latitude 90") {
    const Geodetic g = geodetic_from_ecef(Vec3(0.0, 0.0, 6356752.3142));
    CHECK(g.lat_rad == doctest::Approx(kPi / 2.0));
    CHECK(std::abs(g.height_m) < 1e-3);
}

TEST_CASE("roundtrip identity within 1e-6 m") {
    std::mt19937 rng(2027);
    std::uniform_real_distribution<double> lat(-89.9, 89.9);
    std::uniform_real_distribution<double> lon(-180.0, 180.0);
    std::uniform_real_distribution<double> h(-100.0, 30000.0);
    for (int i = 0; i < 500; ++i) {
        const Geodetic g{lat(rng) * kDegToRad, lon(rng) * kDegToRad, h(rng)};
        const Vec3 p = ecef_from_geodetic(g);
        const Vec3 back = ecef_from_geodetic(geodetic_from_ecef(p));
        CHECK((back - p).norm() < 1e-6);
    }
}

TEST_CASE("zenith satellite has elevation pi/2") {
    // At the equator the ellipsoid normal is radial, so scaling the user
    // position outward points exactly at the geodetic zenith.
    const Vec3 user = ecef_from_geodetic({0.0, 139.0 * kDegToRad, 0.0});
    const Vec3 sat = user * (2.66e7 / user.norm());
    const auto ea = elevation_azimuth(user, sat);
    CHECK(ea.elevation_rad == doctest::Approx(kPi / 2.0).epsilon(1e-9));

    // Elsewhere, zenith means along the local up direction.
    const Geodetic ref{35.0 * kDegToRad, 139.0 * kDegToRad, 0.0};
    const Vec3 user2 = ecef_from_geodetic(ref);
    const Vec3 sat2 = user2 + EnuFrame(ref).to_ecef(Vec3(0.0, 0.0, 2.0e7));
    CHECK(elevation_azimuth(user2, sat2).elevation_rad == doctest::Approx(kPi / 2.0).epsilon(1e-9));
}

TEST_CASE("constructed north-at-45-degrees geometry inverts exactly") {
    const Geodetic ref{20.0 * kDegToRad, 30.0 * kDegToRad, 0.0};
    const Vec3 user = ecef_from_geodetic(ref);
    const EnuFrame frame(ref);
    const double d = 1.0e7;
    const Vec3 sat = user + frame.to_ecef(Vec3(0.0, d * std::cos(kPi / 4.0), d * std::sin(kPi / 4.0)));
    const auto ea = elevation_azimuth(user, sat);
    const double az_dist = std::min(ea.azimuth_rad, kTwoPi - ea.azimuth_rad);
    CHECK(az_dist < 1e-9);
    CHECK(ea.elevation_rad == doctest::Approx(kPi / 4.0).epsilon(1e-9));
}

TEST_CASE("satellite below the tangent plane has negative elevation") {
    const Vec3 user = ecef_from_geodetic({45.0 * kDegToRad, 10.0 * kDegToRad, 0.0});
    const EnuFrame frame(geodetic_from_ecef(user));
    const Vec3 sat = user + frame.to_ecef(Vec3(5.0e6, 0.0, -1.0e6));
    CHECK(elevation_azimuth(user, sat).elevation_rad < 0.0);
}

TEST_CASE("antipodal line of sight negates elevation") {
    const Vec3 user = ecef_from_geodetic({10.0 * kDegToRad, 75.0 * kDegToRad, 0.0});
    const EnuFrame frame(geodetic_from_ecef(user));
    const Vec3 offset = frame.to_ecef(Vec3(3.0e6, 2.0e6, 1.5e6));
    const auto up = elevation_azimuth(user, user + offset);
    const auto down = elevation_azimuth(user, user - offset);
    CHECK(up.elevation_rad == doctest::Approx(-down.elevation_rad).epsilon(1e-9));
}
