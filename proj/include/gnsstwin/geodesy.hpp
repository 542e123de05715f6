#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "gnsstwin/constants.hpp"

namespace gnsstwin {

using Vec3 = Eigen::Vector3d;

struct Geodetic {
    double lat_rad = 0.0;
    double lon_rad = 0.0;
    double height_m = 0.0;
};

inline Vec3 ecef_from_geodetic(const Geodetic& g) {
    const double sl = std::sin(g.lat_rad);
    const double cl = std::cos(g.lat_rad);
    const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sl * sl);
    return Vec3((n + g.height_m) * cl * std::cos(g.lon_rad),
                (n + g.height_m) * cl * std::sin(g.lon_rad),
                (n * (1.0 - kWgs84E2) + g.height_m) * sl);
}

/// Closed-form start + Bowring-style iteration; converges to < 1e-9 m for
/// near-Earth points.
inline Geodetic geodetic_from_ecef(const Vec3& p) {
    const double rho = std::hypot(p.x(), p.y());
    Geodetic g;
    g.lon_rad = std::atan2(p.y(), p.x());
    if (rho < 1e-9) {  // on the polar axis
        g.lat_rad = (p.z() >= 0.0) ? kPi / 2.0 : -kPi / 2.0;
        g.height_m = std::abs(p.z()) - kWgs84B;
        return g;
    }
    double lat = std::atan2(p.z(), rho * (1.0 - kWgs84E2));
    double h = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double sl = std::sin(lat);
        const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sl * sl);
        h = rho / std::cos(lat) - n;
        const double lat_new = std::atan2(p.z(), rho * (1.0 - kWgs84E2 * n / (n + h)));
        if (std::abs(lat_new - lat) < 1e-13) {
            lat = lat_new;
            break;
        }
        lat = lat_new;
    }
    g.lat_rad = lat;
    const double sl = std::sin(lat);
    const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sl * sl);
    if (std::abs(std::cos(lat)) > 1e-10)
        g.height_m = rho / std::cos(lat) - n;
    else
        g.height_m = p.z() / sl - n * (1.0 - kWgs84E2);
    return g;
}

/// Rows of the ECEF->ENU rotation at a reference point.
struct EnuFrame {
    Vec3 east, north, up;

    explicit EnuFrame(const Geodetic& ref) {
        const double sl = std::sin(ref.lat_rad), cl = std::cos(ref.lat_rad);
        const double so = std::sin(ref.lon_rad), co = std::cos(ref.lon_rad);
        east = Vec3(-so, co, 0.0);
        north = Vec3(-sl * co, -sl * so, cl);
        up = Vec3(cl * co, cl * so, sl);
    }
    explicit EnuFrame(const Vec3& ref_ecef) : EnuFrame(geodetic_from_ecef(ref_ecef)) {}

    Vec3 to_enu(const Vec3& v_ecef) const {
        return Vec3(east.dot(v_ecef), north.dot(v_ecef), up.dot(v_ecef));
    }
    Vec3 to_ecef(const Vec3& v_enu) const {
        return east * v_enu.x() + north * v_enu.y() + up * v_enu.z();
    }
};

struct ElevationAzimuth {
    double elevation_rad = 0.0;
    double azimuth_rad = 0.0;  // [0, 2pi), clockwise from north
};

inline ElevationAzimuth elevation_azimuth(const Vec3& r_user, const Vec3& r_sat) {
    const EnuFrame frame(r_user);
    const Vec3 los = frame.to_enu(r_sat - r_user);
    ElevationAzimuth out;
    out.elevation_rad = std::atan2(los.z(), std::hypot(los.x(), los.y()));
    out.azimuth_rad = std::atan2(los.x(), los.y());
    if (out.azimuth_rad < 0.0) out.azimuth_rad += kTwoPi;
    return out;
}

}  // namespace gnsstwin
