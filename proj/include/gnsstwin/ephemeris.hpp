#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gnsstwin/constants.hpp"

namespace gnsstwin {

/// Klobuchar broadcast ionosphere coefficients (header of the nav file).
struct KlobucharCoeffs {
    std::array<double, 4> alpha{};  // s, s/semicircle, ...
    std::array<double, 4> beta{};   // s, s/semicircle, ...
    bool valid = false;
};

/// Broadcast Keplerian elements and clock polynomial for one PRN.
struct BroadcastEphemeris {
    int prn = 0;
    int week = 0;         // full GPS week of toe
    double toe = 0.0;     // s of week
    double toc = 0.0;     // s of week

    double sqrt_a = 0.0;  // sqrt(m)
    double e = 0.0;
    double i0 = 0.0;      // rad
    double omega0 = 0.0;  // rad, RAAN at weekly epoch
    double omega = 0.0;   // rad, argument of perigee
    double m0 = 0.0;      // rad
    double delta_n = 0.0; // rad/s
    double idot = 0.0;    // rad/s
    double omega_dot = 0.0;  // rad/s

    double cuc = 0.0, cus = 0.0;  // rad
    double crc = 0.0, crs = 0.0;  // m
    double cic = 0.0, cis = 0.0;  // rad

    double af0 = 0.0;  // s
    double af1 = 0.0;  // s/s
    double af2 = 0.0;  // s/s^2

    double tgd = 0.0;  // s
    int iode = 0;
    int iodc = 0;
    int health = 0;
    double ura_m = 2.0;
};

inline void validate_ephemeris(const BroadcastEphemeris& eph) {
    const double a = eph.sqrt_a * eph.sqrt_a;
    if (!(eph.prn >= 1 && eph.prn <= 32))
        throw std::runtime_error("ephemeris PRN " + std::to_string(eph.prn) + " out of range");
    if (!(eph.e > 0.0 && eph.e < 0.03))
        throw std::runtime_error("ephemeris PRN " + std::to_string(eph.prn) +
                                 ": eccentricity out of the GPS broadcast range");
    if (!(a > 2.0e7 && a < 3.0e7))
        throw std::runtime_error("ephemeris PRN " + std::to_string(eph.prn) +
                                 ": semi-major axis out of the GPS range");
    if (!(eph.toe >= 0.0 && eph.toe < kSecondsPerWeek))
        throw std::runtime_error("ephemeris PRN " + std::to_string(eph.prn) + ": toe out of week");
}

}  // namespace gnsstwin
