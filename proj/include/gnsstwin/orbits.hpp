#pragma once

#include <cmath>
#include <stdexcept>

#include "gnsstwin/ephemeris.hpp"
#include "gnsstwin/geodesy.hpp"
#include "gnsstwin/gps_time.hpp"

namespace gnsstwin {

struct SatState {
    int prn = 0;
    GpsTime t;
    Vec3 r_ecef = Vec3::Zero();   // m
    Vec3 v_ecef = Vec3::Zero();   // m/s
    double clock_offset_s = 0.0;  // includes relativistic eccentricity term
    double clock_drift = 0.0;     // s/s
};

namespace detail {

inline double solve_kepler(double mean_anomaly, double e) {
    double big_e = mean_anomaly;
    for (int i = 0; i < 30; ++i) {
        const double f = big_e - e * std::sin(big_e) - mean_anomaly;
        const double step = f / (1.0 - e * std::cos(big_e));
        big_e -= step;
        if (std::abs(step) < 1e-12) return big_e;
    }
    throw std::runtime_error("Kepler iteration did not converge");
}

}  // namespace detail

/// Satellite ECEF state from broadcast elements (standard user algorithm),
/// with analytic velocity and the clock polynomial + relativistic term.
inline SatState sat_state_at(const BroadcastEphemeris& eph, const GpsTime& t) {
    const double a = eph.sqrt_a * eph.sqrt_a;
    const double n0 = std::sqrt(kGmEarth / (a * a * a));
    const double n = n0 + eph.delta_n;
    const double tk = wrap_week_seconds((t.week - eph.week) * kSecondsPerWeek + t.tow - eph.toe);

    const double mk = eph.m0 + n * tk;
    const double ek = detail::solve_kepler(mk, eph.e);
    const double sin_ek = std::sin(ek), cos_ek = std::cos(ek);
    const double one_m_ecos = 1.0 - eph.e * cos_ek;

    const double nu = std::atan2(std::sqrt(1.0 - eph.e * eph.e) * sin_ek, cos_ek - eph.e);
    const double phi = nu + eph.omega;
    const double sin_2phi = std::sin(2.0 * phi), cos_2phi = std::cos(2.0 * phi);

    const double du = eph.cus * sin_2phi + eph.cuc * cos_2phi;
    const double dr = eph.crs * sin_2phi + eph.crc * cos_2phi;
    const double di = eph.cis * sin_2phi + eph.cic * cos_2phi;

    const double u = phi + du;
    const double r = a * one_m_ecos + dr;
    const double inc = eph.i0 + eph.idot * tk + di;

    const double x_orb = r * std::cos(u);
    const double y_orb = r * std::sin(u);

    const double omega_k = eph.omega0 + (eph.omega_dot - kOmegaEarth) * tk - kOmegaEarth * eph.toe;
    const double sin_om = std::sin(omega_k), cos_om = std::cos(omega_k);
    const double sin_i = std::sin(inc), cos_i = std::cos(inc);

    SatState st;
    st.prn = eph.prn;
    st.t = t;
    st.r_ecef = Vec3(x_orb * cos_om - y_orb * cos_i * sin_om,
                     x_orb * sin_om + y_orb * cos_i * cos_om,
                     y_orb * sin_i);

    // Analytic time derivatives.
    const double ek_dot = n / one_m_ecos;
    const double nu_dot = ek_dot * std::sqrt(1.0 - eph.e * eph.e) / one_m_ecos;
    const double u_dot = nu_dot * (1.0 + 2.0 * (eph.cus * cos_2phi - eph.cuc * sin_2phi));
    const double r_dot = a * eph.e * sin_ek * ek_dot + 2.0 * nu_dot * (eph.crs * cos_2phi - eph.crc * sin_2phi);
    const double i_dot = eph.idot + 2.0 * nu_dot * (eph.cis * cos_2phi - eph.cic * sin_2phi);
    const double omega_k_dot = eph.omega_dot - kOmegaEarth;

    const double xo_dot = r_dot * std::cos(u) - r * u_dot * std::sin(u);
    const double yo_dot = r_dot * std::sin(u) + r * u_dot * std::cos(u);

    st.v_ecef = Vec3(
        xo_dot * cos_om - yo_dot * cos_i * sin_om + i_dot * y_orb * sin_i * sin_om - omega_k_dot * st.r_ecef.y(),
        xo_dot * sin_om + yo_dot * cos_i * cos_om - i_dot * y_orb * sin_i * cos_om + omega_k_dot * st.r_ecef.x(),
        yo_dot * sin_i + i_dot * y_orb * cos_i);

    const double dt_c = wrap_week_seconds((t.week - eph.week) * kSecondsPerWeek + t.tow - eph.toc);
    const double rel = kRelativisticF * eph.e * eph.sqrt_a * sin_ek;
    st.clock_offset_s = eph.af0 + eph.af1 * dt_c + eph.af2 * dt_c * dt_c + rel;
    st.clock_drift = eph.af1 + 2.0 * eph.af2 * dt_c + kRelativisticF * eph.e * eph.sqrt_a * cos_ek * ek_dot;
    return st;
}

/// Rotate an ECEF position into the receive-epoch frame to compensate Earth
/// rotation over the signal transit time tau (Sagnac).
inline Vec3 sagnac_rotate(const Vec3& r, double tau_s) {
    const double ang = kOmegaEarth * tau_s;
    const double c = std::cos(ang), s = std::sin(ang);
    return Vec3(c * r.x() + s * r.y(), -s * r.x() + c * r.y(), r.z());
}

}  // namespace gnsstwin
