#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gnsstwin/constants.hpp"
#include "gnsstwin/ephemeris.hpp"
#include "gnsstwin/geodesy.hpp"

namespace gnsstwin {

/// Klobuchar single-frequency L1 slant group delay, metres.
/// Semicircle arithmetic throughout; pierce point at 350 km, diurnal cosine
/// peaking at 50400 s, amplitude/period clamped at their floors.
inline double klobuchar_delay_m(const KlobucharCoeffs& k, const Geodetic& user,
                                double elevation_rad, double azimuth_rad, double gps_tow) {
    const double el_sc = elevation_rad / kPi;  // semicircles
    const double lat_sc = user.lat_rad / kPi;
    const double lon_sc = user.lon_rad / kPi;

    const double psi = 0.0137 / (el_sc + 0.11) - 0.022;

    double lat_i = lat_sc + psi * std::cos(azimuth_rad);
    lat_i = std::clamp(lat_i, -0.416, 0.416);
    const double lon_i = lon_sc + psi * std::sin(azimuth_rad) / std::cos(lat_i * kPi);
    const double lat_m = lat_i + 0.064 * std::cos((lon_i - 1.617) * kPi);

    double t = 4.32e4 * lon_i + gps_tow;
    t = std::fmod(t, 86400.0);
    if (t < 0.0) t += 86400.0;

    const double slant = 1.0 + 16.0 * std::pow(0.53 - el_sc, 3.0);

    double amp = 0.0, per = 0.0;
    double lat_pow = 1.0;
    for (int i = 0; i < 4; ++i) {
        amp += k.alpha[static_cast<std::size_t>(i)] * lat_pow;
        per += k.beta[static_cast<std::size_t>(i)] * lat_pow;
        lat_pow *= lat_m;
    }
    amp = std::max(amp, 0.0);
    per = std::max(per, 72000.0);

    const double x = kTwoPi * (t - 50400.0) / per;
    double delay_s;
    if (std::abs(x) < 1.57)
        delay_s = slant * (5e-9 + amp * (1.0 - x * x / 2.0 + x * x * x * x / 24.0));
    else
        delay_s = slant * 5e-9;
    return kSpeedOfLight * delay_s;
}

struct MeteoParams {
    double pressure_hpa = 1013.25;
    double temperature_c = 20.0;
    double humidity = 0.5;  // fraction in [0, 1]
};

/// Saastamoinen zenith tropospheric delay, metres. h in km.
/// The water-vapor exponent denominator defaults to 273.3; pass
/// magnus_237 = true for the conventional 237.3 form.
inline double saastamoinen_ztd_m(const MeteoParams& met, double lat_rad, double h_km,
                                 bool magnus_237 = false) {
    if (!(met.pressure_hpa > 300.0 && met.pressure_hpa < 1100.0))
        throw std::invalid_argument("saastamoinen: surface pressure out of range");
    if (!(met.temperature_c > -60.0 && met.temperature_c < 60.0))
        throw std::invalid_argument("saastamoinen: temperature out of range");
    if (!(met.humidity >= 0.0 && met.humidity <= 1.0))
        throw std::invalid_argument("saastamoinen: relative humidity must be a fraction");

    const double t0 = met.temperature_c;
    const double denom_const = magnus_237 ? 237.3 : 273.3;
    const double chi = met.humidity * 6.11 * std::pow(10.0, 7.5 * t0 / (t0 + denom_const));
    const double wet_factor = 0.05 + 1255.0 / (t0 + 273.15);
    const double denom = 1.0 - 0.00266 * std::cos(2.0 * lat_rad) - 0.00028 * h_km;
    if (denom <= 0.0) throw std::runtime_error("saastamoinen: nonphysical site parameters");
    return 0.002277 * (met.pressure_hpa + wet_factor * chi) / denom;
}

/// Global obliquity mapping m(el) = 1.001 / sqrt(0.002001 + sin^2 el).
inline double tropo_mapping(double elevation_rad) {
    const double s = std::sin(elevation_rad);
    return 1.001 / std::sqrt(0.002001 + s * s);
}

inline double slant_tropo_m(double ztd_m, double elevation_rad,
                            double mask_rad = 5.0 * kDegToRad) {
    if (elevation_rad < mask_rad)
        throw std::invalid_argument("slant_tropo: elevation below mask");
    return ztd_m * tropo_mapping(elevation_rad);
}

}  // namespace gnsstwin
