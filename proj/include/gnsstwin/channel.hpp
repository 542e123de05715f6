#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnsstwin/atmosphere.hpp"
#include "gnsstwin/constants.hpp"
#include "gnsstwin/geodesy.hpp"
#include "gnsstwin/gps_time.hpp"
#include "gnsstwin/orbits.hpp"

namespace gnsstwin {

/// Per-epoch, per-satellite truth observables feeding both the synthesizer
/// and the receiver comparison.
struct TruthObservable {
    GpsTime t_rx;
    int prn = 0;
    double geometric_range_m = 0.0;
    double tau_total_s = 0.0;  // geometric + iono + tropo, no clock terms
    double iono_delay_m = 0.0;
    double tropo_delay_m = 0.0;
    double doppler_hz = 0.0;   // line-of-sight Doppler at L1
    double elevation_rad = 0.0;
    double azimuth_rad = 0.0;
    double carrier_power_w = 0.0;
    double cn0_dbhz = 0.0;
};

/// Elevation-tabulated antenna gain, linear interpolation between knots.
struct AntennaPattern {
    std::vector<double> elevation_rad;
    std::vector<double> gain_dbi;

    static AntennaPattern isotropic(double gain_dbi = 0.0) {
        AntennaPattern p;
        p.elevation_rad = {0.0, kPi / 2.0};
        p.gain_dbi = {gain_dbi, gain_dbi};
        return p;
    }

    /// Mild hemispherical patch shape: a few dB rolloff toward the horizon.
    static AntennaPattern hemispherical() {
        AntennaPattern p;
        for (int deg = 0; deg <= 90; deg += 10) {
            p.elevation_rad.push_back(deg * kDegToRad);
            p.gain_dbi.push_back(-1.5 + 3.0 * std::sin(deg * kDegToRad));
        }
        return p;
    }

    static AntennaPattern from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open antenna pattern: " + path);
        AntennaPattern p;
        std::string line;
        int line_no = 0;
        while (std::getline(f, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            double el_deg, gain;
            if (!(ss >> el_deg >> gain))
                throw std::runtime_error("antenna pattern: bad row at line " +
                                         std::to_string(line_no));
            p.elevation_rad.push_back(el_deg * kDegToRad);
            p.gain_dbi.push_back(gain);
        }
        if (p.elevation_rad.size() < 2)
            throw std::runtime_error("antenna pattern needs at least two knots: " + path);
        for (std::size_t i = 1; i < p.elevation_rad.size(); ++i)
            if (!(p.elevation_rad[i] > p.elevation_rad[i - 1]))
                throw std::runtime_error("antenna pattern elevations must increase: " + path);
        return p;
    }

    double gain_at(double el_rad) const {
        if (el_rad <= elevation_rad.front()) return gain_dbi.front();
        if (el_rad >= elevation_rad.back()) return gain_dbi.back();
        const auto it = std::upper_bound(elevation_rad.begin(), elevation_rad.end(), el_rad);
        const auto i = static_cast<std::size_t>(it - elevation_rad.begin());
        const double u = (el_rad - elevation_rad[i - 1]) / (elevation_rad[i] - elevation_rad[i - 1]);
        return gain_dbi[i - 1] + u * (gain_dbi[i] - gain_dbi[i - 1]);
    }
};

/// Line-of-sight Doppler: f_D = -(f_tx/c) (v_s - v_u).(r_s - r_u)/|r_s - r_u|.
inline double los_doppler(const Vec3& r_s, const Vec3& v_s, const Vec3& r_u, const Vec3& v_u,
                          double f_tx_hz = kL1Hz) {
    const Vec3 los = r_s - r_u;
    const double range = los.norm();
    if (range <= 0.0) throw std::invalid_argument("los_doppler: coincident positions");
    return -(f_tx_hz / kSpeedOfLight) * (v_s - v_u).dot(los) / range;
}

/// Total propagation delay: geometric plus atmospheric path delays.
inline double propagation_delay_s(const Vec3& r_s, const Vec3& r_u, double iono_m = 0.0,
                                  double tropo_m = 0.0) {
    return ((r_s - r_u).norm() + iono_m + tropo_m) / kSpeedOfLight;
}

struct ReceivedPower {
    double carrier_w = 0.0;
    double cn0_dbhz = 0.0;
    double amplitude = 0.0;  // sqrt(carrier_w), the synthesis scale
};

/// Friis link budget; n0_w_hz <= 0 leaves cn0 unset (noiseless scenarios).
inline ReceivedPower received_power(double p_tx_w, double g_tx_dbi, double g_rx_dbi,
                                    double range_m, double f_hz, double l_atm = 1.0,
                                    double n0_w_hz = 0.0) {
    if (!(range_m > 0.0)) throw std::invalid_argument("received_power: range must be positive");
    if (!(l_atm > 0.0 && l_atm <= 1.0))
        throw std::invalid_argument("received_power: L_atm must be in (0, 1]");
    const double lambda = kSpeedOfLight / f_hz;
    const double gains = std::pow(10.0, (g_tx_dbi + g_rx_dbi) / 10.0);
    const double spreading = lambda / (4.0 * kPi * range_m);
    ReceivedPower out;
    out.carrier_w = p_tx_w * gains * spreading * spreading * l_atm;
    out.amplitude = std::sqrt(out.carrier_w);
    out.cn0_dbhz = (n0_w_hz > 0.0) ? 10.0 * std::log10(out.carrier_w / n0_w_hz) : 0.0;
    return out;
}

struct LightTimeSolution {
    SatState sat;          // state at emission, position rotated to rx frame
    double tau_geo_s = 0.0;
    double range_m = 0.0;
};

/// Emission-time solution t_tx = t_rx - tau by fixed-point iteration, with
/// Earth-rotation compensation of the emission position (configurable).
inline LightTimeSolution solve_light_time(const BroadcastEphemeris& eph, const GpsTime& t_rx,
                                          const Vec3& r_u, bool sagnac = true) {
    double tau = 0.070;
    LightTimeSolution out;
    for (int i = 0; i < 3; ++i) {
        out.sat = sat_state_at(eph, t_rx - tau);
        Vec3 r = out.sat.r_ecef;
        if (sagnac) r = sagnac_rotate(r, tau);
        tau = (r - r_u).norm() / kSpeedOfLight;
    }
    out.sat.r_ecef = sagnac ? sagnac_rotate(out.sat.r_ecef, tau) : out.sat.r_ecef;
    out.sat.v_ecef = sagnac ? sagnac_rotate(out.sat.v_ecef, tau) : out.sat.v_ecef;
    out.tau_geo_s = tau;
    out.range_m = tau * kSpeedOfLight;
    return out;
}

struct DopplerConsistency {
    double rms_hz = 0.0;
    double max_hz = 0.0;
    double max_doppler_rate_hz_s = 0.0;
    std::size_t count = 0;
};

/// Physics-consistency check: line-of-sight Doppler against the central
/// difference of the instantaneous range, sampled at the trajectory rate.
/// Also reports the peak Doppler rate seen along the trajectory.
template <typename TrajectoryT>
inline DopplerConsistency doppler_consistency(const BroadcastEphemeris& eph,
                                              const TrajectoryT& traj) {
    DopplerConsistency out;
    double sum_sq = 0.0;
    double prev_fd = 0.0;
    bool have_prev = false;
    for (std::size_t i = 1; i + 1 < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        const auto sat = sat_state_at(eph, GpsTime(traj.week, s.tow));
        const double fd = los_doppler(sat.r_ecef, sat.v_ecef, s.r, s.v);

        const auto& sm = traj.samples[i - 1];
        const auto& sp = traj.samples[i + 1];
        const double rm = (sat_state_at(eph, GpsTime(traj.week, sm.tow)).r_ecef - sm.r).norm();
        const double rp = (sat_state_at(eph, GpsTime(traj.week, sp.tow)).r_ecef - sp.r).norm();
        const double fd_fd = -(kL1Hz / kSpeedOfLight) * (rp - rm) / (sp.tow - sm.tow);

        const double err = fd - fd_fd;
        sum_sq += err * err;
        out.max_hz = std::max(out.max_hz, std::abs(err));
        if (have_prev)
            out.max_doppler_rate_hz_s =
                std::max(out.max_doppler_rate_hz_s, std::abs(fd - prev_fd) * traj.rate_hz);
        prev_fd = fd;
        have_prev = true;
        ++out.count;
    }
    out.rms_hz = out.count ? std::sqrt(sum_sq / static_cast<double>(out.count)) : 0.0;
    return out;
}

}  // namespace gnsstwin
