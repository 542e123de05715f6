#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gnsstwin/geodesy.hpp"
#include "gnsstwin/gps_time.hpp"

namespace gnsstwin {

struct TrajectorySample {
    double tow = 0.0;       // s of week
    Vec3 r = Vec3::Zero();  // ECEF, m
    Vec3 v = Vec3::Zero();  // ECEF, m/s
    Vec3 a = Vec3::Zero();  // ECEF, m/s^2
};

/// Dense user trajectory at a fixed rate, with cubic Hermite evaluation
/// between stored samples (C1-continuous position, so Doppler derived from
/// it stays smooth).
struct Trajectory {
    int week = 0;
    double rate_hz = 100.0;
    std::vector<TrajectorySample> samples;

    double t_begin() const { return samples.front().tow; }
    double t_end() const { return samples.back().tow; }

    TrajectorySample at(double tow) const {
        if (samples.empty()) throw std::runtime_error("empty trajectory");
        if (tow <= samples.front().tow) return samples.front();
        if (tow >= samples.back().tow) return samples.back();
        const double dt = 1.0 / rate_hz;
        auto idx = static_cast<std::size_t>((tow - samples.front().tow) / dt);
        if (idx >= samples.size() - 1) idx = samples.size() - 2;
        const auto& s0 = samples[idx];
        const auto& s1 = samples[idx + 1];
        const double h = s1.tow - s0.tow;
        const double u = (tow - s0.tow) / h;

        const double u2 = u * u, u3 = u2 * u;
        const double h00 = 2 * u3 - 3 * u2 + 1;
        const double h10 = u3 - 2 * u2 + u;
        const double h01 = -2 * u3 + 3 * u2;
        const double h11 = u3 - u2;

        TrajectorySample out;
        out.tow = tow;
        out.r = h00 * s0.r + h10 * h * s0.v + h01 * s1.r + h11 * h * s1.v;
        // Velocity from the Hermite of (v, a); acceleration linearly blended.
        out.v = h00 * s0.v + h10 * h * s0.a + h01 * s1.v + h11 * h * s1.a;
        out.a = (1.0 - u) * s0.a + u * s1.a;
        return out;
    }
};

struct StaticProfile {
    Geodetic position;
};

struct ModerateWaypoint {
    double t = 0.0;  // s from start
    double east_m = 0.0;
    double north_m = 0.0;
};

struct ModerateProfile {
    Geodetic start;
    std::vector<ModerateWaypoint> waypoints;  // first entry must be (0, 0, 0)
    double corner_s = 2.0;                    // velocity blend window at waypoints
};

struct HighDynamicsProfile {
    Geodetic launch;
    double speed_mps = 1200.0;
    double elevation_deg = 45.0;
    double azimuth_deg = 90.0;
    double drag_area_over_mass = 2.6e-4;  // Cd*A/m, m^2/kg; 0 disables drag
    double required_peak_accel = 196.133;  // 20 g
};

inline Trajectory build_static_trajectory(const StaticProfile& p, const GpsTime& t0,
                                          double duration_s, double rate_hz = 100.0) {
    if (duration_s <= 0.0) throw std::invalid_argument("trajectory duration must be positive");
    if (rate_hz < 100.0) throw std::invalid_argument("trajectory rate must be >= 100 Hz");
    Trajectory out;
    out.week = t0.week;
    out.rate_hz = rate_hz;
    const Vec3 r = ecef_from_geodetic(p.position);
    const auto n = static_cast<std::size_t>(std::ceil(duration_s * rate_hz)) + 1;
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.samples.push_back({t0.tow + static_cast<double>(i) / rate_hz, r, Vec3::Zero(), Vec3::Zero()});
    return out;
}

namespace detail {

// Smoothstep blend and its integral, used for C1 velocity at corners.
inline double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
inline double smoothstep_integral(double u) { return u * u * u - 0.5 * u * u * u * u; }

}  // namespace detail

/// Piecewise constant-velocity legs between timed ENU waypoints, with the
/// velocity blended over `corner_s` around each interior waypoint. Velocity
/// is the exact analytic derivative of the emitted position.
inline Trajectory build_moderate_trajectory(const ModerateProfile& p, const GpsTime& t0,
                                            double duration_s, double rate_hz = 100.0) {
    if (duration_s <= 0.0) throw std::invalid_argument("trajectory duration must be positive");
    if (rate_hz < 100.0) throw std::invalid_argument("trajectory rate must be >= 100 Hz");
    if (p.waypoints.size() < 2) throw std::invalid_argument("moderate profile needs >= 2 waypoints");
    for (std::size_t i = 1; i < p.waypoints.size(); ++i)
        if (!(p.waypoints[i].t > p.waypoints[i - 1].t))
            throw std::invalid_argument("moderate profile waypoint times must be increasing");

    // Per-leg constant velocities in the ENU plane.
    std::vector<Eigen::Vector2d> leg_v;
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
        const double dt = p.waypoints[i].t - p.waypoints[i - 1].t;
        const Eigen::Vector2d dv(p.waypoints[i].east_m - p.waypoints[i - 1].east_m,
                                 p.waypoints[i].north_m - p.waypoints[i - 1].north_m);
        const Eigen::Vector2d v = dv / dt;
        if (v.norm() > 30.0 + 1e-9)
            throw std::invalid_argument("moderate profile leg speed exceeds 30 m/s");
        leg_v.push_back(v);
    }

    const double tc = p.corner_s;
    auto velocity_at = [&](double t) -> Eigen::Vector2d {
        // Blend between legs inside +/- tc/2 of interior waypoints.
        if (t <= p.waypoints.front().t) return leg_v.front();
        for (std::size_t i = 1; i + 1 < p.waypoints.size(); ++i) {
            const double tw = p.waypoints[i].t;
            if (t < tw - tc / 2.0) return leg_v[i - 1];
            if (t <= tw + tc / 2.0) {
                const double u = (t - (tw - tc / 2.0)) / tc;
                return leg_v[i - 1] + (leg_v[i] - leg_v[i - 1]) * detail::smoothstep(u);
            }
        }
        return leg_v.back();
    };
    auto accel_at = [&](double t) -> Eigen::Vector2d {
        for (std::size_t i = 1; i + 1 < p.waypoints.size(); ++i) {
            const double tw = p.waypoints[i].t;
            if (t >= tw - tc / 2.0 && t <= tw + tc / 2.0) {
                const double u = (t - (tw - tc / 2.0)) / tc;
                const double ds = 6.0 * u * (1.0 - u) / tc;
                return (leg_v[i] - leg_v[i - 1]) * ds;
            }
        }
        return Eigen::Vector2d::Zero();
    };

    const EnuFrame frame(p.start);
    const Vec3 anchor = ecef_from_geodetic(p.start);

    Trajectory out;
    out.week = t0.week;
    out.rate_hz = rate_hz;
    const auto n = static_cast<std::size_t>(std::ceil(duration_s * rate_hz)) + 1;
    out.samples.reserve(n);

    // Interval breakpoints: even intervals are constant legs, odd intervals
    // are the blend windows around interior waypoints.
    std::vector<double> breaks{p.waypoints.front().t};
    for (std::size_t i = 1; i + 1 < p.waypoints.size(); ++i) {
        breaks.push_back(p.waypoints[i].t - tc / 2.0);
        breaks.push_back(p.waypoints[i].t + tc / 2.0);
    }
    breaks.push_back(1e30);
    for (std::size_t b = 1; b + 1 < breaks.size(); ++b)
        if (!(breaks[b] > breaks[b - 1]))
            throw std::invalid_argument("moderate profile corner window exceeds a leg duration");

    // Exact integral of the blended velocity (closed-form smoothstep integral).
    auto position_at = [&](double t) -> Eigen::Vector2d {
        Eigen::Vector2d pos(p.waypoints.front().east_m, p.waypoints.front().north_m);
        for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
            const double lo = breaks[j];
            if (lo >= t) break;
            const double hi = std::min(breaks[j + 1], t);
            if (hi <= lo) continue;
            if (j % 2 == 0) {
                pos += leg_v[j / 2] * (hi - lo);
            } else {
                const std::size_t leg = (j - 1) / 2;
                const Eigen::Vector2d dv = leg_v[leg + 1] - leg_v[leg];
                const double u1 = (hi - lo) / tc;
                pos += leg_v[leg] * (hi - lo) + dv * tc * detail::smoothstep_integral(u1);
            }
        }
        return pos;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        const Eigen::Vector2d pos = position_at(t);
        const Eigen::Vector2d vel = velocity_at(t);
        const Eigen::Vector2d acc = accel_at(t);
        TrajectorySample s;
        s.tow = t0.tow + t;
        s.r = anchor + frame.to_ecef(Vec3(pos.x(), pos.y(), 0.0));
        s.v = frame.to_ecef(Vec3(vel.x(), vel.y(), 0.0));
        s.a = frame.to_ecef(Vec3(acc.x(), acc.y(), 0.0));
        out.samples.push_back(s);
    }
    return out;
}

/// Point-mass ballistic integration (central gravity + exponential-atmosphere
/// drag), RK4 at the trajectory rate. Errors out if the requested peak
/// acceleration is unreachable with the given launch state.
inline Trajectory build_high_dynamics_trajectory(const HighDynamicsProfile& p, const GpsTime& t0,
                                                 double duration_s, double rate_hz = 100.0) {
    if (duration_s <= 0.0) throw std::invalid_argument("trajectory duration must be positive");
    if (rate_hz < 100.0) throw std::invalid_argument("trajectory rate must be >= 100 Hz");

    const Vec3 r0 = ecef_from_geodetic(p.launch);
    const EnuFrame frame(p.launch);
    const double el = p.elevation_deg * kDegToRad;
    const double az = p.azimuth_deg * kDegToRad;
    const Vec3 v0 = frame.to_ecef(Vec3(p.speed_mps * std::cos(el) * std::sin(az),
                                       p.speed_mps * std::cos(el) * std::cos(az),
                                       p.speed_mps * std::sin(el)));

    const double ground_h = p.launch.height_m;
    auto accel = [&](const Vec3& r, const Vec3& v) -> Vec3 {
        const Vec3 gravity = -kGmEarth / std::pow(r.norm(), 3) * r;
        if (p.drag_area_over_mass <= 0.0) return gravity;
        const double h = geodetic_from_ecef(r).height_m;
        const double rho = 1.225 * std::exp(-std::max(h, 0.0) / 8500.0);
        const Vec3 drag = -0.5 * rho * p.drag_area_over_mass * v.norm() * v;
        return gravity + drag;
    };

    const double a_peak_launch = accel(r0, v0).norm();
    if (a_peak_launch < p.required_peak_accel)
        throw std::invalid_argument(
            "high-dynamics profile cannot reach the requested peak acceleration: launch gives " +
            std::to_string(a_peak_launch) + " m/s^2");

    Trajectory out;
    out.week = t0.week;
    out.rate_hz = rate_hz;
    const double dt = 1.0 / rate_hz;
    const auto n = static_cast<std::size_t>(std::ceil(duration_s * rate_hz)) + 1;
    out.samples.reserve(n);

    Vec3 r = r0, v = v0;
    bool landed = false;
    for (std::size_t i = 0; i < n; ++i) {
        // Freeze on the ground after impact (keeps the trajectory dense and
        // monotone for any configured duration).
        if (!landed && i > 0 && geodetic_from_ecef(r).height_m <= ground_h && v.dot(r) < 0.0) {
            landed = true;
            v = Vec3::Zero();
        }
        out.samples.push_back(
            {t0.tow + static_cast<double>(i) * dt, r, v, landed ? Vec3::Zero() : accel(r, v)});
        if (landed) continue;
        const Vec3 k1r = v, k1v = accel(r, v);
        const Vec3 k2r = v + 0.5 * dt * k1v, k2v = accel(r + 0.5 * dt * k1r, v + 0.5 * dt * k1v);
        const Vec3 k3r = v + 0.5 * dt * k2v, k3v = accel(r + 0.5 * dt * k2r, v + 0.5 * dt * k2v);
        const Vec3 k4r = v + dt * k3v, k4v = accel(r + dt * k3r, v + dt * k3v);
        r += dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
        v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return out;
}

}  // namespace gnsstwin
