#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "gnsstwin/channel.hpp"
#include "gnsstwin/geodesy.hpp"
#include "gnsstwin/orbits.hpp"
#include "gnsstwin/trajectory.hpp"

namespace gnsstwin {

/// One satellite's prepared measurement at a common reception epoch.
/// Pseudorange is satellite-clock corrected (and atmosphere corrected when
/// the caller applies models); doppler follows the carrier sign convention
/// (positive when closing).
struct PvtObservation {
    int prn = 0;
    double pseudorange_m = 0.0;
    double doppler_hz = 0.0;
    bool has_doppler = false;
};

struct PvtSolution {
    GpsTime t_rx;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double clock_bias_s = 0.0;
    double clock_drift_sps = 0.0;
    std::vector<int> used_prns;
    double residual_rms_m = 0.0;
    double gdop = 0.0, pdop = 0.0, hdop = 0.0, vdop = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Iterative linearized least squares on [x y z c*b] with Sagnac-rotated
/// emission-time satellite states; velocity and clock drift from a Doppler
/// least squares over the same geometry.
inline PvtSolution solve_pvt(const std::vector<PvtObservation>& obs,
                             const std::map<int, BroadcastEphemeris>& ephs, const GpsTime& t_rx,
                             const Vec3& initial_position = Vec3::Zero()) {
    if (obs.size() < 4) throw std::invalid_argument("solve_pvt: need at least 4 observations");

    struct SatPrep {
        Vec3 pos, vel;
        double clock_drift = 0.0;
        double pr = 0.0;
        double doppler = 0.0;
        bool has_doppler = false;
        int prn = 0;
    };
    std::vector<SatPrep> sats;
    for (const auto& o : obs) {
        const auto it = ephs.find(o.prn);
        if (it == ephs.end())
            throw std::invalid_argument("solve_pvt: no ephemeris for PRN " + std::to_string(o.prn));
        // Emission state: the pseudorange already contains c*b, which only
        // biases t_tx by the (unknown) receiver bias; one refinement pass
        // after convergence would change positions by < 1 mm per ms of bias,
        // so the standard single pass is used.
        const double tau = o.pseudorange_m / kSpeedOfLight;
        const auto st = sat_state_at(it->second, t_rx - tau);
        SatPrep p;
        p.pos = sagnac_rotate(st.r_ecef, tau);
        p.vel = sagnac_rotate(st.v_ecef, tau);
        p.clock_drift = st.clock_drift;
        p.pr = o.pseudorange_m;
        p.doppler = o.doppler_hz;
        p.has_doppler = o.has_doppler;
        p.prn = o.prn;
        sats.push_back(p);
    }

    PvtSolution sol;
    sol.t_rx = t_rx;
    Eigen::Vector4d state(initial_position.x(), initial_position.y(), initial_position.z(), 0.0);

    const auto n = static_cast<Eigen::Index>(sats.size());
    Eigen::MatrixXd h(n, 4);
    Eigen::VectorXd dz(n);
    for (int iter = 0; iter < 10; ++iter) {
        sol.iterations = iter + 1;
        const Vec3 pos = state.head<3>();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3 los = sats[static_cast<std::size_t>(i)].pos - pos;
            const double range = los.norm();
            const Vec3 u = los / range;
            h(i, 0) = -u.x();
            h(i, 1) = -u.y();
            h(i, 2) = -u.z();
            h(i, 3) = 1.0;
            dz(i) = sats[static_cast<std::size_t>(i)].pr - (range + state(3));
        }
        const Eigen::Vector4d dx = (h.transpose() * h).ldlt().solve(h.transpose() * dz);
        state += dx;
        if (dx.head<3>().norm() < 1e-6) {
            sol.converged = true;
            break;
        }
    }
    if (!sol.converged) throw std::runtime_error("solve_pvt: iteration diverged");

    sol.position = state.head<3>();
    sol.clock_bias_s = state(3) / kSpeedOfLight;

    // Residuals and DOP at the solution.
    double rss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 los = sats[static_cast<std::size_t>(i)].pos - sol.position;
        const double r = sats[static_cast<std::size_t>(i)].pr - (los.norm() + state(3));
        rss += r * r;
        sol.used_prns.push_back(sats[static_cast<std::size_t>(i)].prn);
    }
    sol.residual_rms_m = std::sqrt(rss / static_cast<double>(n));

    const Eigen::Matrix4d q = (h.transpose() * h).inverse();
    sol.gdop = std::sqrt(q.trace());
    sol.pdop = std::sqrt(q(0, 0) + q(1, 1) + q(2, 2));
    if (!(sol.gdop <= 50.0))  // NaN-proof: singular geometry inverts to NaN
        throw std::runtime_error("solve_pvt: degenerate geometry (GDOP > 50)");
    const EnuFrame frame(sol.position);
    Eigen::Matrix3d r_enu;
    r_enu.row(0) = frame.east.transpose();
    r_enu.row(1) = frame.north.transpose();
    r_enu.row(2) = frame.up.transpose();
    const Eigen::Matrix3d q_enu = r_enu * q.topLeftCorner<3, 3>() * r_enu.transpose();
    sol.hdop = std::sqrt(q_enu(0, 0) + q_enu(1, 1));
    sol.vdop = std::sqrt(q_enu(2, 2));

    // Velocity: -lambda f_D = u.(v_s - v_u) - c dtdot_sv + c bdot.
    std::vector<Eigen::Index> vel_rows;
    for (Eigen::Index i = 0; i < n; ++i)
        if (sats[static_cast<std::size_t>(i)].has_doppler) vel_rows.push_back(i);
    if (vel_rows.size() >= 4) {
        Eigen::MatrixXd hv(static_cast<Eigen::Index>(vel_rows.size()), 4);
        Eigen::VectorXd zv(static_cast<Eigen::Index>(vel_rows.size()));
        for (std::size_t k = 0; k < vel_rows.size(); ++k) {
            const auto& sp = sats[static_cast<std::size_t>(vel_rows[k])];
            const Vec3 los = sp.pos - sol.position;
            const Vec3 u = los / los.norm();
            hv(static_cast<Eigen::Index>(k), 0) = -u.x();
            hv(static_cast<Eigen::Index>(k), 1) = -u.y();
            hv(static_cast<Eigen::Index>(k), 2) = -u.z();
            hv(static_cast<Eigen::Index>(k), 3) = 1.0;
            const double pr_rate = -kL1WavelengthM * sp.doppler + kSpeedOfLight * sp.clock_drift;
            zv(static_cast<Eigen::Index>(k)) = pr_rate - u.dot(sp.vel);
        }
        const Eigen::Vector4d vsol = (hv.transpose() * hv).ldlt().solve(hv.transpose() * zv);
        sol.velocity = vsol.head<3>();
        sol.clock_drift_sps = vsol(3) / kSpeedOfLight;
    }
    return sol;
}

struct EnuError {
    GpsTime t;
    double east_m = 0.0, north_m = 0.0, up_m = 0.0;
    double horizontal_m = 0.0;
};

struct PositionErrorSummary {
    std::vector<EnuError> per_epoch;
    double horizontal_rms_m = 0.0;
    double horizontal_max_m = 0.0;
    double horizontal_p95_m = 0.0;
    double rms_3d_m = 0.0;
    double max_3d_m = 0.0;
};

/// ENU errors of PVT solutions against the truth trajectory (Hermite
/// interpolation between truth samples).
inline PositionErrorSummary position_errors(const std::vector<PvtSolution>& solutions,
                                            const Trajectory& truth) {
    PositionErrorSummary out;
    if (solutions.empty()) return out;
    double sum_h2 = 0.0, sum_3d2 = 0.0;
    std::vector<double> horiz;
    for (const auto& sol : solutions) {
        const double tow = sol.t_rx.tow + (sol.t_rx.week - truth.week) * kSecondsPerWeek;
        const auto ref = truth.at(tow);
        const EnuFrame frame(ref.r);
        const Vec3 err = frame.to_enu(sol.position - ref.r);
        EnuError e;
        e.t = sol.t_rx;
        e.east_m = err.x();
        e.north_m = err.y();
        e.up_m = err.z();
        e.horizontal_m = std::hypot(err.x(), err.y());
        out.per_epoch.push_back(e);
        horiz.push_back(e.horizontal_m);
        sum_h2 += e.horizontal_m * e.horizontal_m;
        const double d3 = err.norm();
        sum_3d2 += d3 * d3;
        out.horizontal_max_m = std::max(out.horizontal_max_m, e.horizontal_m);
        out.max_3d_m = std::max(out.max_3d_m, d3);
    }
    const auto n = static_cast<double>(out.per_epoch.size());
    out.horizontal_rms_m = std::sqrt(sum_h2 / n);
    out.rms_3d_m = std::sqrt(sum_3d2 / n);
    std::sort(horiz.begin(), horiz.end());
    const auto idx = static_cast<std::size_t>(std::ceil(0.95 * n)) - 1;
    out.horizontal_p95_m = horiz[std::min(idx, horiz.size() - 1)];
    return out;
}

}  // namespace gnsstwin
