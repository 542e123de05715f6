#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <thread>
#include <vector>

#include "gnsstwin/cacode.hpp"
#include "gnsstwin/channel.hpp"
#include "gnsstwin/csv.hpp"
#include "gnsstwin/ifdata.hpp"
#include "gnsstwin/impairments.hpp"
#include "gnsstwin/lnav.hpp"
#include "gnsstwin/orbits.hpp"
#include "gnsstwin/rinex.hpp"
#include "gnsstwin/scenario.hpp"
#include "gnsstwin/synth.hpp"

namespace gnsstwin {

/// Everything the synthesizer and the truth CSVs are built from.
struct TruthBundle {
    Trajectory trajectory;
    EphemerisSet ephs;
    std::vector<int> prns;
    std::map<int, ChannelTruth> direct;
    std::vector<ChannelTruth> replicas;  // multipath rays
    std::map<int, NavMessage> navs;
    double nav_origin_tow = 0.0;
    std::map<int, std::vector<TruthObservable>> observables;  // at 10 Hz
    double truth_rate_hz = 100.0;
    double obs_rate_hz = 10.0;
};

namespace detail {

inline AntennaPattern antenna_from_config(const ScenarioConfig& cfg) {
    if (cfg.rx_antenna == "isotropic") return AntennaPattern::isotropic();
    if (cfg.rx_antenna == "hemispherical") return AntennaPattern::hemispherical();
    const auto path = cfg.base_dir / cfg.rx_antenna;
    return AntennaPattern::from_file(path.string());
}

}  // namespace detail

inline Trajectory build_trajectory(const ScenarioConfig& cfg) {
    switch (cfg.motion) {
        case MotionClass::static_user:
            return build_static_trajectory(cfg.static_profile, cfg.start_epoch, cfg.duration_s + 0.5);
        case MotionClass::moderate:
            return build_moderate_trajectory(cfg.moderate_profile, cfg.start_epoch,
                                             cfg.duration_s + 0.5);
        case MotionClass::high_dynamics:
            return build_high_dynamics_trajectory(cfg.high_dynamics_profile, cfg.start_epoch,
                                                  cfg.duration_s + 0.5);
    }
    throw std::logic_error("unreachable motion class");
}

/// Per-satellite delay/Doppler/power timelines on the truth grid, the truth
/// observable tables, and nav messages. The only randomness in the whole
/// generator is the AWGN stream, so this bundle is fully deterministic.
inline TruthBundle build_truth(const ScenarioConfig& cfg) {
    TruthBundle tb;
    tb.ephs = load_ephemerides((cfg.base_dir / cfg.ephemeris_path).string(), cfg.start_epoch);
    tb.trajectory = build_trajectory(cfg);

    const AntennaPattern rx_ant = detail::antenna_from_config(cfg);
    const GpsTime t0 = cfg.start_epoch;
    const double mask = cfg.elevation_mask_deg * kDegToRad;

    // Visibility at scenario start decides the channel set.
    {
        const Vec3 r0 = tb.trajectory.samples.front().r;
        for (const auto& [prn, eph] : tb.ephs.by_prn) {
            if (cfg.prn_allowlist && !cfg.prn_allowlist->count(prn)) continue;
            const auto lt = solve_light_time(eph, t0, r0);
            if (elevation_azimuth(r0, lt.sat.r_ecef).elevation_rad >= mask) tb.prns.push_back(prn);
        }
    }
    if (tb.prns.empty()) throw std::runtime_error("no satellite is visible above the mask");

    // Nav messages from a subframe boundary comfortably before the start;
    // the lead-in can reach a full 6 s subframe, so size the bit stream from
    // the origin, not from t0.
    tb.nav_origin_tow = std::floor((t0.tow - 0.35) / 6.0) * 6.0;
    const double lead_s = t0.tow - tb.nav_origin_tow;
    const auto n_bits = static_cast<std::size_t>((lead_s + cfg.duration_s + 1.0) * 50.0) + 20;
    for (int prn : tb.prns)
        tb.navs[prn] =
            build_nav_message(tb.ephs.by_prn.at(prn), GpsTime(t0.week, tb.nav_origin_tow), n_bits);

    const double dt = 1.0 / tb.truth_rate_hz;
    const auto n_grid = static_cast<std::size_t>(std::ceil((cfg.duration_s + 0.2) / dt)) + 2;
    const double n0_for_cn0 = cfg.noise_density_w_hz;

    const int obs_stride = static_cast<int>(std::llround(tb.truth_rate_hz / tb.obs_rate_hz));

    for (int prn : tb.prns) {
        const auto& eph = tb.ephs.by_prn.at(prn);
        ChannelTruth truth;
        truth.prn = prn;
        truth.rate_hz = tb.truth_rate_hz;

        std::vector<double> tau_code(n_grid), tau_carr(n_grid);
        for (std::size_t k = 0; k < n_grid; ++k) {
            const double t_rel = static_cast<double>(k) * dt;
            const double bias = cfg.rx_clock_bias_s + cfg.rx_clock_drift_sps * t_rel;
            const GpsTime t_label = t0 + t_rel;
            const GpsTime t_true = t_label - bias;
            const auto user = tb.trajectory.at(t_true.tow + (t_true.week - tb.trajectory.week) *
                                                                kSecondsPerWeek);
            const auto lt = solve_light_time(eph, t_true, user.r);
            const auto ea = elevation_azimuth(user.r, lt.sat.r_ecef);

            double iono_m = 0.0, tropo_m = 0.0;
            if (cfg.iono_enabled && tb.ephs.klobuchar.valid && ea.elevation_rad > 0.0) {
                const Geodetic g = geodetic_from_ecef(user.r);
                iono_m = klobuchar_delay_m(tb.ephs.klobuchar, g, ea.elevation_rad, ea.azimuth_rad,
                                           t_true.tow);
            }
            if (cfg.tropo_enabled) {
                const Geodetic g = geodetic_from_ecef(user.r);
                const double ztd = saastamoinen_ztd_m(cfg.meteo, g.lat_rad, g.height_m / 1000.0,
                                                      cfg.magnus_237);
                tropo_m = ztd * tropo_mapping(std::max(ea.elevation_rad, mask));
            }

            // L1 SV clock: broadcast polynomial + relativistic term - TGD
            // (the af terms are defined for the dual-frequency point; the L1
            // user correction subtracts TGD, so the emitted timing carries it).
            const double dt_sv = lt.sat.clock_offset_s - eph.tgd;
            tau_code[k] = lt.tau_geo_s + (iono_m + tropo_m) / kSpeedOfLight + bias - dt_sv;
            const double iono_carr = cfg.carrier_phase_advance ? -iono_m : iono_m;
            tau_carr[k] = lt.tau_geo_s + (iono_carr + tropo_m) / kSpeedOfLight + bias - dt_sv;

            double amplitude, cn0 = 0.0;
            if (cfg.cn0_override_dbhz > 0.0) {
                cn0 = cfg.cn0_override_dbhz;
                amplitude = cfg.noise_enabled
                                ? std::sqrt(n0_for_cn0 * std::pow(10.0, cn0 / 10.0))
                                : 1.0;
            } else {
                const auto rp = received_power(std::pow(10.0, cfg.eirp_dbw / 10.0), 0.0,
                                               rx_ant.gain_at(ea.elevation_rad), lt.range_m, kL1Hz,
                                               cfg.l_atm, n0_for_cn0);
                amplitude = rp.amplitude;
                cn0 = rp.cn0_dbhz;
            }
            truth.amplitude.push_back(amplitude);

            // Truth observables on the decimated grid.
            if (k % static_cast<std::size_t>(obs_stride) == 0 &&
                t_rel <= cfg.duration_s + 1e-9) {
                const auto sat_now = sat_state_at(eph, t_true);
                TruthObservable to;
                to.t_rx = t_label;
                to.prn = prn;
                to.geometric_range_m = lt.range_m;
                to.tau_total_s = lt.tau_geo_s + (iono_m + tropo_m) / kSpeedOfLight;
                to.iono_delay_m = iono_m;
                to.tropo_delay_m = tropo_m;
                to.doppler_hz = los_doppler(sat_now.r_ecef, sat_now.v_ecef, user.r, user.v);
                to.elevation_rad = ea.elevation_rad;
                to.azimuth_rad = ea.azimuth_rad;
                to.carrier_power_w = amplitude * amplitude;
                to.cn0_dbhz = cn0;
                tb.observables[prn].push_back(to);
            }
        }

        // Rates from the delay series: central differences inside, one-sided
        // at the ends; piecewise-linear interpolation happens in the synth.
        truth.code_rate_cps.resize(n_grid);
        truth.carrier_freq_hz.resize(n_grid);
        for (std::size_t k = 0; k < n_grid; ++k) {
            double dcode, dcarr;
            if (k == 0) {
                dcode = (tau_code[1] - tau_code[0]) / dt;
                dcarr = (tau_carr[1] - tau_carr[0]) / dt;
            } else if (k + 1 == n_grid) {
                dcode = (tau_code[k] - tau_code[k - 1]) / dt;
                dcarr = (tau_carr[k] - tau_carr[k - 1]) / dt;
            } else {
                dcode = (tau_code[k + 1] - tau_code[k - 1]) / (2.0 * dt);
                dcarr = (tau_carr[k + 1] - tau_carr[k - 1]) / (2.0 * dt);
            }
            truth.code_rate_cps[k] = kCaChipRateHz * (1.0 - dcode);
            truth.carrier_freq_hz[k] = cfg.if_center_hz - kL1Hz * dcarr;
        }

        truth.code_chips0 = (t0.tow - tb.nav_origin_tow - tau_code[0]) * kCaChipRateHz;
        truth.carrier_cycles0 = -kL1Hz * tau_carr[0];
        if (truth.code_chips0 < 0.0)
            throw std::runtime_error("nav lead-in too short for the configured clock bias");

        tb.direct[prn] = std::move(truth);
    }

    // Multipath replicas reuse the direct timelines.
    for (const auto& spec : cfg.multipath) {
        const auto it = tb.direct.find(spec.prn);
        if (it == tb.direct.end()) continue;  // PRN not visible in this scenario
        for (const auto& path : spec.paths)
            tb.replicas.push_back(make_multipath_truth(it->second, path));
    }
    return tb;
}

struct GenerateResult {
    std::filesystem::path if_path;
    std::filesystem::path sidecar_path;
    std::filesystem::path observables_path;
    std::filesystem::path trajectory_path;
    std::string config_digest;
    std::uint64_t n_samples = 0;
    std::uint64_t clip_count = 0;
    std::vector<int> prns;
};

/// Full generation: truth tables, per-channel synthesis (channels split
/// across threads, summation order fixed), impairments, calibrated AWGN,
/// quantization, and the IF + sidecar + truth CSV outputs.
inline GenerateResult run_generate(const ScenarioConfig& cfg, const std::filesystem::path& outdir,
                                   const std::string& config_digest = "", int threads = 2) {
    std::filesystem::create_directories(outdir);
    const TruthBundle tb = build_truth(cfg);

    struct RenderChannel {
        const ChannelTruth* truth;
        const SpreadingCode* code;
        const NavMessage* nav;
        ChannelState state;
    };
    std::map<int, SpreadingCode> codes;
    for (int prn : tb.prns) codes[prn] = ca_code(prn);

    std::vector<RenderChannel> channels;
    for (int prn : tb.prns)
        channels.push_back({&tb.direct.at(prn), &codes.at(prn), &tb.navs.at(prn),
                            make_channel_state(tb.direct.at(prn))});
    for (const auto& replica : tb.replicas)
        channels.push_back({&replica, &codes.at(replica.prn), &tb.navs.at(replica.prn),
                            make_channel_state(replica)});

    // Interference amplitudes: J/S referenced to a PRN's amplitude at t = 0.
    std::vector<InterferenceSpec> interference;
    for (const auto& ic : cfg.interference) {
        InterferenceSpec spec = ic.spec;
        if (ic.amplitude_from_jsr) {
            const auto it = tb.direct.find(ic.ref_prn);
            if (it == tb.direct.end())
                throw std::runtime_error("interference ref_prn is not a visible satellite");
            spec.amplitude = it->second.amplitude.front() * std::pow(10.0, ic.jsr_db / 20.0);
        }
        spec.validate(cfg.sample_rate_hz);
        interference.push_back(spec);
    }

    // Quantizer headroom from the analytic composite deviation.
    const double n0 = cfg.noise_enabled ? cfg.noise_density_w_hz : 0.0;
    double var_per_quadrature = n0 * cfg.sample_rate_hz / 2.0;
    for (const auto& ch : channels)
        var_per_quadrature += 0.5 * ch.truth->amplitude.front() * ch.truth->amplitude.front();
    for (const auto& spec : interference) {
        double duty = 1.0;
        if (spec.kind == InterferenceSpec::Kind::pulse)
            duty = spec.pulse_width_s / spec.pulse_period_s;
        var_per_quadrature += 0.5 * duty * spec.amplitude * spec.amplitude;
    }
    const double sigma = std::sqrt(var_per_quadrature);

    GenerateResult result;
    result.if_path = outdir / "ifdata.bin";
    result.sidecar_path = outdir / "ifdata.bin.sidecar.json";
    result.observables_path = outdir / "truth_observables.csv";
    result.trajectory_path = outdir / "truth_trajectory.csv";
    result.config_digest = config_digest;
    result.prns = tb.prns;

    const auto total = static_cast<std::uint64_t>(std::llround(cfg.duration_s * cfg.sample_rate_hz));
    const auto block = static_cast<std::size_t>(std::llround(0.1 * cfg.sample_rate_hz));
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(n0 * cfg.sample_rate_hz / 2.0));

    IfWriter writer(result.if_path, cfg.quantization_bits);
    const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(channels.size())));
    std::vector<std::vector<std::complex<double>>> buffers(
        static_cast<std::size_t>(n_threads));

    std::uint64_t done = 0;
    while (done < total) {
        const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(block, total - done));
        for (auto& buf : buffers) buf.assign(n, {0.0, 0.0});

        if (n_threads == 1) {
            for (auto& ch : channels)
                synthesize_channel_block(ch.state, *ch.truth, *ch.code, *ch.nav, buffers[0].data(),
                                         n, cfg.sample_rate_hz);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
            for (int t = 0; t < n_threads; ++t) {
                pool.emplace_back([&, t]() {
                    try {
                        for (std::size_t c = static_cast<std::size_t>(t); c < channels.size();
                             c += static_cast<std::size_t>(n_threads)) {
                            auto& ch = channels[c];
                            synthesize_channel_block(ch.state, *ch.truth, *ch.code, *ch.nav,
                                                     buffers[static_cast<std::size_t>(t)].data(), n,
                                                     cfg.sample_rate_hz);
                        }
                    } catch (...) {
                        errors[static_cast<std::size_t>(t)] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (const auto& err : errors)
                if (err) std::rethrow_exception(err);
            for (int t = 1; t < n_threads; ++t)
                for (std::size_t k = 0; k < n; ++k)
                    buffers[0][k] += buffers[static_cast<std::size_t>(t)][k];
        }

        const double t_offset = static_cast<double>(done) / cfg.sample_rate_hz;
        for (const auto& spec : interference)
            gen_interference(spec, t_offset, buffers[0].data(), n, cfg.sample_rate_hz);

        if (n0 > 0.0)
            for (auto& v : buffers[0]) v += std::complex<double>(gauss(rng), gauss(rng));

        IqBlock blk;
        blk.fs = cfg.sample_rate_hz;
        blk.epoch = cfg.start_epoch + t_offset;
        blk.samples = std::move(buffers[0]);
        const auto q = quantize_iq(blk, cfg.quantization_bits, cfg.full_scale_sigma, sigma);
        result.clip_count += static_cast<std::uint64_t>(q.clipped);
        writer.write(q);
        buffers[0] = std::move(blk.samples);
        done += n;
    }
    writer.close();
    result.n_samples = done;

    // Sidecar.
    IfSidecar sc;
    sc.fs = cfg.sample_rate_hz;
    sc.if_center_hz = cfg.if_center_hz;
    sc.quantization_bits = cfg.quantization_bits;
    sc.epoch = cfg.start_epoch;
    sc.n_samples = done;
    sc.seed = cfg.seed;
    sc.config_digest = config_digest;
    sc.scale = cfg.full_scale_sigma * sigma;
    sc.clip_count = result.clip_count;
    sc.prns = tb.prns;
    sc.acq_doppler_span_hz = cfg.acq_doppler_span_hz();
    sc.iono_enabled = cfg.iono_enabled;
    sc.tropo_enabled = cfg.tropo_enabled;
    sc.magnus_237 = cfg.magnus_237;
    sc.klobuchar = tb.ephs.klobuchar;
    sc.meteo = cfg.meteo;
    sc.elevation_mask_deg = cfg.elevation_mask_deg;
    sc.rx_clock_bias_s = cfg.rx_clock_bias_s;
    sc.rx_clock_drift_sps = cfg.rx_clock_drift_sps;
    write_sidecar(result.sidecar_path, sc);

    // Truth observables CSV.
    {
        CsvWriter csv(result.observables_path, "gnsstwin.truth_observables v1",
                      "week,tow,prn,geometric_range_m,tau_total_s,iono_m,tropo_m,doppler_hz,"
                      "elevation_deg,azimuth_deg,carrier_power_w,cn0_dbhz,pseudorange_m,"
                      "carrier_phase_cycles");
        for (const auto& [prn, series] : tb.observables) {
            const auto& truth = tb.direct.at(prn);
            // Cumulative phase on the truth grid: trapezoid over the
            // piecewise-linear frequency equals the synthesized phase.
            std::vector<double> phase_grid(truth.carrier_freq_hz.size());
            phase_grid[0] = truth.carrier_cycles0;
            for (std::size_t s = 0; s + 1 < phase_grid.size(); ++s)
                phase_grid[s + 1] =
                    phase_grid[s] + 0.5 * (truth.carrier_freq_hz[s] + truth.carrier_freq_hz[s + 1]) /
                                        tb.truth_rate_hz;
            for (std::size_t i = 0; i < series.size(); ++i) {
                const auto& to = series[i];
                const double t_rel = to.t_rx - cfg.start_epoch;
                const double bias = cfg.rx_clock_bias_s + cfg.rx_clock_drift_sps * t_rel;
                const double pr = kSpeedOfLight * (to.tau_total_s + bias);
                const auto k = static_cast<std::size_t>(std::llround(t_rel * tb.truth_rate_hz));
                const double phase = phase_grid[std::min(k, phase_grid.size() - 1)] -
                                     cfg.if_center_hz * t_rel;
                csv.rowf("%d,%.9f,%d,%.4f,%.12e,%.4f,%.4f,%.4f,%.4f,%.4f,%.6e,%.2f,%.4f,%.4f",
                         to.t_rx.week, to.t_rx.tow, prn, to.geometric_range_m, to.tau_total_s,
                         to.iono_delay_m, to.tropo_delay_m, to.doppler_hz,
                         to.elevation_rad * kRadToDeg, to.azimuth_rad * kRadToDeg,
                         to.carrier_power_w, to.cn0_dbhz, pr, phase);
            }
        }
        csv.close();
    }

    // Truth trajectory CSV at the truth rate.
    {
        CsvWriter csv(result.trajectory_path, "gnsstwin.truth_trajectory v1",
                      "week,tow,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,ax_mps2,ay_mps2,az_mps2");
        for (const auto& s : tb.trajectory.samples) {
            if (s.tow - tb.trajectory.samples.front().tow > cfg.duration_s + 1e-9) break;
            csv.rowf("%d,%.9f,%.4f,%.4f,%.4f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", tb.trajectory.week,
                     s.tow, s.r.x(), s.r.y(), s.r.z(), s.v.x(), s.v.y(), s.v.z(), s.a.x(), s.a.y(),
                     s.a.z());
        }
        csv.close();
    }
    return result;
}

}  // namespace gnsstwin
