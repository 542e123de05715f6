#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <thread>
#include <vector>

#include "gnsstwin/acquisition.hpp"
#include "gnsstwin/analysis.hpp"
#include "gnsstwin/atmosphere.hpp"
#include "gnsstwin/csv.hpp"
#include "gnsstwin/ifdata.hpp"
#include "gnsstwin/lnav.hpp"
#include "gnsstwin/observables.hpp"
#include "gnsstwin/pvt.hpp"
#include "gnsstwin/tracking.hpp"

namespace gnsstwin {

struct ProcessOptions {
    std::vector<int> prns;            // empty: take the sidecar channel list
    bool search_all_prns = false;     // override: scan 1..32
    double acq_threshold = 2.0;
    double measurement_interval_s = 0.1;
    double acq_window_s = 0.030;
    std::size_t psd_segment = 4096;
    double psd_max_seconds = 2.0;
    int telemetry_decimation = 1;     // channels.csv row stride
    int threads = 2;
    // Carrier-aided (Hatch) code smoothing time constant; sub-3-samples-per
    // -chip front ends carry meter-level code quantization ripple that the
    // ripple-free carrier removes. 0 disables.
    double code_smoothing_s = 30.0;
};

struct ProcessResult {
    std::filesystem::path psd_path;
    std::filesystem::path channels_path;
    std::filesystem::path observables_path;
    std::filesystem::path pvt_path;
    std::filesystem::path nav_path;
    std::vector<AcquisitionResult> acquisition;
    int channels_locked = 0;
    int channels_decoded = 0;
    std::size_t pvt_epochs = 0;
    bool truncated_input = false;
    std::vector<ObservableRecord> observables;
    std::vector<PvtSolution> solutions;
};

namespace detail {

/// Resolves the mod-1024 broadcast week against the capture epoch.
inline int resolve_week(int week_mod_1024, int reference_week) {
    int week = week_mod_1024 % 1024;
    const int base = reference_week - ((reference_week - week) % 1024 + 1024) % 1024;
    int best = base;
    if (std::abs(base + 1024 - reference_week) < std::abs(best - reference_week)) best = base + 1024;
    return best;
}

}  // namespace detail

/// Fig.-3-style batch receiver: PSD, acquisition, tracking, LNAV decode,
/// pseudorange formation, and epoch-wise PVT, all from the IF file plus its
/// sidecar.
inline ProcessResult run_process(const std::filesystem::path& if_path,
                                 const std::filesystem::path& outdir,
                                 const ProcessOptions& opt = {}) {
    std::filesystem::create_directories(outdir);
    const IfSidecar sc = read_sidecar(if_path.string() + ".sidecar.json");
    IfReader reader(if_path, sc);

    ProcessResult result;
    result.truncated_input = reader.truncated();
    result.psd_path = outdir / "psd.csv";
    result.channels_path = outdir / "channels.csv";
    result.observables_path = outdir / "observables.csv";
    result.pvt_path = outdir / "pvt.csv";
    result.nav_path = outdir / "decoded_nav.json";

    const double fs = sc.fs;
    const auto n_total = static_cast<std::int64_t>(reader.n_samples());

    // --- Step 1: PSD of the leading capture segment -------------------------
    {
        const auto n_psd = static_cast<std::size_t>(
            std::min<double>(static_cast<double>(n_total), opt.psd_max_seconds * fs));
        std::vector<std::complex<double>> head(n_psd);
        const std::size_t got = reader.read(head.data(), n_psd);
        head.resize(got);
        if (got >= 2 * opt.psd_segment) {
            const auto psd = estimate_psd(head.data(), got, fs, opt.psd_segment, 0.5);
            CsvWriter csv(result.psd_path, "gnsstwin.psd v1", "freq_hz,psd_db_hz");
            for (std::size_t i = 0; i < psd.freq_hz.size(); ++i)
                csv.rowf("%.3f,%.6f", psd.freq_hz[i] + sc.if_center_hz, psd.db_at(i));
            csv.close();
        }

        // --- Step 2: acquisition over the candidate PRNs --------------------
        std::vector<int> candidates = opt.prns;
        if (candidates.empty()) {
            if (opt.search_all_prns)
                for (int p = 1; p <= 32; ++p) candidates.push_back(p);
            else
                candidates = sc.prns;
        }
        const auto n_acq = std::min<std::size_t>(got, static_cast<std::size_t>(opt.acq_window_s * fs));
        AcquisitionConfig acq_cfg;
        acq_cfg.doppler_span_hz = sc.acq_doppler_span_hz;
        acq_cfg.threshold = opt.acq_threshold;
        for (int prn : candidates)
            result.acquisition.push_back(
                acquire(head.data(), n_acq, fs, sc.if_center_hz, prn, acq_cfg));
    }

    bool any = false;
    for (const auto& a : result.acquisition) any = any || a.detected;
    if (!any) {
        std::string msg = "no satellite acquired; searched:";
        for (const auto& a : result.acquisition)
            msg += " PRN" + std::to_string(a.prn) + "(metric " + std::to_string(a.peak_metric) + ")";
        throw std::runtime_error(msg);
    }

    // --- Step 3: tracking over the whole stream -----------------------------
    TrackingConfig tcfg;
    tcfg.f_if_hz = sc.if_center_hz;
    if (sc.acq_doppler_span_hz > 20e3) {
        // High-dynamics class: widen the carrier loop, strengthen the FLL
        // assist, and give the FLL longer to absorb the launch transient so
        // launch-grade Doppler rates stay inside the Costas pull-in range.
        tcfg.pll_bn_hz = 30.0;
        tcfg.fll_assist_bn_hz = 5.0;
        tcfg.fll_pullin_intervals = 500;
    }
    std::vector<std::unique_ptr<TrackingChannel>> channels;
    for (const auto& a : result.acquisition)
        if (a.detected) channels.push_back(std::make_unique<TrackingChannel>(a.prn, fs, a, tcfg));

    // Measurement epochs on the receiver's sample clock.
    const auto meas_step = static_cast<std::int64_t>(std::llround(opt.measurement_interval_s * fs));
    std::vector<std::int64_t> epochs;
    for (std::int64_t n = meas_step; n + 1 < n_total; n += meas_step) epochs.push_back(n);
    for (auto& ch : channels)
        for (const auto n : epochs) ch->request_measurement(n);

    std::vector<std::vector<TrackingTelemetry>> telemetry(channels.size());
    {
        // Restart the reader: PSD consumed the head of the stream.
        IfReader stream(if_path, sc);
        const auto block = static_cast<std::size_t>(std::llround(0.1 * fs));
        std::vector<std::complex<double>> buf(block);
        std::int64_t pos = 0;
        const int n_threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(channels.size())));
        while (true) {
            const std::size_t got = stream.read(buf.data(), block);
            if (got == 0) break;
            if (n_threads <= 1) {
                for (std::size_t c = 0; c < channels.size(); ++c)
                    channels[c]->process(buf.data(), pos, got, &telemetry[c]);
            } else {
                std::vector<std::thread> pool;
                std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
                for (int t = 0; t < n_threads; ++t)
                    pool.emplace_back([&, t]() {
                        try {
                            for (std::size_t c = static_cast<std::size_t>(t); c < channels.size();
                                 c += static_cast<std::size_t>(n_threads))
                                channels[c]->process(buf.data(), pos, got, &telemetry[c]);
                        } catch (...) {
                            errors[static_cast<std::size_t>(t)] = std::current_exception();
                        }
                    });
                for (auto& th : pool) th.join();
                for (const auto& err : errors)
                    if (err) std::rethrow_exception(err);
            }
            pos += static_cast<std::int64_t>(got);
        }
    }

    // Telemetry CSV (one row per integration interval unless decimated).
    {
        CsvWriter csv(result.channels_path, "gnsstwin.channels v1",
                      "tow,prn,dll_chips,pll_deg,fll_hz,doppler_hz,code_freq_cps,cn0_dbhz,"
                      "prompt_i,prompt_q,stage,lock");
        for (std::size_t c = 0; c < channels.size(); ++c) {
            const auto stride = static_cast<std::size_t>(std::max(1, opt.telemetry_decimation));
            for (std::size_t i = 0; i < telemetry[c].size(); i += stride) {
                const auto& row = telemetry[c][i];
                csv.rowf("%.9f,%d,%.6f,%.4f,%.4f,%.4f,%.6f,%.2f,%.6e,%.6e,%d,%d",
                         sc.epoch.tow + static_cast<double>(row.sample_end) / fs, row.prn,
                         row.dll_chips, row.pll_deg, row.fll_hz, row.doppler_hz, row.code_freq_cps,
                         row.cn0_dbhz, row.prompt_i, row.prompt_q, row.stage, row.lock ? 1 : 0);
            }
        }
        csv.close();
    }

    // --- Step 4: LNAV decode and transmit-time anchoring ---------------------
    struct DecodedChannel {
        TrackingChannel* ch = nullptr;
        BroadcastEphemeris eph;
        double anchor_tow = 0.0;
        double anchor_chips = 0.0;
        bool inverted = false;
        std::vector<ChannelMeasurement> snaps;
    };
    std::vector<DecodedChannel> decoded;
    nlohmann::json nav_json = nlohmann::json::array();
    for (auto& ch : channels) {
        if (ch->lock_flagged() || !ch->bit_synced()) continue;
        result.channels_locked++;
        if (ch->bits().size() < 360) continue;
        try {
            const auto dec = decode_subframes(ch->bits());
            nlohmann::json entry;
            entry["prn"] = ch->prn();
            entry["subframes_decoded"] = dec.subframes_decoded;
            entry["parity_failures"] = dec.parity_failures;
            entry["ephemeris_complete"] = dec.eph_complete;
            if (dec.eph_complete) {
                DecodedChannel d;
                d.ch = ch.get();
                d.eph = dec.eph;
                d.eph.prn = ch->prn();
                d.eph.week = detail::resolve_week(dec.eph.week, sc.epoch.week);
                validate_ephemeris(d.eph);
                d.anchor_tow = dec.anchor_tow;
                // anchor_bit_index indexes the channel's bit vector, which is
                // parallel to the bit-start chip stamps.
                d.anchor_chips =
                    ch->bit_start_chips().at(static_cast<std::size_t>(dec.anchor_bit_index));
                d.inverted = dec.inverted;
                d.snaps = ch->take_snapshots();
                entry["toe"] = d.eph.toe;
                entry["week"] = d.eph.week;
                entry["iodc"] = d.eph.iodc;
                entry["sqrt_a"] = d.eph.sqrt_a;
                entry["e"] = d.eph.e;
                entry["af0"] = d.eph.af0;
                decoded.push_back(std::move(d));
                result.channels_decoded++;
            }
            nav_json.push_back(entry);
        } catch (const std::exception&) {
            // Preamble never found; channel contributes no measurements.
        }
    }
    {
        const auto tmp = result.nav_path.string() + ".tmp";
        std::ofstream f(tmp);
        f << nav_json.dump(2) << "\n";
        f.close();
        std::filesystem::rename(tmp, result.nav_path);
    }

    // --- Steps 5-7: observables and PVT --------------------------------------
    std::map<int, BroadcastEphemeris> decoded_ephs;
    for (const auto& d : decoded) decoded_ephs[d.eph.prn] = d.eph;

    CsvWriter obs_csv(result.observables_path, "gnsstwin.observables v1",
                      "week,tow,prn,pseudorange_m,doppler_hz,carrier_phase_cycles,cn0_dbhz");
    CsvWriter pvt_csv(result.pvt_path, "gnsstwin.pvt v1",
                      "week,tow,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,clock_bias_s,clock_drift_sps,"
                      "nsats,gdop,hdop,vdop,residual_rms_m");

    Vec3 position_seed = Vec3::Zero();
    struct HatchState {
        double smoothed = 0.0;
        double carrier_prev = 0.0;
        int count = 0;
        std::size_t last_epoch = 0;
    };
    std::map<int, HatchState> hatch;
    const double hatch_n = opt.code_smoothing_s / opt.measurement_interval_s;

    for (std::size_t e = 0; e < epochs.size(); ++e) {
        const std::int64_t n_e = epochs[e];
        const GpsTime t_label = sc.epoch + static_cast<double>(n_e) / fs;

        struct Prepared {
            int prn;
            double pr_corr;
            double doppler;
            double carrier;
            double cn0;
        };
        std::vector<Prepared> prepared;
        for (const auto& d : decoded) {
            if (e >= d.snaps.size()) continue;
            const auto& snap = d.snaps[e];
            if (snap.sample_index != n_e || !snap.lock || !snap.bit_synced) continue;
            // SV transmit label from the anchored chip count.
            const double t_tx_sv =
                d.anchor_tow + (snap.chips_abs - d.anchor_chips) / kCaChipRateHz;
            const double pr_raw = kSpeedOfLight * (t_label.tow - t_tx_sv +
                                                   (t_label.week - sc.epoch.week) * kSecondsPerWeek);
            if (pr_raw < 1.0e6 || pr_raw > 1.0e8) continue;  // anchor not yet valid
            const auto sat = sat_state_at(d.eph, GpsTime(sc.epoch.week, t_tx_sv));
            double pr_corr = pr_raw + kSpeedOfLight * sat.clock_offset_s -
                             kSpeedOfLight * d.eph.tgd;
            const double carrier = snap.carrier_cycles -
                                   sc.if_center_hz * static_cast<double>(n_e) / fs;

            if (hatch_n > 1.0) {
                auto& h = hatch[d.eph.prn];
                if (h.count > 0 && h.last_epoch + 1 == e) {
                    // Carrier phase decreases as range grows: project the
                    // inter-epoch range change from the carrier.
                    const double dr = -(carrier - h.carrier_prev) * kL1WavelengthM;
                    const double w = 1.0 / std::min(static_cast<double>(h.count + 1), hatch_n);
                    h.smoothed = w * pr_corr + (1.0 - w) * (h.smoothed + dr);
                    ++h.count;
                } else {
                    h.smoothed = pr_corr;
                    h.count = 1;
                }
                h.carrier_prev = carrier;
                h.last_epoch = e;
                pr_corr = h.smoothed;
            }

            // Doppler observable: centered carrier-phase difference across
            // the neighboring epochs (lag-free, and an order of magnitude
            // quieter than the instantaneous NCO reading).
            double doppler = snap.doppler_hz;
            if (e > 0 && e + 1 < d.snaps.size() &&
                d.snaps[e - 1].sample_index + 2 * meas_step == d.snaps[e + 1].sample_index) {
                const double span =
                    static_cast<double>(d.snaps[e + 1].sample_index - d.snaps[e - 1].sample_index) / fs;
                doppler = (d.snaps[e + 1].carrier_cycles - d.snaps[e - 1].carrier_cycles) / span -
                          sc.if_center_hz;
            }

            Prepared p;
            p.prn = d.eph.prn;
            p.pr_corr = pr_corr;
            p.doppler = doppler;
            p.carrier = carrier;
            p.cn0 = snap.cn0_dbhz;
            prepared.push_back(p);
        }
        if (prepared.size() < 4) continue;

        // Two-pass solve: atmosphere corrections need an approximate position.
        PvtSolution sol;
        bool solved = false;
        try {
            std::vector<PvtObservation> obs;
            for (const auto& p : prepared)
                obs.push_back({p.prn, p.pr_corr, p.doppler, true});
            sol = solve_pvt(obs, decoded_ephs, t_label, position_seed);

            if (sc.iono_enabled || sc.tropo_enabled) {
                const Geodetic site = geodetic_from_ecef(sol.position);
                const double ztd = sc.tropo_enabled
                                       ? saastamoinen_ztd_m(sc.meteo, site.lat_rad,
                                                            site.height_m / 1000.0, sc.magnus_237)
                                       : 0.0;
                std::vector<PvtObservation> corrected;
                for (const auto& p : prepared) {
                    const auto sat = sat_state_at(decoded_ephs.at(p.prn),
                                                  t_label - p.pr_corr / kSpeedOfLight);
                    const auto ea = elevation_azimuth(sol.position,
                                                      sagnac_rotate(sat.r_ecef, p.pr_corr / kSpeedOfLight));
                    double corr = 0.0;
                    if (sc.iono_enabled && sc.klobuchar.valid && ea.elevation_rad > 0.0)
                        corr += klobuchar_delay_m(sc.klobuchar, site, ea.elevation_rad,
                                                  ea.azimuth_rad, (t_label - sc.rx_clock_bias_s).tow);
                    if (sc.tropo_enabled)
                        corr += ztd * tropo_mapping(std::max(
                                          ea.elevation_rad, sc.elevation_mask_deg * kDegToRad));
                    corrected.push_back({p.prn, p.pr_corr - corr, p.doppler, true});
                }
                sol = solve_pvt(corrected, decoded_ephs, t_label, sol.position);
            }
            solved = true;
            position_seed = sol.position;
        } catch (const std::exception&) {
            // Degenerate epoch (geometry or divergence); skip the row.
        }
        if (!solved) continue;

        for (const auto& p : prepared) {
            obs_csv.rowf("%d,%.9f,%d,%.4f,%.4f,%.4f,%.2f", t_label.week, t_label.tow, p.prn,
                         p.pr_corr, p.doppler, p.carrier, p.cn0);
            ObservableRecord rec;
            rec.t_rx = t_label;
            rec.prn = p.prn;
            rec.pseudorange_m = p.pr_corr;
            rec.doppler_hz = p.doppler;
            rec.carrier_phase_cycles = p.carrier;
            rec.cn0_dbhz = p.cn0;
            rec.source = ObservableSource::receiver;
            result.observables.push_back(rec);
        }
        pvt_csv.rowf("%d,%.9f,%.4f,%.4f,%.4f,%.6f,%.6f,%.6f,%.12e,%.6e,%d,%.3f,%.3f,%.3f,%.4f",
                     t_label.week, t_label.tow, sol.position.x(), sol.position.y(),
                     sol.position.z(), sol.velocity.x(), sol.velocity.y(), sol.velocity.z(),
                     sol.clock_bias_s, sol.clock_drift_sps, static_cast<int>(sol.used_prns.size()),
                     sol.gdop, sol.hdop, sol.vdop, sol.residual_rms_m);
        result.solutions.push_back(sol);
        ++result.pvt_epochs;
    }
    obs_csv.close();
    pvt_csv.close();
    return result;
}

}  // namespace gnsstwin
