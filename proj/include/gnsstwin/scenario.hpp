#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gnsstwin/atmosphere.hpp"
#include "gnsstwin/channel.hpp"
#include "gnsstwin/gps_time.hpp"
#include "gnsstwin/impairments.hpp"
#include "gnsstwin/trajectory.hpp"

namespace gnsstwin {

struct InterferenceConfig {
    InterferenceSpec spec;
    double jsr_db = 0.0;  // used when amplitude is not given explicitly
    int ref_prn = 0;
    bool amplitude_from_jsr = false;
};

enum class MotionClass { static_user, moderate, high_dynamics };

struct ScenarioConfig {
    GpsTime start_epoch;
    double duration_s = 0.0;
    double sample_rate_hz = 2.5e6;
    double if_center_hz = 0.0;
    int quantization_bits = 8;
    std::string ephemeris_path;
    std::optional<std::set<int>> prn_allowlist;
    double elevation_mask_deg = 5.0;

    MotionClass motion = MotionClass::static_user;
    StaticProfile static_profile;
    ModerateProfile moderate_profile;
    HighDynamicsProfile high_dynamics_profile;

    bool iono_enabled = true;
    bool tropo_enabled = true;
    bool carrier_phase_advance = true;
    bool magnus_237 = false;
    MeteoParams meteo;

    bool noise_enabled = true;
    double noise_density_w_hz = std::pow(10.0, -204.0 / 10.0);
    double eirp_dbw = 26.5;
    double l_atm = 1.0;
    std::string rx_antenna = "hemispherical";  // isotropic | hemispherical | file path
    double cn0_override_dbhz = 0.0;            // > 0 forces every channel
    double full_scale_sigma = 3.0;

    double rx_clock_bias_s = 0.0;
    double rx_clock_drift_sps = 0.0;

    std::vector<InterferenceConfig> interference;
    std::vector<MultipathSpec> multipath;

    std::uint64_t seed = 1;
    std::filesystem::path base_dir;  // directory of the config file

    double acq_doppler_span_hz() const {
        return motion == MotionClass::high_dynamics ? 50e3 : 10e3;
    }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
    throw std::runtime_error("scenario config: " + path + ": " + what);
}

inline void require_keys(const nlohmann::json& j, const std::string& path,
                         const std::set<std::string>& allowed) {
    if (!j.is_object()) config_error(path, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) config_error(path + "." + key, "unknown key");
}

template <typename T>
T need(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) config_error(path + "." + key, "missing required key");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(path + "." + key, "wrong type");
    }
}

/// FNV-1a over the canonical dump: identical configs hash identically.
inline std::string digest_of(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir,
                                     std::string* digest_out = nullptr) {
    using detail::config_error;
    using detail::need;
    using detail::require_keys;

    require_keys(j, "$",
                 {"start_epoch", "duration_s", "sample_rate_hz", "if_center_hz",
                  "quantization_bits", "ephemeris", "prn_allowlist", "elevation_mask_deg",
                  "trajectory", "atmosphere", "link_budget", "receiver_clock", "interference",
                  "multipath", "seed", "full_scale_sigma"});

    ScenarioConfig cfg;
    cfg.base_dir = base_dir;

    const auto& ep = j.at("start_epoch");
    require_keys(ep, "$.start_epoch", {"week", "tow"});
    cfg.start_epoch = GpsTime(need<int>(ep, "$.start_epoch", "week"),
                              need<double>(ep, "$.start_epoch", "tow"));

    cfg.duration_s = need<double>(j, "$", "duration_s");
    if (!(cfg.duration_s > 0.0)) config_error("$.duration_s", "must be positive");
    cfg.sample_rate_hz = need<double>(j, "$", "sample_rate_hz");
    if (!(cfg.sample_rate_hz >= 2.5e6))
        config_error("$.sample_rate_hz", "must be >= 2.5e6 to contain the main lobe");
    if (j.contains("if_center_hz")) cfg.if_center_hz = j.at("if_center_hz").get<double>();
    if (std::abs(cfg.if_center_hz) > cfg.sample_rate_hz / 2.0)
        config_error("$.if_center_hz", "outside the sampled band");
    cfg.quantization_bits = need<int>(j, "$", "quantization_bits");
    if (cfg.quantization_bits != 8 && cfg.quantization_bits != 16)
        config_error("$.quantization_bits", "must be 8 or 16");
    cfg.ephemeris_path = need<std::string>(j, "$", "ephemeris");
    if (j.contains("prn_allowlist")) {
        auto v = j.at("prn_allowlist").get<std::vector<int>>();
        cfg.prn_allowlist = std::set<int>(v.begin(), v.end());
        for (int p : *cfg.prn_allowlist)
            if (p < 1 || p > 32) config_error("$.prn_allowlist", "PRN out of [1,32]");
    }
    if (j.contains("elevation_mask_deg"))
        cfg.elevation_mask_deg = j.at("elevation_mask_deg").get<double>();
    if (j.contains("full_scale_sigma")) cfg.full_scale_sigma = j.at("full_scale_sigma").get<double>();

    const auto& tr = j.at("trajectory");
    const std::string profile = need<std::string>(tr, "$.trajectory", "profile");
    auto geodetic_of = [&](const nlohmann::json& node, const std::string& path) {
        const auto v = node.get<std::vector<double>>();
        if (v.size() != 3) config_error(path, "expected [lat_deg, lon_deg, height_m]");
        return Geodetic{v[0] * kDegToRad, v[1] * kDegToRad, v[2]};
    };
    if (profile == "static") {
        require_keys(tr, "$.trajectory", {"profile", "geodetic_deg"});
        cfg.motion = MotionClass::static_user;
        cfg.static_profile.position =
            geodetic_of(tr.at("geodetic_deg"), "$.trajectory.geodetic_deg");
    } else if (profile == "moderate") {
        require_keys(tr, "$.trajectory", {"profile", "geodetic_deg", "waypoints_enu", "corner_s"});
        cfg.motion = MotionClass::moderate;
        cfg.moderate_profile.start = geodetic_of(tr.at("geodetic_deg"), "$.trajectory.geodetic_deg");
        for (const auto& w : tr.at("waypoints_enu")) {
            const auto v = w.get<std::vector<double>>();
            if (v.size() != 3) config_error("$.trajectory.waypoints_enu", "expected [t, east, north]");
            cfg.moderate_profile.waypoints.push_back({v[0], v[1], v[2]});
        }
        if (tr.contains("corner_s")) cfg.moderate_profile.corner_s = tr.at("corner_s").get<double>();
    } else if (profile == "high_dynamics") {
        require_keys(tr, "$.trajectory",
                     {"profile", "geodetic_deg", "speed_mps", "elevation_deg", "azimuth_deg",
                      "drag_area_over_mass", "required_peak_accel"});
        cfg.motion = MotionClass::high_dynamics;
        cfg.high_dynamics_profile.launch =
            geodetic_of(tr.at("geodetic_deg"), "$.trajectory.geodetic_deg");
        if (tr.contains("speed_mps"))
            cfg.high_dynamics_profile.speed_mps = tr.at("speed_mps").get<double>();
        if (tr.contains("elevation_deg"))
            cfg.high_dynamics_profile.elevation_deg = tr.at("elevation_deg").get<double>();
        if (tr.contains("azimuth_deg"))
            cfg.high_dynamics_profile.azimuth_deg = tr.at("azimuth_deg").get<double>();
        if (tr.contains("drag_area_over_mass"))
            cfg.high_dynamics_profile.drag_area_over_mass =
                tr.at("drag_area_over_mass").get<double>();
        if (tr.contains("required_peak_accel"))
            cfg.high_dynamics_profile.required_peak_accel =
                tr.at("required_peak_accel").get<double>();
    } else {
        config_error("$.trajectory.profile", "must be static, moderate, or high_dynamics");
    }

    if (j.contains("atmosphere")) {
        const auto& atm = j.at("atmosphere");
        require_keys(atm, "$.atmosphere",
                     {"iono_enabled", "tropo_enabled", "carrier_phase_advance", "magnus_237",
                      "meteo"});
        if (atm.contains("iono_enabled")) cfg.iono_enabled = atm.at("iono_enabled").get<bool>();
        if (atm.contains("tropo_enabled")) cfg.tropo_enabled = atm.at("tropo_enabled").get<bool>();
        if (atm.contains("carrier_phase_advance"))
            cfg.carrier_phase_advance = atm.at("carrier_phase_advance").get<bool>();
        if (atm.contains("magnus_237")) cfg.magnus_237 = atm.at("magnus_237").get<bool>();
        if (atm.contains("meteo")) {
            const auto& met = atm.at("meteo");
            require_keys(met, "$.atmosphere.meteo", {"pressure_hpa", "temperature_c", "humidity"});
            cfg.meteo.pressure_hpa = need<double>(met, "$.atmosphere.meteo", "pressure_hpa");
            cfg.meteo.temperature_c = need<double>(met, "$.atmosphere.meteo", "temperature_c");
            cfg.meteo.humidity = need<double>(met, "$.atmosphere.meteo", "humidity");
        }
    }

    if (j.contains("link_budget")) {
        const auto& lb = j.at("link_budget");
        require_keys(lb, "$.link_budget",
                     {"noise_enabled", "noise_density_dbw_hz", "eirp_dbw", "l_atm", "rx_antenna",
                      "cn0_override_dbhz"});
        if (lb.contains("noise_enabled")) cfg.noise_enabled = lb.at("noise_enabled").get<bool>();
        if (lb.contains("noise_density_dbw_hz"))
            cfg.noise_density_w_hz = std::pow(10.0, lb.at("noise_density_dbw_hz").get<double>() / 10.0);
        if (lb.contains("eirp_dbw")) cfg.eirp_dbw = lb.at("eirp_dbw").get<double>();
        if (lb.contains("l_atm")) cfg.l_atm = lb.at("l_atm").get<double>();
        if (!(cfg.l_atm > 0.0 && cfg.l_atm <= 1.0)) config_error("$.link_budget.l_atm", "must be in (0,1]");
        if (lb.contains("rx_antenna")) cfg.rx_antenna = lb.at("rx_antenna").get<std::string>();
        if (lb.contains("cn0_override_dbhz"))
            cfg.cn0_override_dbhz = lb.at("cn0_override_dbhz").get<double>();
    }

    if (j.contains("receiver_clock")) {
        const auto& rc = j.at("receiver_clock");
        require_keys(rc, "$.receiver_clock", {"bias_s", "drift_sps"});
        if (rc.contains("bias_s")) cfg.rx_clock_bias_s = rc.at("bias_s").get<double>();
        if (rc.contains("drift_sps")) cfg.rx_clock_drift_sps = rc.at("drift_sps").get<double>();
    }

    if (j.contains("interference")) {
        int idx = 0;
        for (const auto& node : j.at("interference")) {
            const std::string path = "$.interference[" + std::to_string(idx++) + "]";
            require_keys(node, path,
                         {"kind", "amplitude", "jsr_db", "ref_prn", "f0_hz", "sweep_hz_s",
                          "f_i_hz", "phase_rad", "beta_rad", "f_m_hz", "pulse_width_s",
                          "pulse_period_s", "start_s", "stop_s"});
            InterferenceConfig ic;
            const std::string kind = need<std::string>(node, path, "kind");
            if (kind == "chirp") ic.spec.kind = InterferenceSpec::Kind::chirp;
            else if (kind == "cwi") ic.spec.kind = InterferenceSpec::Kind::cwi;
            else if (kind == "fmcw") ic.spec.kind = InterferenceSpec::Kind::fmcw;
            else if (kind == "pulse") ic.spec.kind = InterferenceSpec::Kind::pulse;
            else config_error(path + ".kind", "must be chirp, cwi, fmcw, or pulse");
            auto opt = [&](const char* key, double& dst) {
                if (node.contains(key)) dst = node.at(key).get<double>();
            };
            opt("amplitude", ic.spec.amplitude);
            opt("f0_hz", ic.spec.f0_hz);
            opt("sweep_hz_s", ic.spec.sweep_hz_s);
            opt("f_i_hz", ic.spec.f_i_hz);
            opt("phase_rad", ic.spec.phase_rad);
            opt("beta_rad", ic.spec.beta_rad);
            opt("f_m_hz", ic.spec.f_m_hz);
            opt("pulse_width_s", ic.spec.pulse_width_s);
            opt("pulse_period_s", ic.spec.pulse_period_s);
            opt("start_s", ic.spec.start_s);
            opt("stop_s", ic.spec.stop_s);
            if (node.contains("jsr_db")) {
                ic.jsr_db = node.at("jsr_db").get<double>();
                ic.ref_prn = need<int>(node, path, "ref_prn");
                ic.amplitude_from_jsr = true;
            }
            cfg.interference.push_back(ic);
        }
    }

    if (j.contains("multipath")) {
        int idx = 0;
        for (const auto& node : j.at("multipath")) {
            const std::string path = "$.multipath[" + std::to_string(idx++) + "]";
            require_keys(node, path, {"prn", "paths"});
            MultipathSpec spec;
            spec.prn = need<int>(node, path, "prn");
            for (const auto& p : node.at("paths")) {
                require_keys(p, path + ".paths[]",
                             {"alpha", "delay_s", "phase_rad", "delay_ramp_sps"});
                MultipathPath mp;
                mp.alpha = need<double>(p, path, "alpha");
                mp.excess_delay_s = need<double>(p, path, "delay_s");
                if (p.contains("phase_rad")) mp.phase_rad = p.at("phase_rad").get<double>();
                if (p.contains("delay_ramp_sps"))
                    mp.delay_ramp_sps = p.at("delay_ramp_sps").get<double>();
                spec.paths.push_back(mp);
            }
            spec.validate();
            cfg.multipath.push_back(spec);
        }
    }

    cfg.seed = need<std::uint64_t>(j, "$", "seed");

    if (digest_out) *digest_out = detail::digest_of(j);
    return cfg;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path,
                                    std::string* digest_out = nullptr) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario config: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scenario config is not valid JSON: " + std::string(e.what()));
    }
    return parse_scenario(j, path.parent_path(), digest_out);
}

}  // namespace gnsstwin
