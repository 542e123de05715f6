#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnsstwin/atmosphere.hpp"
#include "gnsstwin/ephemeris.hpp"
#include "gnsstwin/gps_time.hpp"
#include "gnsstwin/synth.hpp"

namespace gnsstwin {

/// Sidecar metadata describing a raw IF capture: everything the software
/// receiver needs to process the file without the original config.
struct IfSidecar {
    double fs = 0.0;
    double if_center_hz = 0.0;
    int quantization_bits = 8;
    GpsTime epoch;  // receiver-label time of sample 0
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    std::string config_digest;
    double scale = 1.0;
    std::uint64_t clip_count = 0;
    std::vector<int> prns;
    double acq_doppler_span_hz = 10e3;

    bool iono_enabled = false;
    bool tropo_enabled = false;
    bool magnus_237 = false;
    KlobucharCoeffs klobuchar;
    MeteoParams meteo;
    double elevation_mask_deg = 5.0;
    double rx_clock_bias_s = 0.0;
    double rx_clock_drift_sps = 0.0;
};

inline void write_sidecar(const std::filesystem::path& path, const IfSidecar& sc) {
    nlohmann::json j;
    j["format"] = "gnsstwin-if-v1";
    j["sample_rate_hz"] = sc.fs;
    j["if_center_hz"] = sc.if_center_hz;
    j["quantization_bits"] = sc.quantization_bits;
    j["epoch"] = {{"week", sc.epoch.week}, {"tow", sc.epoch.tow}};
    j["n_samples"] = sc.n_samples;
    j["seed"] = sc.seed;
    j["config_digest"] = sc.config_digest;
    j["scale"] = sc.scale;
    j["clip_count"] = sc.clip_count;
    j["prns"] = sc.prns;
    j["acq_doppler_span_hz"] = sc.acq_doppler_span_hz;
    j["atmosphere"] = {{"iono_enabled", sc.iono_enabled},
                       {"tropo_enabled", sc.tropo_enabled},
                       {"magnus_237", sc.magnus_237},
                       {"klobuchar_valid", sc.klobuchar.valid},
                       {"klobuchar_alpha", sc.klobuchar.alpha},
                       {"klobuchar_beta", sc.klobuchar.beta},
                       {"meteo", {{"pressure_hpa", sc.meteo.pressure_hpa},
                                  {"temperature_c", sc.meteo.temperature_c},
                                  {"humidity", sc.meteo.humidity}}}};
    j["elevation_mask_deg"] = sc.elevation_mask_deg;
    j["receiver_clock"] = {{"bias_s", sc.rx_clock_bias_s}, {"drift_sps", sc.rx_clock_drift_sps}};

    const std::filesystem::path tmp(path.string() + ".tmp");
    {
        std::ofstream f(tmp);
        if (!f) throw std::runtime_error("cannot write sidecar: " + path.string());
        f << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

inline IfSidecar read_sidecar(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open sidecar: " + path.string());
    nlohmann::json j;
    f >> j;
    if (j.value("format", "") != std::string("gnsstwin-if-v1"))
        throw std::runtime_error("unrecognized sidecar format in " + path.string());
    IfSidecar sc;
    sc.fs = j.at("sample_rate_hz").get<double>();
    sc.if_center_hz = j.at("if_center_hz").get<double>();
    sc.quantization_bits = j.at("quantization_bits").get<int>();
    sc.epoch = GpsTime(j.at("epoch").at("week").get<int>(), j.at("epoch").at("tow").get<double>());
    sc.n_samples = j.at("n_samples").get<std::uint64_t>();
    sc.seed = j.at("seed").get<std::uint64_t>();
    sc.config_digest = j.at("config_digest").get<std::string>();
    sc.scale = j.at("scale").get<double>();
    sc.clip_count = j.at("clip_count").get<std::uint64_t>();
    sc.prns = j.at("prns").get<std::vector<int>>();
    sc.acq_doppler_span_hz = j.value("acq_doppler_span_hz", 10e3);
    const auto& atm = j.at("atmosphere");
    sc.iono_enabled = atm.at("iono_enabled").get<bool>();
    sc.tropo_enabled = atm.at("tropo_enabled").get<bool>();
    sc.magnus_237 = atm.value("magnus_237", false);
    sc.klobuchar.valid = atm.at("klobuchar_valid").get<bool>();
    sc.klobuchar.alpha = atm.at("klobuchar_alpha").get<std::array<double, 4>>();
    sc.klobuchar.beta = atm.at("klobuchar_beta").get<std::array<double, 4>>();
    sc.meteo.pressure_hpa = atm.at("meteo").at("pressure_hpa").get<double>();
    sc.meteo.temperature_c = atm.at("meteo").at("temperature_c").get<double>();
    sc.meteo.humidity = atm.at("meteo").at("humidity").get<double>();
    sc.elevation_mask_deg = j.at("elevation_mask_deg").get<double>();
    sc.rx_clock_bias_s = j.at("receiver_clock").at("bias_s").get<double>();
    sc.rx_clock_drift_sps = j.at("receiver_clock").at("drift_sps").get<double>();
    return sc;
}

/// Raw IF writer: interleaved signed I,Q; 16-bit values little-endian.
class IfWriter {
  public:
    IfWriter(const std::filesystem::path& path, int bits)
        : path_(path), tmp_(path.string() + ".tmp"), bits_(bits) {
        out_.open(tmp_, std::ios::binary);
        if (!out_) throw std::runtime_error("cannot open IF output: " + path.string());
    }

    ~IfWriter() {
        // Only close() publishes; abandoning the writer discards the partial
        // capture instead of renaming it into place.
        if (out_.is_open()) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    void write(const QuantizedIq& q) {
        if (q.bits != bits_) throw std::invalid_argument("IfWriter: quantization width changed");
        if (bits_ == 8) {
            out_.write(reinterpret_cast<const char*>(q.data8.data()),
                       static_cast<std::streamsize>(q.data8.size()));
        } else {
            out_.write(reinterpret_cast<const char*>(q.data16.data()),
                       static_cast<std::streamsize>(q.data16.size() * 2));
        }
    }

    void close() {
        out_.close();
        std::filesystem::rename(tmp_, path_);
    }

  private:
    std::filesystem::path path_, tmp_;
    std::ofstream out_;
    int bits_;
};

/// Streaming IF reader; returns complex samples rescaled by the sidecar
/// scale so amplitudes match the synthesis domain.
class IfReader {
  public:
    IfReader(const std::filesystem::path& path, const IfSidecar& sc)
        : bits_(sc.quantization_bits), scale_(sc.scale) {
        in_.open(path, std::ios::binary);
        if (!in_) throw std::runtime_error("cannot open IF file: " + path.string());
        const auto bytes = std::filesystem::file_size(path);
        const auto per = static_cast<std::uintmax_t>(bits_ == 8 ? 2 : 4);
        n_samples_ = bytes / per;
        truncated_ = (n_samples_ < sc.n_samples) || (bytes % per != 0);
    }

    std::uint64_t n_samples() const { return n_samples_; }
    bool truncated() const { return truncated_; }

    /// Reads up to n samples; returns the count actually read.
    std::size_t read(std::complex<double>* out, std::size_t n) {
        const double full = (bits_ == 8) ? 127.0 : 32767.0;
        const double gain = scale_ / full;
        std::size_t got = 0;
        if (bits_ == 8) {
            buf8_.resize(n * 2);
            in_.read(reinterpret_cast<char*>(buf8_.data()), static_cast<std::streamsize>(n * 2));
            got = static_cast<std::size_t>(in_.gcount()) / 2;
            for (std::size_t k = 0; k < got; ++k)
                out[k] = {buf8_[2 * k] * gain, buf8_[2 * k + 1] * gain};
        } else {
            buf16_.resize(n * 2);
            in_.read(reinterpret_cast<char*>(buf16_.data()), static_cast<std::streamsize>(n * 4));
            got = static_cast<std::size_t>(in_.gcount()) / 4;
            for (std::size_t k = 0; k < got; ++k)
                out[k] = {buf16_[2 * k] * gain, buf16_[2 * k + 1] * gain};
        }
        return got;
    }

  private:
    std::ifstream in_;
    int bits_;
    double scale_;
    std::uint64_t n_samples_ = 0;
    bool truncated_ = false;
    std::vector<std::int8_t> buf8_;
    std::vector<std::int16_t> buf16_;
};

}  // namespace gnsstwin
