#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "gnsstwin/fft.hpp"
#include "gnsstwin/observables.hpp"
#include "gnsstwin/synth.hpp"

namespace gnsstwin {

struct PsdResult {
    std::vector<double> freq_hz;    // ascending, spanning [-fs/2, fs/2)
    std::vector<double> psd_w_hz;   // linear power density
    double fs = 0.0;
    int segments_averaged = 0;

    double db_at(std::size_t i) const { return 10.0 * std::log10(psd_w_hz[i]); }
};

/// Welch averaged periodogram: Hann window, power-normalized, two-sided.
inline PsdResult estimate_psd(const std::complex<double>* x, std::size_t n, double fs,
                              std::size_t segment = 4096, double overlap = 0.5) {
    if (segment == 0 || segment > n) throw std::invalid_argument("estimate_psd: segment longer than data");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("estimate_psd: overlap in [0,1)");
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(segment * (1.0 - overlap)));
    if (n < segment + hop) throw std::invalid_argument("estimate_psd: need at least two segments");

    std::vector<double> window(segment);
    double wsq = 0.0;
    for (std::size_t i = 0; i < segment; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(segment));
        wsq += window[i] * window[i];
    }

    Fft fft(segment);
    std::vector<double> acc(segment, 0.0);
    std::vector<std::complex<double>> buf(segment);
    int count = 0;
    for (std::size_t start = 0; start + segment <= n; start += hop) {
        for (std::size_t i = 0; i < segment; ++i) buf[i] = x[start + i] * window[i];
        const auto spec = fft.forward(buf.data());
        for (std::size_t i = 0; i < segment; ++i) acc[i] += std::norm(spec[i]);
        ++count;
    }

    PsdResult out;
    out.fs = fs;
    out.segments_averaged = count;
    out.freq_hz.resize(segment);
    out.psd_w_hz.resize(segment);
    const double norm = 1.0 / (fs * wsq * static_cast<double>(count));
    // fftshift so the axis ascends from -fs/2.
    const std::size_t half = segment / 2;
    for (std::size_t i = 0; i < segment; ++i) {
        const std::size_t src = (i + half) % segment;
        out.freq_hz[i] = (static_cast<double>(i) - static_cast<double>(half)) * fs / static_cast<double>(segment);
        out.psd_w_hz[i] = acc[src] * norm;
    }
    return out;
}

inline PsdResult estimate_psd(const IqBlock& block, std::size_t segment = 4096,
                              double overlap = 0.5) {
    return estimate_psd(block.samples.data(), block.samples.size(), block.fs, segment, overlap);
}

/// Receiver clock bias samples on a uniform grid.
struct ClockSeries {
    std::vector<double> epochs_s;  // uniform spacing tau0
    std::vector<double> bias_s;

    double tau0() const {
        if (epochs_s.size() < 2) throw std::invalid_argument("clock series needs >= 2 samples");
        return epochs_s[1] - epochs_s[0];
    }

    void validate() const {
        if (bias_s.size() != epochs_s.size() || bias_s.size() < 3)
            throw std::invalid_argument("clock series needs >= 3 uniform samples");
        const double dt = tau0();
        for (std::size_t i = 1; i < epochs_s.size(); ++i) {
            const double step = epochs_s[i] - epochs_s[i - 1];
            if (std::abs(step - dt) > 1e-6 * dt)
                throw std::invalid_argument("clock series spacing is not uniform");
        }
    }
};

struct AllanPoint {
    double tau_s = 0.0;
    double adev = 0.0;
};

/// Overlapping Allan deviation from the time-offset sequence. At m = 1 this
/// reduces to the first-difference fractional-frequency form.
inline std::vector<AllanPoint> allan_deviation(const ClockSeries& cs,
                                               const std::vector<double>& taus) {
    cs.validate();
    const double tau0 = cs.tau0();
    const auto n = static_cast<std::ptrdiff_t>(cs.bias_s.size());
    std::vector<AllanPoint> out;
    for (const double tau : taus) {
        const double m_real = tau / tau0;
        const auto m = static_cast<std::ptrdiff_t>(std::llround(m_real));
        if (m < 1 || std::abs(m_real - static_cast<double>(m)) > 1e-6)
            throw std::invalid_argument("allan_deviation: tau must be an integer multiple of tau0");
        if (n - 2 * m < 3)
            throw std::invalid_argument("allan_deviation: too few clusters at tau = " +
                                        std::to_string(tau));
        double sum = 0.0;
        for (std::ptrdiff_t i = 0; i + 2 * m < n; ++i) {
            const double d = cs.bias_s[i + 2 * m] - 2.0 * cs.bias_s[i + m] + cs.bias_s[i];
            sum += d * d;
        }
        const double sigma2 = sum / (2.0 * static_cast<double>(n - 2 * m) * tau * tau);
        out.push_back({tau, std::sqrt(sigma2)});
    }
    return out;
}

struct ClockFit {
    double bias0_s = 0.0;   // intercept at the first epoch
    double drift_sps = 0.0; // slope (fractional frequency offset)
    double residual_rms_s = 0.0;
};

/// Ordinary least-squares line through the bias series.
inline ClockFit fit_clock_drift(const ClockSeries& cs) {
    if (cs.bias_s.size() < 3 || cs.bias_s.size() != cs.epochs_s.size())
        throw std::invalid_argument("fit_clock_drift: need >= 3 samples");
    const auto n = static_cast<double>(cs.bias_s.size());
    const double t0 = cs.epochs_s.front();
    double st = 0, sb = 0, stt = 0, stb = 0;
    for (std::size_t i = 0; i < cs.bias_s.size(); ++i) {
        const double t = cs.epochs_s[i] - t0;
        st += t;
        sb += cs.bias_s[i];
        stt += t * t;
        stb += t * cs.bias_s[i];
    }
    ClockFit fit;
    const double det = n * stt - st * st;
    fit.drift_sps = (n * stb - st * sb) / det;
    fit.bias0_s = (sb - fit.drift_sps * st) / n;
    double rss = 0.0;
    for (std::size_t i = 0; i < cs.bias_s.size(); ++i) {
        const double r = cs.bias_s[i] - (fit.bias0_s + fit.drift_sps * (cs.epochs_s[i] - t0));
        rss += r * r;
    }
    fit.residual_rms_s = std::sqrt(rss / n);
    return fit;
}

struct ErrorStats {
    double mean = 0.0;
    double rms = 0.0;
    double max_abs = 0.0;
    std::size_t count = 0;
};

struct ObservableErrors {
    // Per-PRN error series, one entry per common epoch.
    std::map<int, std::vector<double>> pseudorange_m;
    std::map<int, std::vector<double>> doppler_hz;
    std::map<int, std::vector<double>> carrier_cycles;
    std::map<int, ErrorStats> pseudorange_stats;
    std::map<int, ErrorStats> doppler_stats;
    std::map<int, ErrorStats> carrier_stats;
};

namespace detail {

inline ErrorStats stats_of(const std::vector<double>& v) {
    ErrorStats s;
    s.count = v.size();
    if (v.empty()) return s;
    double sum = 0, sq = 0;
    for (double x : v) {
        sum += x;
        sq += x * x;
        s.max_abs = std::max(s.max_abs, std::abs(x));
    }
    s.mean = sum / static_cast<double>(v.size());
    s.rms = std::sqrt(sq / static_cast<double>(v.size()));
    return s;
}

}  // namespace detail

/// Truth-vs-estimate observable differencing. The receiver clock common mode
/// is removed from pseudoranges by subtracting the per-epoch mean across the
/// shared PRNs (a single-difference equivalent); carrier phase is compared
/// modulo a per-PRN integer-cycle ambiguity.
inline ObservableErrors compare_observables(const std::vector<ObservableRecord>& truth,
                                            const std::vector<ObservableRecord>& est,
                                            double epoch_tol_s = 1e-3) {
    ObservableErrors out;
    // Index truth by (coarse epoch key, prn).
    auto key_of = [&](const GpsTime& t) {
        return static_cast<std::int64_t>(std::llround((t.week * kSecondsPerWeek + t.tow) / epoch_tol_s));
    };
    std::map<std::pair<std::int64_t, int>, const ObservableRecord*> truth_idx;
    for (const auto& r : truth) truth_idx[{key_of(r.t_rx), r.prn}] = &r;

    // Group estimate records by epoch.
    std::map<std::int64_t, std::vector<const ObservableRecord*>> est_epochs;
    for (const auto& r : est) est_epochs[key_of(r.t_rx)].push_back(&r);

    std::map<int, std::vector<double>> raw_pr;
    bool any_common = false;
    for (const auto& [ep, recs] : est_epochs) {
        std::vector<std::pair<int, double>> pr_errors;
        for (const auto* r : recs) {
            const auto it = truth_idx.find({ep, r->prn});
            if (it == truth_idx.end()) continue;
            any_common = true;
            const auto& t = *it->second;
            pr_errors.emplace_back(r->prn, r->pseudorange_m - t.pseudorange_m);
            out.doppler_hz[r->prn].push_back(r->doppler_hz - t.doppler_hz);
            out.carrier_cycles[r->prn].push_back(r->carrier_phase_cycles - t.carrier_phase_cycles);
        }
        if (pr_errors.empty()) continue;
        double common = 0.0;
        for (const auto& [prn, e] : pr_errors) common += e;
        common /= static_cast<double>(pr_errors.size());
        for (const auto& [prn, e] : pr_errors) out.pseudorange_m[prn].push_back(e - common);
    }
    if (!any_common) throw std::invalid_argument("compare_observables: no common PRNs/epochs");

    // Carrier phase: strip the per-PRN integer-cycle ambiguity.
    for (auto& [prn, series] : out.carrier_cycles) {
        double mean = 0.0;
        for (double v : series) mean += v;
        mean /= static_cast<double>(series.size());
        const double ambiguity = std::round(mean);
        for (double& v : series) v -= ambiguity;
    }

    for (const auto& [prn, v] : out.pseudorange_m) out.pseudorange_stats[prn] = detail::stats_of(v);
    for (const auto& [prn, v] : out.doppler_hz) out.doppler_stats[prn] = detail::stats_of(v);
    for (const auto& [prn, v] : out.carrier_cycles) out.carrier_stats[prn] = detail::stats_of(v);
    return out;
}

}  // namespace gnsstwin
