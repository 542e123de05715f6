#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gnsstwin/acquisition.hpp"
#include "gnsstwin/cacode.hpp"
#include "gnsstwin/constants.hpp"
#include "gnsstwin/synth.hpp"

namespace gnsstwin {

struct JitterThresholds {
    double sigma_dll_chips = 0.0;  // d/6
    double sigma_pll_deg = 15.0;
    double sigma_fll_hz = 0.0;     // 1/(12 T)

    static JitterThresholds from(double d_chips, double t_s) {
        JitterThresholds th;
        th.sigma_dll_chips = d_chips / 6.0;
        th.sigma_pll_deg = 15.0;
        th.sigma_fll_hz = 1.0 / (12.0 * t_s);
        return th;
    }
};

struct TrackingConfig {
    double early_late_spacing_chips = 0.5;
    int integration_ms = 1;          // T in {1, 2, 4, 10, 20}
    double dll_bn_hz = 0.5;  // carrier aiding leaves only slow code-carrier divergence
    double pll_bn_hz = 18.0;
    int pll_order = 3;
    double fll_bn_hz = 10.0;         // pull-in stage
    double fll_assist_bn_hz = 2.0;   // assist inside the PLL
    int fll_pullin_intervals = 200;
    bool keep_fll_assist = true;     // hold the assist through high dynamics
    int lock_fail_limit = 50;        // consecutive weak intervals before flagging
    double f_if_hz = 0.0;

    void validate() const {
        if (!(early_late_spacing_chips > 0.0 && early_late_spacing_chips <= 1.0))
            throw std::invalid_argument("tracking: spacing d must be in (0, 1]");
        const int t = integration_ms;
        if (t != 1 && t != 2 && t != 4 && t != 10 && t != 20)
            throw std::invalid_argument("tracking: T must be one of 1, 2, 4, 10, 20 ms");
    }
};

/// Per-interval telemetry row.
struct TrackingTelemetry {
    std::int64_t sample_end = 0;  // stream sample index at interval end
    int prn = 0;
    double dll_chips = 0.0;
    double pll_deg = 0.0;
    double fll_hz = 0.0;
    double doppler_hz = 0.0;
    double code_freq_cps = 0.0;
    double carrier_cycles = 0.0;  // accumulated carrier phase at interval end
    double cn0_dbhz = 0.0;
    double prompt_i = 0.0;
    double prompt_q = 0.0;
    int stage = 0;
    bool lock = false;
};

/// Snapshot of the channel timeline at a requested stream sample, the raw
/// material for pseudorange formation.
struct ChannelMeasurement {
    std::int64_t sample_index = 0;
    double chips_abs = 0.0;          // local replica chips since track start
    double carrier_cycles = 0.0;     // accumulated carrier phase
    double doppler_hz = 0.0;
    double cn0_dbhz = 0.0;
    bool bit_synced = false;
    bool lock = false;
};

/// One L1 C/A DLL/PLL/FLL tracking channel consuming a sample stream.
/// Integration intervals span `integration_ms` local code periods (the first
/// interval is shorter, aligning the grid to the replica period rollover),
/// so bit edges coincide with interval boundaries once the bit phase is
/// known. Discriminators: envelope early-minus-late for the DLL (exactly
/// unit slope across +/- d/2), arctangent Costas for the PLL, and the
/// four-quadrant cross/dot over consecutive prompts for the FLL (pull-in
/// +/- 1/(2T)).
class TrackingChannel {
  public:
    TrackingChannel(int prn, double fs, const AcquisitionResult& acq, const TrackingConfig& cfg)
        : prn_(prn), cfg_(cfg), fs_(fs), code_(ca_code(prn)) {
        cfg_.validate();
        t_s_ = cfg_.integration_ms * 1e-3;
        doppler_hz_ = acq.doppler_hz;
        carrier_vel_ = acq.doppler_hz;  // loop integrator continues from acquisition
        chips_frac_ = acq.code_phase_chips;
        chips_abs_ = 0.0;
        code_freq_ = nominal_code_freq();
        // First interval ends at the next replica period rollover.
        interval_len_chips_ = static_cast<double>(kCaCodeLength) -
                              std::fmod(chips_frac_, static_cast<double>(kCaCodeLength));
        interval_remaining_ = interval_len_chips_;
        stage_ = Stage::fll_pullin;
    }

    int prn() const { return prn_; }
    bool lock_flagged() const { return lock_fail_count_ >= cfg_.lock_fail_limit; }
    bool locked() const { return locked_; }
    bool bit_synced() const { return bit_phase_ >= 0; }
    int intervals() const { return interval_count_; }
    double doppler_hz() const { return doppler_hz_; }
    double cn0_dbhz() const { return cn0_dbhz_; }
    const std::vector<double>& dll_history() const { return dll_hist_; }
    const std::vector<double>& pll_history() const { return pll_hist_; }
    const std::vector<double>& fll_history() const { return fll_hist_; }
    const std::vector<int>& bits() const { return bits_; }
    const std::vector<std::int64_t>& bit_start_samples() const { return bit_start_samples_; }
    const std::vector<double>& bit_start_chips() const { return bit_start_chips_; }

    /// Consumes n samples whose first element is stream index `start`.
    void process(const std::complex<double>* x, std::int64_t start, std::size_t n,
                 std::vector<TrackingTelemetry>* telemetry = nullptr) {
        if (start != next_sample_)
            throw std::invalid_argument("tracking: non-contiguous sample stream");
        const auto& trig = TrigTable::instance();
        const double inv_fs = 1.0 / fs_;
        const double half_d = cfg_.early_late_spacing_chips / 2.0;

        for (std::size_t k = 0; k < n; ++k) {
            if (!pending_measurements_.empty() && next_sample_ == pending_measurements_.front()) {
                snapshots_.push_back(snapshot_here());
                pending_measurements_.erase(pending_measurements_.begin());
            }

            double c, s;
            trig.sincos(carrier_cycles_, c, s);
            const std::complex<double> m = x[k] * std::complex<double>(c, -s);

            const int pi = chip_index(chips_frac_);
            const int ei = chip_index(chips_frac_ + half_d);
            const int li = chip_index(chips_frac_ - half_d + kCaCodeLength);
            prompt_ += m * static_cast<double>(code_.chips[static_cast<std::size_t>(pi)]);
            early_ += m * static_cast<double>(code_.chips[static_cast<std::size_t>(ei)]);
            late_ += m * static_cast<double>(code_.chips[static_cast<std::size_t>(li)]);

            const double chip_step = code_freq_ * inv_fs;
            chips_frac_ += chip_step;
            chips_abs_ += chip_step;
            interval_remaining_ -= chip_step;
            if (chips_frac_ >= kCaCodeLength) chips_frac_ -= kCaCodeLength;
            carrier_cycles_ += (cfg_.f_if_hz + doppler_hz_) * inv_fs;

            ++next_sample_;
            if (interval_remaining_ <= 0.0) finish_interval(telemetry);
        }
    }

    /// Registers a stream sample index for a measurement snapshot; indices
    /// must arrive in increasing order.
    void request_measurement(std::int64_t sample_index) {
        pending_measurements_.push_back(sample_index);
    }
    std::vector<ChannelMeasurement> take_snapshots() {
        auto out = std::move(snapshots_);
        snapshots_.clear();
        return out;
    }

    /// Moments-method (M2/M4) C/N0 estimate over the post-pull-in window;
    /// insensitive to residual phase rotation and data bits.
    double estimate_cn0(int window_intervals = 40) const {
        if (m2m4_count_ < window_intervals)
            throw std::runtime_error("estimate_cn0: not enough locked intervals");
        const double m2 = m2_sum_ / static_cast<double>(m2m4_count_);
        const double m4 = m4_sum_ / static_cast<double>(m2m4_count_);
        const double p2 = 2.0 * m2 * m2 - m4;
        const double p_sig = (p2 > 0.0) ? std::sqrt(p2) : m2;
        const double p_noise = m2 - p_sig;
        if (p_noise <= 0.0) return std::numeric_limits<double>::infinity();
        return 10.0 * std::log10(p_sig / p_noise / t_s_);
    }

  private:
    enum class Stage { fll_pullin, pll_assist, pll };

    double nominal_code_freq() const { return kCaChipRateHz * (1.0 + doppler_hz_ / kL1Hz); }

    static int chip_index(double chips) {
        auto i = static_cast<int>(chips);
        if (i >= kCaCodeLength) i -= kCaCodeLength;
        if (i >= kCaCodeLength) i -= kCaCodeLength;
        return i;
    }

    ChannelMeasurement snapshot_here() const {
        ChannelMeasurement snap;
        snap.sample_index = next_sample_;
        snap.chips_abs = chips_abs_;
        snap.carrier_cycles = carrier_cycles_;
        snap.doppler_hz = doppler_hz_;
        snap.cn0_dbhz = cn0_dbhz_;
        snap.bit_synced = bit_synced();
        snap.lock = locked_;
        return snap;
    }

    void finish_interval(std::vector<TrackingTelemetry>* telemetry) {
        const double d = cfg_.early_late_spacing_chips;
        const double e_env = std::abs(early_);
        const double l_env = std::abs(late_);
        const double p2 = std::norm(prompt_);

        // DLL: noncoherent normalized early-minus-late envelope; the
        // (2 - d)/2 factor makes the slope exactly one across +/- d/2.
        double dll_chips = 0.0;
        if (e_env + l_env > 0.0)
            dll_chips = 0.5 * (2.0 - d) * (e_env - l_env) / (e_env + l_env);

        // PLL: Costas arctangent, data-insensitive.
        double pll_cycles = 0.0;
        if (std::abs(prompt_.real()) > 0.0)
            pll_cycles = std::atan(prompt_.imag() / prompt_.real()) / kTwoPi;

        // FLL: four-quadrant cross/dot over consecutive prompts, spacing T.
        // Pairs straddling a known bit edge are skipped (sign flips there).
        const double t_int = interval_len_chips_ / kCaChipRateHz;
        double fll_hz = last_fll_hz_;
        const bool at_bit_edge =
            bit_phase_ >= 0 && ((interval_count_ - bit_phase_) %
                                (kCodePeriodsPerBit / cfg_.integration_ms)) == 0;
        if (have_prev_prompt_ && !at_bit_edge && std::norm(prev_prompt_) > 0.0 && p2 > 0.0) {
            const auto rot = prompt_ * std::conj(prev_prompt_);
            fll_hz = std::atan2(rot.imag(), rot.real()) / (kTwoPi * t_s_);
        }
        last_fll_hz_ = fll_hz;
        prev_prompt_ = prompt_;
        have_prev_prompt_ = true;

        // Loop filters (gains use the true interval span; the first interval
        // is shorter than T).
        const double t = t_int;
        if (stage_ == Stage::fll_pullin) {
            carrier_vel_ += 4.0 * cfg_.fll_bn_hz * t * fll_hz;
            doppler_hz_ = carrier_vel_;
            if (interval_count_ >= cfg_.fll_pullin_intervals) stage_ = Stage::pll_assist;
        } else {
            const double assist = (stage_ == Stage::pll_assist || cfg_.keep_fll_assist)
                                      ? 4.0 * cfg_.fll_assist_bn_hz * t * fll_hz
                                      : 0.0;
            if (cfg_.pll_order == 3) {
                const double w0 = cfg_.pll_bn_hz / 0.7845;
                pll_acc1_ += w0 * w0 * w0 * pll_cycles * t;
                carrier_vel_ += (pll_acc1_ + 1.1 * w0 * w0 * pll_cycles) * t + assist;
                doppler_hz_ = carrier_vel_ + 2.4 * w0 * pll_cycles;
            } else {
                const double w0 = cfg_.pll_bn_hz / 0.53;
                carrier_vel_ += w0 * w0 * pll_cycles * t + assist;
                doppler_hz_ = carrier_vel_ + 1.414 * w0 * pll_cycles;
            }
            if (stage_ == Stage::pll_assist && interval_count_ > cfg_.fll_pullin_intervals + 300)
                stage_ = Stage::pll;
        }

        // DLL second order, carrier-aided.
        const double wd = cfg_.dll_bn_hz / 0.53;
        dll_vel_ += wd * wd * dll_chips * t;
        code_freq_ = nominal_code_freq() + dll_vel_ + 1.414 * wd * dll_chips;

        // Histories (raw discriminator domain).
        dll_hist_.push_back(dll_chips);
        pll_hist_.push_back(pll_cycles * 360.0);
        fll_hist_.push_back(fll_hz);

        // Bit sync histogram over prompt-I sign transitions.
        const double ip = prompt_.real();
        const int ipb = kCodePeriodsPerBit / cfg_.integration_ms;
        if (interval_count_ > 0 && ((ip > 0.0) != (prev_ip_ > 0.0)))
            ++transition_hist_[static_cast<std::size_t>(interval_count_ % ipb)];
        prev_ip_ = ip;
        maybe_bit_sync();

        // Bit accumulation once synced; stamps refer to the bit's first
        // interval start.
        if (bit_phase_ >= 0) {
            const int pos = (interval_count_ - bit_phase_) % ipb;
            if (pos == 0) {
                flush_bit();
                bit_accum_ = {0.0, 0.0};
                bit_start_sample_pending_ = interval_start_sample_;
                bit_start_chips_pending_ = interval_start_chips_;
            }
            bit_accum_ += prompt_;
        }

        // C/N0 moment sums collect after pull-in.
        if (stage_ != Stage::fll_pullin && interval_len_chips_ >=
                                               static_cast<double>(kCaCodeLength * cfg_.integration_ms)) {
            m2_sum_ += p2;
            m4_sum_ += p2 * p2;
            ++m2m4_count_;
            if (m2m4_count_ >= 40 && m2m4_count_ % 20 == 0) cn0_dbhz_ = estimate_cn0();
        }

        // Costas lock detector with dwell: declare lock only after the
        // I/Q separation metric holds high, drop it after a sustained fade.
        const double nbd =
            (p2 > 0.0)
                ? (prompt_.real() * prompt_.real() - prompt_.imag() * prompt_.imag()) / p2
                : 0.0;
        lock_metric_ = 0.95 * lock_metric_ + 0.05 * nbd;
        if (stage_ != Stage::fll_pullin) {
            if (lock_metric_ < 0.25)
                ++lock_fail_count_;
            else
                lock_fail_count_ = 0;
            if (!locked_) {
                // Strict dwell: stay above 0.5 for 150 straight intervals, so
                // convergence wobble cannot latch-and-drop a phantom lock.
                if (lock_metric_ > 0.5) {
                    if (++lock_pass_count_ >= 250) locked_ = true;
                } else {
                    lock_pass_count_ = 0;
                }
            } else if (lock_fail_count_ >= cfg_.lock_fail_limit) {
                locked_ = false;
                lock_pass_count_ = 0;
            }
        }

        if (telemetry) {
            TrackingTelemetry row;
            row.sample_end = next_sample_;
            row.prn = prn_;
            row.dll_chips = dll_chips;
            row.pll_deg = pll_cycles * 360.0;
            row.fll_hz = fll_hz;
            row.doppler_hz = doppler_hz_;
            row.code_freq_cps = code_freq_;
            row.carrier_cycles = carrier_cycles_;
            row.cn0_dbhz = cn0_dbhz_;
            row.prompt_i = prompt_.real();
            row.prompt_q = prompt_.imag();
            row.stage = static_cast<int>(stage_);
            row.lock = locked_;
            telemetry->push_back(row);
        }

        prompt_ = early_ = late_ = {0.0, 0.0};
        ++interval_count_;
        interval_start_sample_ = next_sample_;
        // The true period boundary sits a fraction of a sample before this
        // stamp; subtract the replica phase past the rollover so bit-edge
        // chip counts are exact (0.4 chips here is 120 m of pseudorange).
        double frac = chips_frac_;
        if (frac > kCaCodeLength / 2.0) frac -= kCaCodeLength;
        interval_start_chips_ = chips_abs_ - frac;
        interval_len_chips_ = static_cast<double>(kCaCodeLength * cfg_.integration_ms);
        interval_remaining_ += interval_len_chips_;
    }

    void maybe_bit_sync() {
        if (bit_phase_ >= 0 || interval_count_ < 1200) return;
        std::size_t best = 0;
        int best_count = -1, second = -1;
        for (std::size_t i = 0; i < transition_hist_.size(); ++i) {
            if (transition_hist_[i] > best_count) {
                second = best_count;
                best_count = transition_hist_[i];
                best = i;
            } else if (transition_hist_[i] > second) {
                second = transition_hist_[i];
            }
        }
        if (best_count >= 10 && best_count >= 3 * std::max(second, 1))
            bit_phase_ = static_cast<int>(best);
    }

    void flush_bit() {
        if (bit_start_sample_pending_ < 0) return;
        bits_.push_back(bit_accum_.real() >= 0.0 ? +1 : -1);
        bit_start_samples_.push_back(bit_start_sample_pending_);
        bit_start_chips_.push_back(bit_start_chips_pending_);
    }

    int prn_;
    TrackingConfig cfg_;
    double fs_;
    double t_s_ = 1e-3;
    SpreadingCode code_;

    // NCO state
    double chips_frac_ = 0.0;
    double chips_abs_ = 0.0;
    double code_freq_ = kCaChipRateHz;
    double carrier_cycles_ = 0.0;
    double doppler_hz_ = 0.0;
    double interval_len_chips_ = 0.0;
    double interval_remaining_ = 0.0;

    // Correlators
    std::complex<double> early_{0.0, 0.0}, prompt_{0.0, 0.0}, late_{0.0, 0.0};
    std::complex<double> prev_prompt_{0.0, 0.0};
    bool have_prev_prompt_ = false;
    double last_fll_hz_ = 0.0;

    // Loop filter state
    double carrier_vel_ = 0.0;
    double pll_acc1_ = 0.0;
    double dll_vel_ = 0.0;
    Stage stage_ = Stage::fll_pullin;

    // Histories / counters
    std::vector<double> dll_hist_, pll_hist_, fll_hist_;
    int interval_count_ = 0;
    std::int64_t next_sample_ = 0;
    std::int64_t interval_start_sample_ = 0;
    double interval_start_chips_ = 0.0;

    // Bit sync and data bits
    std::array<int, 20> transition_hist_{};
    double prev_ip_ = 0.0;
    int bit_phase_ = -1;
    std::complex<double> bit_accum_{0.0, 0.0};
    std::vector<int> bits_;
    std::vector<std::int64_t> bit_start_samples_;
    std::vector<double> bit_start_chips_;
    std::int64_t bit_start_sample_pending_ = -1;
    double bit_start_chips_pending_ = 0.0;

    // C/N0 moments
    double m2_sum_ = 0.0;
    double m4_sum_ = 0.0;
    int m2m4_count_ = 0;
    double cn0_dbhz_ = 0.0;

    // Lock detection
    double lock_metric_ = 1.0;
    int lock_fail_count_ = 0;
    bool locked_ = false;
    int lock_pass_count_ = 0;

    // Measurement plumbing
    std::vector<std::int64_t> pending_measurements_;
    std::vector<ChannelMeasurement> snapshots_;
};

struct JitterReport {
    double sigma_dll_chips = 0.0;
    double sigma_pll_deg = 0.0;
    double sigma_fll_hz = 0.0;
    JitterThresholds thresholds;
    bool dll_pass = false;
    bool pll_pass = false;
    bool fll_pass = false;

    bool all_pass() const { return dll_pass && pll_pass && fll_pass; }
};

/// Sample standard deviations of the discriminator histories against the
/// rule-of-thumb thresholds.
inline JitterReport jitter_report(const std::vector<double>& dll_chips,
                                  const std::vector<double>& pll_deg,
                                  const std::vector<double>& fll_hz, double d_chips, double t_s) {
    if (dll_chips.size() < 100 || pll_deg.size() < 100 || fll_hz.size() < 100)
        throw std::invalid_argument("jitter_report: need >= 100 samples per history");
    auto sigma = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };
    JitterReport rep;
    rep.thresholds = JitterThresholds::from(d_chips, t_s);
    rep.sigma_dll_chips = sigma(dll_chips);
    rep.sigma_pll_deg = sigma(pll_deg);
    rep.sigma_fll_hz = sigma(fll_hz);
    rep.dll_pass = rep.sigma_dll_chips < rep.thresholds.sigma_dll_chips;
    rep.pll_pass = rep.sigma_pll_deg < rep.thresholds.sigma_pll_deg;
    rep.fll_pass = rep.sigma_fll_hz < rep.thresholds.sigma_fll_hz;
    return rep;
}

}  // namespace gnsstwin
