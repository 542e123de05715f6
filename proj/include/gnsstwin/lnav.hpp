#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gnsstwin/constants.hpp"
#include "gnsstwin/ephemeris.hpp"
#include "gnsstwin/gps_time.hpp"

namespace gnsstwin {

/// 50 bps LNAV bit stream in the +/-1 domain, anchored at a subframe boundary.
struct NavMessage {
    int prn = 0;
    int week = 0;
    double tow_start = 0.0;        // s of week, multiple of 6
    std::vector<std::int8_t> bits; // transmitted bits, +1 for 0, -1 for 1

    int bit_at(std::int64_t index) const {
        if (index < 0 || index >= static_cast<std::int64_t>(bits.size()))
            throw std::out_of_range("NavMessage::bit_at outside generated span");
        return bits[static_cast<std::size_t>(index)];
    }
};

namespace lnav {

// Parity equations of the (32,26) Hamming code, as index sets over d1..d24.
inline constexpr std::array<std::uint32_t, 6> kParityMask = []() {
    constexpr int idx[6][15] = {
        {1, 2, 3, 5, 6, 10, 11, 12, 13, 14, 17, 18, 20, 23, 0},
        {2, 3, 4, 6, 7, 11, 12, 13, 14, 15, 18, 19, 21, 24, 0},
        {1, 3, 4, 5, 7, 8, 12, 13, 14, 15, 16, 19, 20, 22, 0},
        {2, 4, 5, 6, 8, 9, 13, 14, 15, 16, 17, 20, 21, 23, 0},
        {1, 3, 5, 6, 7, 9, 10, 14, 15, 16, 17, 18, 21, 22, 24},
        {3, 5, 6, 8, 9, 10, 11, 13, 15, 19, 22, 23, 24, 0, 0},
    };
    std::array<std::uint32_t, 6> masks{};
    for (int p = 0; p < 6; ++p) {
        std::uint32_t m = 0;
        for (int k = 0; k < 15; ++k)
            if (idx[p][k] > 0) m |= 1u << (24 - idx[p][k]);  // d1 -> bit 23
        masks[p] = m;
    }
    return masks;
}();

inline int parity32(std::uint32_t v) {
#if defined(__GNUC__)
    return __builtin_parity(v);
#else
    int p = 0;
    while (v) {
        p ^= 1;
        v &= v - 1;
    }
    return p;
#endif
}

/// Computes D25..D30 for plain data bits d (d1 in bit 23 .. d24 in bit 0).
inline std::uint32_t parity_bits(std::uint32_t data24, int d29_prev, int d30_prev) {
    const int prev[6] = {d29_prev, d30_prev, d29_prev, d30_prev, d30_prev, d29_prev};
    std::uint32_t p = 0;
    for (int i = 0; i < 6; ++i)
        p = (p << 1) | static_cast<std::uint32_t>(prev[i] ^ parity32(data24 & kParityMask[i]));
    return p;  // D25 in bit 5 .. D30 in bit 0
}

/// Builds the transmitted 30-bit word (bit 29 first) from plain data bits.
/// If solve_tail is set, data bits 23-24 are chosen so D29 = D30 = 0.
inline std::uint32_t make_word(std::uint32_t data24, int d29_prev, int d30_prev,
                               bool solve_tail = false) {
    data24 &= 0xFFFFFF;
    if (solve_tail) {
        data24 &= ~0x3u;
        // D29 depends on d24 only of the tail pair; D30 on both.
        const std::uint32_t p0 = parity_bits(data24, d29_prev, d30_prev);
        const int d24 = (p0 >> 1) & 1;           // force D29 = 0
        const std::uint32_t p1 = parity_bits(data24 | static_cast<std::uint32_t>(d24), d29_prev, d30_prev);
        const int d23 = p1 & 1;                  // force D30 = 0
        data24 |= static_cast<std::uint32_t>((d23 << 1) | d24);
    }
    const std::uint32_t parity = parity_bits(data24, d29_prev, d30_prev);
    const std::uint32_t sent = d30_prev ? (~data24 & 0xFFFFFF) : data24;
    return (sent << 6) | parity;
}

/// Parity check of a received word given the two last received bits of the
/// preceding word; returns the recovered plain data bits when valid.
inline std::optional<std::uint32_t> check_word(std::uint32_t word30, int d29_prev, int d30_prev) {
    const std::uint32_t sent = (word30 >> 6) & 0xFFFFFF;
    const std::uint32_t data = d30_prev ? (~sent & 0xFFFFFF) : sent;
    if (parity_bits(data, d29_prev, d30_prev) != (word30 & 0x3F)) return std::nullopt;
    return data;
}

inline constexpr std::uint32_t kPreamble = 0x8B;  // 10001011

// --- broadcast field quantization -----------------------------------------

inline std::uint32_t quant_unsigned(double value, double lsb, int bits) {
    const double q = std::round(value / lsb);
    const double max = std::pow(2.0, bits) - 1.0;
    return static_cast<std::uint32_t>(std::min(std::max(q, 0.0), max));
}

/// Circular angles occupy full-scale signed fields: wrap into [-pi, pi)
/// before quantizing (clamping would corrupt e.g. a RAAN of 5.4 rad).
inline double wrap_pm_pi(double angle) {
    angle = std::fmod(angle + kPi, kTwoPi);
    if (angle < 0.0) angle += kTwoPi;
    return angle - kPi;
}

inline std::uint32_t quant_signed(double value, double lsb, int bits) {
    const double q = std::round(value / lsb);
    const double lim = std::pow(2.0, bits - 1);
    const auto v = static_cast<std::int64_t>(std::min(std::max(q, -lim), lim - 1.0));
    return static_cast<std::uint32_t>(v & ((1ll << bits) - 1));
}

inline double dequant_signed(std::uint32_t raw, double lsb, int bits) {
    auto v = static_cast<std::int64_t>(raw & ((1ll << bits) - 1));
    if (v >= (1ll << (bits - 1))) v -= 1ll << bits;
    return static_cast<double>(v) * lsb;
}

inline double dequant_unsigned(std::uint32_t raw, double lsb) {
    return static_cast<double>(raw) * lsb;
}

// Field scale factors (LSB values).
inline constexpr double kLsbAf0 = 1.0 / 2147483648.0;         // 2^-31
inline constexpr double kLsbAf1 = 1.0 / 8796093022208.0;      // 2^-43
inline constexpr double kLsbAf2 = 1.0 / 36028797018963968.0;  // 2^-55
inline constexpr double kLsbToc = 16.0;                       // 2^4
inline constexpr double kLsbTgd = 1.0 / 2147483648.0;         // 2^-31
inline constexpr double kLsbCrs = 1.0 / 32.0;                 // 2^-5
inline constexpr double kLsbCrc = 1.0 / 32.0;
inline constexpr double kLsbCuc = 1.0 / 536870912.0;          // 2^-29
inline constexpr double kLsbCic = 1.0 / 536870912.0;
inline constexpr double kLsbAngle32 = kSemicircleToRad / 2147483648.0;      // 2^-31 sc
inline constexpr double kLsbRate = kSemicircleToRad / 8796093022208.0;      // 2^-43 sc/s
inline constexpr double kLsbE = 1.0 / 8589934592.0;           // 2^-33
inline constexpr double kLsbSqrtA = 1.0 / 524288.0;           // 2^-19

struct SubframeWords {
    std::array<std::uint32_t, 10> data{};  // 24 plain data bits per word
};

namespace detail_pack {

// Places `bits` of `value` so its MSB lands at 1-based position `start`
// within the 24-bit word.
inline void place(SubframeWords& sf, int word, int start, int bits, std::uint32_t value) {
    const int shift = 24 - (start - 1) - bits;
    sf.data[static_cast<std::size_t>(word - 1)] |= (value & ((1u << bits) - 1)) << shift;
}

inline std::uint32_t take(const SubframeWords& sf, int word, int start, int bits) {
    const int shift = 24 - (start - 1) - bits;
    return (sf.data[static_cast<std::size_t>(word - 1)] >> shift) & ((1u << bits) - 1);
}

}  // namespace detail_pack

/// Plain data bits of one subframe (parity-free), HOW TOW per LNAV rules:
/// the truncated TOW count of the *next* subframe start.
inline SubframeWords build_subframe(int id, const BroadcastEphemeris& eph, double tow_this) {
    using detail_pack::place;
    SubframeWords sf;
    place(sf, 1, 1, 8, kPreamble);
    const auto tow_count = static_cast<std::uint32_t>(std::llround(tow_this / 6.0) + 1) % 100800u;
    place(sf, 2, 1, 17, tow_count);
    place(sf, 2, 20, 3, static_cast<std::uint32_t>(id));

    switch (id) {
        case 1:
            place(sf, 3, 1, 10, static_cast<std::uint32_t>(eph.week % 1024));
            place(sf, 3, 11, 2, 1);  // C/A code on L2
            place(sf, 3, 13, 4, 0);  // URA index
            place(sf, 3, 17, 6, static_cast<std::uint32_t>(eph.health));
            place(sf, 3, 23, 2, static_cast<std::uint32_t>(eph.iodc >> 8));
            place(sf, 7, 17, 8, quant_signed(eph.tgd, kLsbTgd, 8));
            place(sf, 8, 1, 8, static_cast<std::uint32_t>(eph.iodc & 0xFF));
            place(sf, 8, 9, 16, quant_unsigned(eph.toc, kLsbToc, 16));
            place(sf, 9, 1, 8, quant_signed(eph.af2, kLsbAf2, 8));
            place(sf, 9, 9, 16, quant_signed(eph.af1, kLsbAf1, 16));
            place(sf, 10, 1, 22, quant_signed(eph.af0, kLsbAf0, 22));
            break;
        case 2: {
            place(sf, 3, 1, 8, static_cast<std::uint32_t>(eph.iode & 0xFF));
            place(sf, 3, 9, 16, quant_signed(eph.crs, kLsbCrs, 16));
            place(sf, 4, 1, 16, quant_signed(eph.delta_n, kLsbRate, 16));
            const std::uint32_t m0 = quant_signed(wrap_pm_pi(eph.m0), kLsbAngle32, 32);
            place(sf, 4, 17, 8, m0 >> 24);
            place(sf, 5, 1, 24, m0 & 0xFFFFFF);
            place(sf, 6, 1, 16, quant_signed(eph.cuc, kLsbCuc, 16));
            const std::uint32_t ecc = quant_unsigned(eph.e, kLsbE, 32);
            place(sf, 6, 17, 8, ecc >> 24);
            place(sf, 7, 1, 24, ecc & 0xFFFFFF);
            place(sf, 8, 1, 16, quant_signed(eph.cus, kLsbCuc, 16));
            const std::uint32_t sqa = quant_unsigned(eph.sqrt_a, kLsbSqrtA, 32);
            place(sf, 8, 17, 8, sqa >> 24);
            place(sf, 9, 1, 24, sqa & 0xFFFFFF);
            place(sf, 10, 1, 16, quant_unsigned(eph.toe, kLsbToc, 16));
            break;
        }
        case 3: {
            place(sf, 3, 1, 16, quant_signed(eph.cic, kLsbCic, 16));
            const std::uint32_t om0 = quant_signed(wrap_pm_pi(eph.omega0), kLsbAngle32, 32);
            place(sf, 3, 17, 8, om0 >> 24);
            place(sf, 4, 1, 24, om0 & 0xFFFFFF);
            place(sf, 5, 1, 16, quant_signed(eph.cis, kLsbCic, 16));
            const std::uint32_t i0 = quant_signed(eph.i0, kLsbAngle32, 32);
            place(sf, 5, 17, 8, i0 >> 24);
            place(sf, 6, 1, 24, i0 & 0xFFFFFF);
            place(sf, 7, 1, 16, quant_signed(eph.crc, kLsbCrc, 16));
            const std::uint32_t om = quant_signed(wrap_pm_pi(eph.omega), kLsbAngle32, 32);
            place(sf, 7, 17, 8, om >> 24);
            place(sf, 8, 1, 24, om & 0xFFFFFF);
            place(sf, 9, 1, 24, quant_signed(eph.omega_dot, kLsbRate, 24));
            place(sf, 10, 1, 8, static_cast<std::uint32_t>(eph.iode & 0xFF));
            place(sf, 10, 9, 14, quant_signed(eph.idot, kLsbRate, 14));
            break;
        }
        default:
            // Subframes 4/5: valid-parity filler (data id + alternating bits).
            for (int w = 3; w <= 10; ++w) {
                place(sf, w, 1, 2, 1);
                place(sf, w, 3, 22, 0x2AAAAA & 0x3FFFFF);
            }
            break;
    }
    return sf;
}

struct DecodedSubframe {
    int id = 0;
    double tow_this = 0.0;  // s of week of this subframe's first bit
    SubframeWords words;
};

/// Extracts ephemeris fields from decoded subframes 1-3.
struct EphemerisAssembler {
    BroadcastEphemeris eph;
    bool have1 = false, have2 = false, have3 = false;

    bool complete() const { return have1 && have2 && have3; }

    void feed(const DecodedSubframe& sf) {
        using detail_pack::take;
        const auto& w = sf.words;
        switch (sf.id) {
            case 1: {
                eph.week = static_cast<int>(take(w, 3, 1, 10));
                eph.health = static_cast<int>(take(w, 3, 17, 6));
                eph.iodc = static_cast<int>((take(w, 3, 23, 2) << 8) | take(w, 8, 1, 8));
                eph.tgd = dequant_signed(take(w, 7, 17, 8), kLsbTgd, 8);
                eph.toc = dequant_unsigned(take(w, 8, 9, 16), kLsbToc);
                eph.af2 = dequant_signed(take(w, 9, 1, 8), kLsbAf2, 8);
                eph.af1 = dequant_signed(take(w, 9, 9, 16), kLsbAf1, 16);
                eph.af0 = dequant_signed(take(w, 10, 1, 22), kLsbAf0, 22);
                have1 = true;
                break;
            }
            case 2: {
                eph.iode = static_cast<int>(take(w, 3, 1, 8));
                eph.crs = dequant_signed(take(w, 3, 9, 16), kLsbCrs, 16);
                eph.delta_n = dequant_signed(take(w, 4, 1, 16), kLsbRate, 16);
                eph.m0 = dequant_signed((take(w, 4, 17, 8) << 24) | take(w, 5, 1, 24), kLsbAngle32, 32);
                eph.cuc = dequant_signed(take(w, 6, 1, 16), kLsbCuc, 16);
                eph.e = dequant_unsigned((take(w, 6, 17, 8) << 24) | take(w, 7, 1, 24), kLsbE);
                eph.cus = dequant_signed(take(w, 8, 1, 16), kLsbCuc, 16);
                eph.sqrt_a = dequant_unsigned((take(w, 8, 17, 8) << 24) | take(w, 9, 1, 24), kLsbSqrtA);
                eph.toe = dequant_unsigned(take(w, 10, 1, 16), kLsbToc);
                have2 = true;
                break;
            }
            case 3: {
                eph.cic = dequant_signed(take(w, 3, 1, 16), kLsbCic, 16);
                eph.omega0 = dequant_signed((take(w, 3, 17, 8) << 24) | take(w, 4, 1, 24), kLsbAngle32, 32);
                eph.cis = dequant_signed(take(w, 5, 1, 16), kLsbCic, 16);
                eph.i0 = dequant_signed((take(w, 5, 17, 8) << 24) | take(w, 6, 1, 24), kLsbAngle32, 32);
                eph.crc = dequant_signed(take(w, 7, 1, 16), kLsbCrc, 16);
                eph.omega = dequant_signed((take(w, 7, 17, 8) << 24) | take(w, 8, 1, 24), kLsbAngle32, 32);
                eph.omega_dot = dequant_signed(take(w, 9, 1, 24), kLsbRate, 24);
                eph.iode = static_cast<int>(take(w, 10, 1, 8));
                eph.idot = dequant_signed(take(w, 10, 9, 14), kLsbRate, 14);
                have3 = true;
                break;
            }
            default:
                break;
        }
    }
};

}  // namespace lnav

/// LNAV bit stream covering n_bits from tow_start (subframe-aligned).
/// Subframe IDs follow the frame position: ID 1 when tow mod 30 == 0.
inline NavMessage build_nav_message(const BroadcastEphemeris& eph, const GpsTime& start,
                                    std::size_t n_bits) {
    if (std::fmod(start.tow, 6.0) != 0.0)
        throw std::invalid_argument("nav message must start on a 6 s subframe boundary");
    NavMessage msg;
    msg.prn = eph.prn;
    msg.week = start.week;
    msg.tow_start = start.tow;
    msg.bits.reserve(n_bits + 300);

    int d29 = 0, d30 = 0;
    double tow = start.tow;
    while (msg.bits.size() < n_bits) {
        const int id = static_cast<int>(std::llround(std::fmod(tow, 30.0)) / 6) + 1;
        const auto sf = lnav::build_subframe(id, eph, tow);
        for (int w = 0; w < 10; ++w) {
            const bool tail = (w == 1) || (w == 9);
            const std::uint32_t word = lnav::make_word(sf.data[static_cast<std::size_t>(w)], d29, d30, tail);
            for (int b = 29; b >= 0; --b)
                msg.bits.push_back(((word >> b) & 1u) ? -1 : +1);
            d29 = (word >> 1) & 1;
            d30 = word & 1;
        }
        tow += 6.0;
        if (tow >= kSecondsPerWeek) tow -= kSecondsPerWeek;
    }
    return msg;
}

struct SubframeDecodeResult {
    BroadcastEphemeris eph;
    bool eph_complete = false;
    // Transmit-time anchor: bit index (into the fed stream) of a subframe
    // start, and the SV time of that bit's leading edge.
    std::int64_t anchor_bit_index = -1;
    double anchor_tow = 0.0;
    int subframes_decoded = 0;
    int parity_failures = 0;
    bool inverted = false;
};

/// Frame-synchronizes and decodes an LNAV bit sequence (values +/-1, bit k
/// transmitted k bit-periods after bits[0]). Parity failures skip the
/// offending subframe and decoding continues at the next one.
inline SubframeDecodeResult decode_subframes(const std::vector<int>& bits) {
    SubframeDecodeResult out;
    const auto n = static_cast<std::int64_t>(bits.size());
    if (n < 360) throw std::invalid_argument("decode_subframes: need at least 360 bits");

    auto bit01 = [&](std::int64_t i) -> std::uint32_t { return bits[static_cast<std::size_t>(i)] < 0 ? 1u : 0u; };
    auto word_at = [&](std::int64_t i) {
        std::uint32_t w = 0;
        for (int b = 0; b < 30; ++b) w = (w << 1) | bit01(i + b);
        return w;
    };

    // Preamble + dual-word parity search. The two bits before the candidate
    // word supply D29*/D30*; at the very start of the stream they are not
    // available, but word-10 tail solving zeroes them at every subframe
    // boundary, so (0,0) and its inverted image (1,1) are the only options.
    std::int64_t sync = -1;
    int sync_d29 = 0, sync_d30 = 0;
    lnav::EphemerisAssembler assembler;
    for (std::int64_t k = 0; k + 60 <= n && sync < 0; ++k) {
        const int n_hyp = (k >= 2) ? 1 : 2;
        for (int hyp = 0; hyp < n_hyp && sync < 0; ++hyp) {
            const int d29p = (k >= 2) ? static_cast<int>(bit01(k - 2)) : hyp;
            const int d30p = (k >= 2) ? static_cast<int>(bit01(k - 1)) : hyp;
            const std::uint32_t w1 = word_at(k);
            const auto data1 = lnav::check_word(w1, d29p, d30p);
            if (!data1 || (*data1 >> 16) != lnav::kPreamble) continue;
            const auto data2 = lnav::check_word(word_at(k + 30), (w1 >> 1) & 1, w1 & 1);
            if (!data2) continue;
            // HOW sanity: subframe id 1..5, TOW count in range.
            const int id = static_cast<int>((*data2 >> 2) & 0x7);
            const std::uint32_t towc = *data2 >> 7;
            if (id < 1 || id > 5 || towc >= 100800) continue;
            sync = k;
            sync_d29 = d29p;
            sync_d30 = d30p;
            // Word-10 tails are solved to zero, so the emitted bit before a
            // subframe boundary is 0; seeing 1 there means inverted polarity
            // (decoding itself is transparent to it).
            out.inverted = (d30p == 1);
        }
    }
    if (sync < 0) throw std::runtime_error("decode_subframes: no valid preamble found");

    for (std::int64_t start = sync; start + 300 <= n; start += 300) {
        lnav::SubframeWords sf;
        int d29p = (start >= 2) ? static_cast<int>(bit01(start - 2)) : sync_d29;
        int d30p = (start >= 2) ? static_cast<int>(bit01(start - 1)) : sync_d30;
        bool ok = true;
        for (int w = 0; w < 10; ++w) {
            const std::uint32_t word = word_at(start + 30 * w);
            const auto data = lnav::check_word(word, d29p, d30p);
            if (!data) {
                ok = false;
                ++out.parity_failures;
                break;
            }
            sf.data[static_cast<std::size_t>(w)] = *data;
            d29p = (word >> 1) & 1;
            d30p = word & 1;
        }
        if (!ok) continue;
        if ((sf.data[0] >> 16) != lnav::kPreamble) continue;

        lnav::DecodedSubframe dec;
        dec.id = static_cast<int>((sf.data[1] >> 2) & 0x7);
        const std::uint32_t towc = sf.data[1] >> 7;
        dec.tow_this = (towc == 0 ? 100800.0 : static_cast<double>(towc)) * 6.0 - 6.0;
        dec.words = sf;
        assembler.feed(dec);
        ++out.subframes_decoded;
        if (out.anchor_bit_index < 0) {
            out.anchor_bit_index = start;
            out.anchor_tow = dec.tow_this;
        }
    }
    if (out.subframes_decoded == 0)
        throw std::runtime_error("decode_subframes: preamble found but no subframe survived parity");
    out.eph = assembler.eph;
    out.eph_complete = assembler.complete();
    return out;
}

}  // namespace gnsstwin
