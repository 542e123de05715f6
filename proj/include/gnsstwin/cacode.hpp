#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "gnsstwin/constants.hpp"

namespace gnsstwin {

/// One C/A spreading code period in the +/-1 domain.
struct SpreadingCode {
    int prn = 0;
    std::array<std::int8_t, kCaCodeLength> chips{};
    double chip_rate_hz = kCaChipRateHz;

    int chip(std::int64_t index) const {
        index %= kCaCodeLength;
        if (index < 0) index += kCaCodeLength;
        return chips[static_cast<std::size_t>(index)];
    }
};

namespace detail {
// G2 phase-select taps per PRN (two-tap combination of the G2 register).
inline constexpr std::array<std::array<int, 2>, 33> kG2Taps = {{
    {0, 0},                                                  // unused, PRN starts at 1
    {2, 6},  {3, 7},  {4, 8},  {5, 9},  {1, 9},  {2, 10}, {1, 8},  {2, 9},
    {3, 10}, {2, 3},  {3, 4},  {5, 6},  {6, 7},  {7, 8},  {8, 9},  {9, 10},
    {1, 4},  {2, 5},  {3, 6},  {4, 7},  {5, 8},  {6, 9},  {1, 3},  {4, 6},
    {5, 7},  {6, 8},  {7, 9},  {8, 10}, {1, 6},  {2, 7},  {3, 8},  {4, 9},
}};
}  // namespace detail

/// Dual 10-stage shift-register Gold code with PRN-specific G2 tap selection.
inline SpreadingCode ca_code(int prn) {
    if (prn < 1 || prn > 32) throw std::invalid_argument("ca_code: prn must be in [1, 32]");

    std::array<int, 10> g1, g2;
    g1.fill(1);
    g2.fill(1);
    const auto [tap_a, tap_b] = detail::kG2Taps[static_cast<std::size_t>(prn)];

    SpreadingCode code;
    code.prn = prn;
    for (int i = 0; i < kCaCodeLength; ++i) {
        const int g1_out = g1[9];
        const int g2_out = g2[tap_a - 1] ^ g2[tap_b - 1];
        const int bit = g1_out ^ g2_out;
        code.chips[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(1 - 2 * bit);

        const int g1_fb = g1[2] ^ g1[9];
        const int g2_fb = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        for (int j = 9; j > 0; --j) {
            g1[j] = g1[j - 1];
            g2[j] = g2[j - 1];
        }
        g1[0] = g1_fb;
        g2[0] = g2_fb;
    }
    return code;
}

/// XOR in the +/-1 domain: data bit x chip x optional secondary chip.
/// L1 C/A carries no secondary code, so the hook defaults to +1.
inline int spread_symbol(int data_bit, int chip, int secondary_chip = 1) {
    return data_bit * chip * secondary_chip;
}

}  // namespace gnsstwin
