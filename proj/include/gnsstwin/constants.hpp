#pragma once

namespace gnsstwin {

// Physical and GPS L1 C/A constants (WGS-84 / broadcast-orbit conventions).
inline constexpr double kSpeedOfLight = 299792458.0;        // m/s, exact
inline constexpr double kL1Hz = 1575.42e6;                  // L1 carrier, Hz
inline constexpr double kCaChipRateHz = 1.023e6;            // chips/s
inline constexpr int kCaCodeLength = 1023;                  // chips per code period
inline constexpr double kCaCodePeriodS = 1.0e-3;            // s
inline constexpr int kNavBitRateHz = 50;                    // LNAV bits/s
inline constexpr int kCodePeriodsPerBit = 20;               // 20 ms per data bit
inline constexpr int kChipsPerBit = kCaCodeLength * kCodePeriodsPerBit;

inline constexpr double kGmEarth = 3.986005e14;             // m^3/s^2, broadcast value
inline constexpr double kOmegaEarth = 7.2921151467e-5;      // rad/s
inline constexpr double kRelativisticF = -4.442807633e-10;  // s/sqrt(m), clock term

inline constexpr double kWgs84A = 6378137.0;                // semi-major axis, m
inline constexpr double kWgs84F = 1.0 / 298.257223563;      // flattening
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;
inline constexpr double kSemicircleToRad = kPi;             // broadcast fields use semicircles

inline constexpr double kL1WavelengthM = kSpeedOfLight / kL1Hz;

inline constexpr double kSecondsPerWeek = 604800.0;

}  // namespace gnsstwin
