#pragma once

#include <cmath>

#include "gnsstwin/constants.hpp"

namespace gnsstwin {

/// GPS time as (week number, seconds of week). tow is kept in [0, 604800).
struct GpsTime {
    int week = 0;
    double tow = 0.0;

    GpsTime() = default;
    GpsTime(int w, double t) : week(w), tow(t) { normalize(); }

    void normalize() {
        while (tow >= kSecondsPerWeek) {
            tow -= kSecondsPerWeek;
            ++week;
        }
        while (tow < 0.0) {
            tow += kSecondsPerWeek;
            --week;
        }
    }

    GpsTime operator+(double seconds) const { return GpsTime(week, tow + seconds); }
    GpsTime operator-(double seconds) const { return GpsTime(week, tow - seconds); }

    /// Difference in seconds, accounting for week rollover.
    double operator-(const GpsTime& other) const {
        return (week - other.week) * kSecondsPerWeek + (tow - other.tow);
    }

    double seconds_of_day() const { return std::fmod(tow, 86400.0); }
};

/// Time-of-week difference wrapped to [-302400, 302400), as used when
/// evaluating broadcast elements around their reference epoch.
inline double wrap_week_seconds(double dt) {
    if (dt > kSecondsPerWeek / 2.0) dt -= kSecondsPerWeek;
    if (dt < -kSecondsPerWeek / 2.0) dt += kSecondsPerWeek;
    return dt;
}

}  // namespace gnsstwin
