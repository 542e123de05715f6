#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnsstwin/ephemeris.hpp"
#include "gnsstwin/gps_time.hpp"

namespace gnsstwin {

struct NavFile {
    std::vector<BroadcastEphemeris> records;
    KlobucharCoeffs klobuchar;
};

struct EphemerisSet {
    std::map<int, BroadcastEphemeris> by_prn;
    KlobucharCoeffs klobuchar;
};

namespace detail {

[[noreturn]] inline void rinex_error(int line_no, const std::string& what) {
    throw std::runtime_error("RINEX parse error at line " + std::to_string(line_no) + ": " + what);
}

/// Fortran-style float field: blank means 0, D/d exponents accepted.
inline double rinex_field(const std::string& line, std::size_t pos, std::size_t len, int line_no) {
    if (pos >= line.size()) return 0.0;
    std::string field = line.substr(pos, len);
    for (auto& c : field)
        if (c == 'D' || c == 'd') c = 'E';
    if (field.find_first_not_of(" \t\r") == std::string::npos) return 0.0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    while (end && *end == ' ') ++end;
    if (end == field.c_str() || (end && *end != '\0'))
        rinex_error(line_no, "malformed numeric field '" + field + "'");
    return v;
}

inline int rinex_int(const std::string& line, std::size_t pos, std::size_t len, int line_no) {
    return static_cast<int>(std::lround(rinex_field(line, pos, len, line_no)));
}

/// Calendar date/time to GPS time (weeks since 1980-01-06).
inline GpsTime gps_from_calendar(int year, int month, int day, int hour, int minute, double sec) {
    static const int doy[12] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
    if (year < 80) year += 2000;
    else if (year < 100) year += 1900;
    int ly = year - (month <= 2 ? 1 : 0);
    long days = 365L * year + ly / 4 - ly / 100 + ly / 400 + doy[month - 1] + day;
    // days since 1980-01-06
    days -= 365L * 1980 + 1979 / 4 - 1979 / 100 + 1979 / 400 + 6;
    const int week = static_cast<int>(days / 7);
    const double tow = (days - 7L * week) * 86400.0 + hour * 3600.0 + minute * 60.0 + sec;
    return GpsTime(week, tow);
}

}  // namespace detail

/// Reads a RINEX 2.x or 3.x GPS navigation file: header ionosphere
/// coefficients plus every GPS broadcast orbit record. Non-GPS records in
/// mixed 3.x files are skipped.
inline NavFile read_rinex_nav(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open RINEX navigation file: " + path);

    NavFile nav;
    std::string line;
    int line_no = 0;
    double version = 0.0;

    // Header
    while (std::getline(f, line)) {
        ++line_no;
        const std::string label = line.size() > 60 ? line.substr(60) : "";
        if (label.rfind("RINEX VERSION / TYPE", 0) == 0) {
            version = detail::rinex_field(line, 0, 9, line_no);
        } else if (label.rfind("ION ALPHA", 0) == 0) {
            for (int i = 0; i < 4; ++i)
                nav.klobuchar.alpha[i] = detail::rinex_field(line, 2 + 12 * i, 12, line_no);
            nav.klobuchar.valid = true;
        } else if (label.rfind("ION BETA", 0) == 0) {
            for (int i = 0; i < 4; ++i)
                nav.klobuchar.beta[i] = detail::rinex_field(line, 2 + 12 * i, 12, line_no);
        } else if (label.rfind("IONOSPHERIC CORR", 0) == 0) {
            const std::string kind = line.substr(0, 4);
            if (kind == "GPSA") {
                for (int i = 0; i < 4; ++i)
                    nav.klobuchar.alpha[i] = detail::rinex_field(line, 5 + 12 * i, 12, line_no);
                nav.klobuchar.valid = true;
            } else if (kind == "GPSB") {
                for (int i = 0; i < 4; ++i)
                    nav.klobuchar.beta[i] = detail::rinex_field(line, 5 + 12 * i, 12, line_no);
            }
        } else if (label.rfind("END OF HEADER", 0) == 0) {
            break;
        }
        if (line_no > 500 && version == 0.0) detail::rinex_error(line_no, "missing header");
    }
    if (version == 0.0) throw std::runtime_error("RINEX header has no version line: " + path);
    const bool v3 = version >= 3.0;

    // Body
    while (std::getline(f, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        if (v3 && line[0] != 'G') {
            // Skip a non-GPS record and its continuation lines.
            while (f.peek() == ' ') {
                std::getline(f, line);
                ++line_no;
            }
            continue;
        }

        BroadcastEphemeris e;
        int year, month, day, hour, minute;
        double sec;
        std::size_t off;
        if (v3) {
            e.prn = detail::rinex_int(line, 1, 2, line_no);
            year = detail::rinex_int(line, 4, 4, line_no);
            month = detail::rinex_int(line, 9, 2, line_no);
            day = detail::rinex_int(line, 12, 2, line_no);
            hour = detail::rinex_int(line, 15, 2, line_no);
            minute = detail::rinex_int(line, 18, 2, line_no);
            sec = detail::rinex_field(line, 21, 2, line_no);
            off = 23;
        } else {
            e.prn = detail::rinex_int(line, 0, 2, line_no);
            year = detail::rinex_int(line, 2, 3, line_no);
            month = detail::rinex_int(line, 5, 3, line_no);
            day = detail::rinex_int(line, 8, 3, line_no);
            hour = detail::rinex_int(line, 11, 3, line_no);
            minute = detail::rinex_int(line, 14, 3, line_no);
            sec = detail::rinex_field(line, 17, 5, line_no);
            off = 22;
        }
        const GpsTime toc = detail::gps_from_calendar(year, month, day, hour, minute, sec);
        e.week = toc.week;
        e.toc = toc.tow;
        e.af0 = detail::rinex_field(line, off, 19, line_no);
        e.af1 = detail::rinex_field(line, off + 19, 19, line_no);
        e.af2 = detail::rinex_field(line, off + 38, 19, line_no);

        double fields[28] = {};
        for (int row = 0; row < 7; ++row) {
            if (!std::getline(f, line)) detail::rinex_error(line_no, "truncated record");
            ++line_no;
            const std::size_t base = v3 ? 4 : 3;
            for (int col = 0; col < 4; ++col)
                fields[row * 4 + col] = detail::rinex_field(line, base + 19 * col, 19, line_no);
        }

        e.iode = static_cast<int>(fields[0]);
        e.crs = fields[1];
        e.delta_n = fields[2];
        e.m0 = fields[3];
        e.cuc = fields[4];
        e.e = fields[5];
        e.cus = fields[6];
        e.sqrt_a = fields[7];
        e.toe = fields[8];
        e.cic = fields[9];
        e.omega0 = fields[10];
        e.cis = fields[11];
        e.i0 = fields[12];
        e.crc = fields[13];
        e.omega = fields[14];
        e.omega_dot = fields[15];
        e.idot = fields[16];
        const int wn = static_cast<int>(fields[18]);
        if (wn > 0) {
            // Line-5 week refers to toe; trust it when consistent with toc.
            e.week = (std::abs(wn - toc.week) <= 1) ? wn : toc.week;
        }
        e.ura_m = fields[20];
        e.health = static_cast<int>(fields[21]);
        e.tgd = fields[22];
        e.iodc = static_cast<int>(fields[23]);

        nav.records.push_back(e);
    }
    return nav;
}

/// One ephemeris per PRN: the record whose toe is nearest to t0, ties broken
/// toward the earlier toe. Records outside the fit window are unusable.
inline EphemerisSet load_ephemerides(const std::string& path, const GpsTime& t0,
                                     double fit_window_s = 4.0 * 3600.0) {
    const NavFile nav = read_rinex_nav(path);
    EphemerisSet set;
    set.klobuchar = nav.klobuchar;
    for (const auto& e : nav.records) {
        const double dt = std::abs(GpsTime(e.week, e.toe) - t0);
        if (dt > fit_window_s) continue;
        auto it = set.by_prn.find(e.prn);
        if (it == set.by_prn.end()) {
            set.by_prn[e.prn] = e;
            continue;
        }
        const double best = std::abs(GpsTime(it->second.week, it->second.toe) - t0);
        const bool closer = dt < best;
        const bool tie_earlier =
            dt == best && GpsTime(e.week, e.toe) - GpsTime(it->second.week, it->second.toe) < 0.0;
        if (closer || tie_earlier) it->second = e;
    }
    if (set.by_prn.empty())
        throw std::runtime_error("no GPS ephemeris overlaps the scenario window in " + path);
    for (const auto& [prn, e] : set.by_prn) validate_ephemeris(e);
    return set;
}

}  // namespace gnsstwin
