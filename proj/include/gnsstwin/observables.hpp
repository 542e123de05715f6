#pragma once

#include <stdexcept>
#include <vector>

#include "gnsstwin/gps_time.hpp"

namespace gnsstwin {

enum class ObservableSource { truth, receiver };

/// Per-epoch, per-PRN measurement record shared by the truth model and the
/// receiver so the two sides can be diffed directly.
struct ObservableRecord {
    GpsTime t_rx;
    int prn = 0;
    double pseudorange_m = 0.0;       // satellite-clock-corrected
    double doppler_hz = 0.0;
    double carrier_phase_cycles = 0.0;
    double cn0_dbhz = 0.0;
    ObservableSource source = ObservableSource::truth;
};

}  // namespace gnsstwin
