#pragma once

#include <optional>
#include <string>
#include <vector>

namespace scgen {

struct TrajectorySample {
    double time = 0.0;    // seconds
    double x = 0.0;       // meters, longitudinal, map frame
    double y = 0.0;       // meters, lateral, map frame
    double speed = 0.0;   // m/s
    double heading = 0.0; // radians in (-pi, pi]
    std::optional<int> lane;
};

struct Trajectory {
    std::string vehicle_id;
    double length = 5.0; // meters
    double width = 2.0;  // meters
    std::vector<TrajectorySample> samples;

    double start_time() const { return samples.front().time; }
    double end_time() const { return samples.back().time; }
    double duration() const { return end_time() - start_time(); }
};

// Column mapping for trajectory CSV files. Frame values are multiplied by
// frame_dt to obtain seconds, so a file with a literal time-in-seconds
// column uses frame_dt = 1.0. Speed/heading columns are optional; when
// absent both are derived from position differences.
struct CsvSchema {
    std::string vehicle_id = "Vehicle_ID";
    std::string frame = "Frame_ID";
    std::string x = "Local_X";
    std::string y = "Local_Y";
    std::string speed;   // optional
    std::string heading; // optional
    std::string length;  // optional, meters
    std::string width;   // optional, meters
    double frame_dt = 0.1; // seconds per frame unit (NGSIM convention)
};

// Parses a trajectory corpus. One Trajectory per vehicle id, samples sorted
// by time; vehicles with fewer than 2 samples are dropped (they cannot form
// a trajectory). Returned set ordered by vehicle id for determinism.
std::vector<Trajectory> load_trajectories(const std::string& path, const CsvSchema& schema);

// Writes trajectories in a form load_trajectories can read back with
// round_trip_schema(); values are shortest-round-trip formatted so a
// write/reload cycle reproduces samples exactly.
void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories);
CsvSchema round_trip_schema();

// Resamples onto the uniform grid t0, t0+dt, ... with linear interpolation
// of position, circular interpolation of heading, and speed recomputed from
// the resampled positions. Throws GapError when consecutive source samples
// are further apart than gap_threshold seconds.
Trajectory resample(const Trajectory& t, double dt, double gap_threshold = 0.5);

// Derives speed (forward position differences) and heading (atan2 of
// position differences) for samples that lack them.
void derive_speed_heading(std::vector<TrajectorySample>& samples, bool derive_speed, bool derive_heading);

} // namespace scgen
