#include "scgen/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "scgen/csv.hpp"
#include "scgen/errors.hpp"
#include "scgen/geometry.hpp"
#include "scgen/num_format.hpp"

namespace scgen {

void derive_speed_heading(std::vector<TrajectorySample>& samples, bool derive_speed,
                          bool derive_heading) {
    const size_t n = samples.size();
    if (n < 2) return;
    std::vector<double> speed(n), heading(n);
    double prev_heading = 0.0;
    for (size_t i = 0; i + 1 < n; ++i) {
        double dx = samples[i + 1].x - samples[i].x;
        double dy = samples[i + 1].y - samples[i].y;
        double dt = samples[i + 1].time - samples[i].time;
        speed[i] = dt > 0.0 ? std::hypot(dx, dy) / dt : 0.0;
        if (dx != 0.0 || dy != 0.0) prev_heading = std::atan2(dy, dx);
        heading[i] = prev_heading;
    }
    speed[n - 1] = speed[n - 2];
    heading[n - 1] = heading[n - 2];
    for (size_t i = 0; i < n; ++i) {
        if (derive_speed) samples[i].speed = speed[i];
        if (derive_heading) samples[i].heading = heading[i];
    }
}

std::vector<Trajectory> load_trajectories(const std::string& path, const CsvSchema& schema) {
    CsvReader reader(path);
    if (!reader.is_open()) {
        throw ParseError(path, 0, "cannot open file");
    }

    struct Col {
        int id, frame, x, y, speed, heading, length, width;
    } col{};
    col.id = reader.column(schema.vehicle_id);
    col.frame = reader.column(schema.frame);
    col.x = reader.column(schema.x);
    col.y = reader.column(schema.y);
    col.speed = schema.speed.empty() ? -1 : reader.column(schema.speed);
    col.heading = schema.heading.empty() ? -1 : reader.column(schema.heading);
    col.length = schema.length.empty() ? -1 : reader.column(schema.length);
    col.width = schema.width.empty() ? -1 : reader.column(schema.width);

    auto require = [&](int c, const std::string& name) {
        if (c < 0) throw SchemaError(path + ": missing required column '" + name + "'");
    };
    require(col.id, schema.vehicle_id);
    require(col.frame, schema.frame);
    require(col.x, schema.x);
    require(col.y, schema.y);
    if (!schema.speed.empty() && col.speed < 0) {
        throw SchemaError(path + ": missing mapped column '" + schema.speed + "'");
    }
    if (!schema.heading.empty() && col.heading < 0) {
        throw SchemaError(path + ": missing mapped column '" + schema.heading + "'");
    }

    std::map<std::string, Trajectory> by_vehicle;
    std::vector<std::string> f;
    size_t rows = 0;
    const int max_needed = std::max({col.id, col.frame, col.x, col.y, col.speed,
                                     col.heading, col.length, col.width});
    while (reader.next(f)) {
        if (static_cast<int>(f.size()) <= max_needed) {
            throw ParseError(path, reader.line_number(),
                             "row has " + std::to_string(f.size()) + " fields, expected at least " +
                                 std::to_string(max_needed + 1));
        }
        ++rows;
        TrajectorySample s;
        s.time = parse_double_field(f[col.frame], path, reader.line_number(), schema.frame) *
                 schema.frame_dt;
        s.x = parse_double_field(f[col.x], path, reader.line_number(), schema.x);
        s.y = parse_double_field(f[col.y], path, reader.line_number(), schema.y);
        if (col.speed >= 0) {
            s.speed = parse_double_field(f[col.speed], path, reader.line_number(), schema.speed);
            if (s.speed < 0.0) {
                throw ParseError(path, reader.line_number(), "negative speed");
            }
        }
        if (col.heading >= 0) {
            s.heading = wrap_angle(
                parse_double_field(f[col.heading], path, reader.line_number(), schema.heading));
        }
        Trajectory& t = by_vehicle[f[col.id]];
        t.vehicle_id = f[col.id];
        if (col.length >= 0) {
            t.length = parse_double_field(f[col.length], path, reader.line_number(), schema.length);
        }
        if (col.width >= 0) {
            t.width = parse_double_field(f[col.width], path, reader.line_number(), schema.width);
        }
        t.samples.push_back(s);
    }
    if (rows == 0) {
        throw ValidationError(path + ": no trajectory rows");
    }

    std::vector<Trajectory> out;
    out.reserve(by_vehicle.size());
    for (auto& [id, t] : by_vehicle) {
        std::stable_sort(t.samples.begin(), t.samples.end(),
                         [](const TrajectorySample& a, const TrajectorySample& b) {
                             return a.time < b.time;
                         });
        for (size_t i = 0; i + 1 < t.samples.size(); ++i) {
            if (t.samples[i + 1].time <= t.samples[i].time) {
                throw ValidationError(path + ": vehicle " + id + " has duplicate time " +
                                      fmt_double(t.samples[i].time));
            }
        }
        if (t.samples.size() < 2) continue;
        if (col.speed < 0 || col.heading < 0) {
            derive_speed_heading(t.samples, col.speed < 0, col.heading < 0);
        }
        out.push_back(std::move(t));
    }
    return out;
}

void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path);
    if (!out.is_open()) {
        throw ValidationError(path + ": cannot open for writing");
    }
    out << "vehicle_id,time,x,y,speed,heading,length,width\n";
    for (const Trajectory& t : trajectories) {
        for (const TrajectorySample& s : t.samples) {
            out << t.vehicle_id << ',' << fmt_double(s.time) << ',' << fmt_double(s.x) << ','
                << fmt_double(s.y) << ',' << fmt_double(s.speed) << ',' << fmt_double(s.heading)
                << ',' << fmt_double(t.length) << ',' << fmt_double(t.width) << '\n';
        }
    }
}

CsvSchema round_trip_schema() {
    CsvSchema s;
    s.vehicle_id = "vehicle_id";
    s.frame = "time";
    s.x = "x";
    s.y = "y";
    s.speed = "speed";
    s.heading = "heading";
    s.length = "length";
    s.width = "width";
    s.frame_dt = 1.0;
    return s;
}

Trajectory resample(const Trajectory& t, double dt, double gap_threshold) {
    if (dt <= 0.0) {
        throw ValidationError("resample: dt must be positive");
    }
    if (t.samples.size() < 2 || t.duration() < dt) {
        throw ValidationError("resample: trajectory " + t.vehicle_id + " shorter than dt");
    }
    for (size_t i = 0; i + 1 < t.samples.size(); ++i) {
        double gap = t.samples[i + 1].time - t.samples[i].time;
        if (gap > gap_threshold + 1e-9) {
            throw GapError("vehicle " + t.vehicle_id + ": gap of " + fmt_double(gap) +
                           " s at t=" + fmt_double(t.samples[i].time));
        }
    }

    Trajectory out;
    out.vehicle_id = t.vehicle_id;
    out.length = t.length;
    out.width = t.width;

    const double t0 = t.start_time();
    const size_t n_out = static_cast<size_t>(std::floor(t.duration() / dt + 1e-9)) + 1;
    out.samples.reserve(n_out);
    size_t seg = 0;
    for (size_t k = 0; k < n_out; ++k) {
        const double tk = t0 + static_cast<double>(k) * dt;
        while (seg + 2 < t.samples.size() && t.samples[seg + 1].time <= tk) ++seg;
        const TrajectorySample& a = t.samples[seg];
        const TrajectorySample& b = t.samples[seg + 1];
        const double span = b.time - a.time;
        double u = span > 0.0 ? (tk - a.time) / span : 0.0;
        if (u < 0.0) u = 0.0;
        if (u > 1.0) u = 1.0;
        TrajectorySample s;
        s.time = tk;
        s.x = a.x + u * (b.x - a.x);
        s.y = a.y + u * (b.y - a.y);
        s.heading = interp_angle(a.heading, b.heading, u);
        out.samples.push_back(s);
    }
    // Speed from the resampled positions, forward differences.
    for (size_t i = 0; i + 1 < out.samples.size(); ++i) {
        double dx = out.samples[i + 1].x - out.samples[i].x;
        double dy = out.samples[i + 1].y - out.samples[i].y;
        out.samples[i].speed = std::hypot(dx, dy) / dt;
    }
    out.samples.back().speed = out.samples[out.samples.size() - 2].speed;
    return out;
}

} // namespace scgen
