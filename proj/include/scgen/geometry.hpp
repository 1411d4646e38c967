#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace scgen {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

// Wrap an angle into (-pi, pi]. Angles already in range pass through
// bit-identically.
inline double wrap_angle(double a) {
    if (a > -M_PI && a <= M_PI) return a;
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

// Shortest-arc interpolation between two headings, u in [0, 1].
inline double interp_angle(double a, double b, double u) {
    return wrap_angle(a + u * wrap_angle(b - a));
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    Vec2 ab = b - a;
    double len2 = ab.dot(ab);
    if (len2 <= 0.0) return (p - a).norm();
    double t = (p - a).dot(ab) / len2;
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    Vec2 proj = a + ab * t;
    return (p - proj).norm();
}

inline double point_polyline_distance(const Vec2& p, const std::vector<Vec2>& line) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < line.size(); ++i) {
        double d = point_segment_distance(p, line[i], line[i + 1]);
        if (d < best) best = d;
    }
    return best;
}

// Arc length along the polyline of the closest projection of p. Used as the
// longitudinal coordinate of a vehicle on a lane.
inline double polyline_project_arclength(const Vec2& p, const std::vector<Vec2>& line) {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    double s = 0.0;
    for (size_t i = 0; i + 1 < line.size(); ++i) {
        Vec2 a = line[i];
        Vec2 b = line[i + 1];
        Vec2 ab = b - a;
        double len2 = ab.dot(ab);
        double t = len2 <= 0.0 ? 0.0 : (p - a).dot(ab) / len2;
        if (t < 0.0) t = 0.0;
        if (t > 1.0) t = 1.0;
        Vec2 proj = a + ab * t;
        double d = (p - proj).norm();
        double seg_len = std::sqrt(len2);
        if (d < best) {
            best = d;
            best_s = s + t * seg_len;
        }
        s += seg_len;
    }
    return best_s;
}

} // namespace scgen
