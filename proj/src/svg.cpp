#include "scgen/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scgen/errors.hpp"
#include "scgen/num_format.hpp"
#include "scgen/sim_env.hpp"

namespace scgen {

namespace {

struct Box {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// Liang-Barsky segment/rectangle clip.
bool clip_segment(const Vec2& a, const Vec2& b, const Box& box, Vec2& ca, Vec2& cb) {
    double t0 = 0.0, t1 = 1.0;
    double dx = b.x - a.x, dy = b.y - a.y;
    auto clip = [&](double p, double q) {
        if (p == 0.0) return q >= 0.0;
        double r = q / p;
        if (p < 0.0) {
            if (r > t1) return false;
            if (r > t0) t0 = r;
        } else {
            if (r < t0) return false;
            if (r < t1) t1 = r;
        }
        return true;
    };
    if (!clip(-dx, a.x - box.min_x) || !clip(dx, box.max_x - a.x) ||
        !clip(-dy, a.y - box.min_y) || !clip(dy, box.max_y - a.y))
        return false;
    ca = {a.x + t0 * dx, a.y + t0 * dy};
    cb = {a.x + t1 * dx, a.y + t1 * dy};
    return true;
}

void append_attr(std::ostringstream& out, const char* name, double v) {
    out << ' ' << name << "=\"" << fmt_double(v) << '"';
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

} // namespace

std::string plan_view_svg(const std::vector<PlanPath>& paths, const LaneMap* map) {
    std::vector<const PlanPath*> drawable;
    for (const PlanPath& p : paths)
        if (!p.points.empty()) drawable.push_back(&p);
    if (drawable.empty()) throw ValidationError("plan view has nothing to plot");

    Box box{drawable[0]->points[0].x, drawable[0]->points[0].y, drawable[0]->points[0].x,
            drawable[0]->points[0].y};
    for (const PlanPath* p : drawable) {
        for (const Vec2& v : p->points) {
            box.min_x = std::min(box.min_x, v.x);
            box.min_y = std::min(box.min_y, v.y);
            box.max_x = std::max(box.max_x, v.x);
            box.max_y = std::max(box.max_y, v.y);
        }
    }
    double span_x = std::max(box.max_x - box.min_x, 10.0);
    double span_y = std::max(box.max_y - box.min_y, 10.0);
    double margin_x = std::max(5.0, 0.05 * span_x);
    double margin_y = std::max(5.0, 0.05 * span_y);
    box.min_x -= margin_x;
    box.max_x += margin_x;
    box.min_y -= margin_y;
    box.max_y += margin_y;
    span_x = box.max_x - box.min_x;
    span_y = box.max_y - box.min_y;

    double scale = 760.0 / span_x;
    if (span_y * scale > 760.0) scale = 760.0 / span_y;
    double draw_w = span_x * scale;
    double draw_h = span_y * scale;
    const double pad = 40.0;
    double legend_h = 18.0 * static_cast<double>(drawable.size()) + 12.0;
    double width = draw_w + 2 * pad;
    double height = draw_h + 2 * pad + legend_h;

    auto px = [&](const Vec2& v) { return pad + (v.x - box.min_x) * scale; };
    auto py = [&](const Vec2& v) { return pad + (box.max_y - v.y) * scale; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt_double(width) << ' '
        << fmt_double(height) << "\">\n";
    out << "<style>\n"
           ".lane { stroke: #c8c8c8; stroke-width: 1; stroke-dasharray: 6 4; fill: none; }\n"
           ".ego { stroke: #1f77b4; stroke-width: 2; fill: none; }\n"
           ".adversary { stroke: #d62728; stroke-width: 2; fill: none; }\n"
           ".background { stroke: #7f7f7f; stroke-width: 1.5; fill: none; }\n"
           ".start { fill: #ffffff; stroke: #333333; stroke-width: 1; }\n"
           ".finish { fill: #333333; stroke: none; }\n"
           "text { font-family: monospace; font-size: 12px; fill: #333333; }\n"
           "</style>\n";

    if (map != nullptr) {
        for (const Lane& lane : map->lanes) {
            for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
                Vec2 a, b;
                if (!clip_segment(lane.centerline[i], lane.centerline[i + 1], box, a, b)) continue;
                out << "<line class=\"lane\"";
                append_attr(out, "x1", px(a));
                append_attr(out, "y1", py(a));
                append_attr(out, "x2", px(b));
                append_attr(out, "y2", py(b));
                out << "/>\n";
            }
        }
    }

    for (const PlanPath* p : drawable) {
        out << "<polyline class=\"" << p->cls << "\" points=\"";
        for (size_t i = 0; i < p->points.size(); ++i) {
            if (i > 0) out << ' ';
            out << fmt_double(px(p->points[i])) << ',' << fmt_double(py(p->points[i]));
        }
        out << "\"/>\n";
        const Vec2& first = p->points.front();
        const Vec2& last = p->points.back();
        out << "<circle class=\"start\"";
        append_attr(out, "cx", px(first));
        append_attr(out, "cy", py(first));
        out << " r=\"4\"/>\n";
        out << "<rect class=\"finish\"";
        append_attr(out, "x", px(last) - 3.0);
        append_attr(out, "y", py(last) - 3.0);
        out << " width=\"6\" height=\"6\"/>\n";
    }

    double legend_y = draw_h + 2 * pad;
    for (size_t i = 0; i < drawable.size(); ++i) {
        double y = legend_y + 18.0 * static_cast<double>(i) + 6.0;
        out << "<line class=\"" << drawable[i]->cls << "\"";
        append_attr(out, "x1", pad);
        append_attr(out, "y1", y);
        append_attr(out, "x2", pad + 28.0);
        append_attr(out, "y2", y);
        out << "/>\n";
        out << "<text";
        append_attr(out, "x", pad + 36.0);
        append_attr(out, "y", y + 4.0);
        out << '>' << escape_text(drawable[i]->label) << "</text>\n";
    }

    out << "</svg>\n";
    return out.str();
}

std::vector<PlanPath> scenario_paths(const Scenario& s) {
    std::vector<PlanPath> paths;
    PlanPath ego;
    ego.label = "ego " + s.ego.vehicle_id;
    ego.cls = "ego";
    for (const TrajectorySample& sample : s.ego.samples) ego.points.push_back({sample.x, sample.y});
    paths.push_back(std::move(ego));

    Role adv = choose_adversary_role(s);
    for (Role role : kAllRoles) {
        auto it = s.neighbors.find(role);
        if (it == s.neighbors.end()) continue;
        PlanPath p;
        p.label = std::string(role_name(role)) + " " + it->second.vehicle_id;
        p.cls = role == adv ? "adversary" : "background";
        for (const TrajectorySample& sample : it->second.samples)
            p.points.push_back({sample.x, sample.y});
        paths.push_back(std::move(p));
    }
    return paths;
}

std::string metrics_svg(const std::vector<IterationMetrics>& history) {
    if (history.empty()) throw ValidationError("no metric rows to plot");

    struct Panel {
        const char* title;
        double (*pick)(const IterationMetrics&);
    };
    const Panel panels[] = {
        {"mean_reward", [](const IterationMetrics& m) { return m.mean_reward; }},
        {"mean_adv_reward", [](const IterationMetrics& m) { return m.mean_adv_reward; }},
        {"w_distance", [](const IterationMetrics& m) { return m.w_distance; }},
        {"collision_rate", [](const IterationMetrics& m) { return m.collision_rate; }},
    };
    const double panel_w = 680.0, panel_h = 130.0, left = 90.0, top = 30.0, gap = 40.0;
    double height = top + 4 * (panel_h + gap) + 10.0;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 " << fmt_double(height)
        << "\">\n";
    out << "<style>\n"
           ".frame { fill: none; stroke: #999999; stroke-width: 1; }\n"
           ".curve { fill: none; stroke: #1f77b4; stroke-width: 1.5; }\n"
           "text { font-family: monospace; font-size: 11px; fill: #333333; }\n"
           "</style>\n";

    double it_min = static_cast<double>(history.front().iteration);
    double it_max = static_cast<double>(history.back().iteration);
    double it_span = std::max(it_max - it_min, 1.0);

    for (size_t pi = 0; pi < 4; ++pi) {
        const Panel& panel = panels[pi];
        double oy = top + static_cast<double>(pi) * (panel_h + gap);
        double lo = panel.pick(history[0]), hi = lo;
        for (const IterationMetrics& m : history) {
            lo = std::min(lo, panel.pick(m));
            hi = std::max(hi, panel.pick(m));
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }

        out << "<text";
        append_attr(out, "x", left);
        append_attr(out, "y", oy - 6.0);
        out << '>' << panel.title << "</text>\n";
        out << "<rect class=\"frame\"";
        append_attr(out, "x", left);
        append_attr(out, "y", oy);
        append_attr(out, "width", panel_w);
        append_attr(out, "height", panel_h);
        out << "/>\n";
        out << "<text";
        append_attr(out, "x", 6.0);
        append_attr(out, "y", oy + 10.0);
        out << '>' << fmt_double(hi) << "</text>\n";
        out << "<text";
        append_attr(out, "x", 6.0);
        append_attr(out, "y", oy + panel_h);
        out << '>' << fmt_double(lo) << "</text>\n";

        out << "<polyline class=\"curve\" points=\"";
        for (size_t i = 0; i < history.size(); ++i) {
            if (i > 0) out << ' ';
            double x = left + (static_cast<double>(history[i].iteration) - it_min) / it_span *
                                  panel_w;
            double y = oy + panel_h - (panel.pick(history[i]) - lo) / (hi - lo) * panel_h;
            out << fmt_double(x) << ',' << fmt_double(y);
        }
        out << "\"/>\n";
    }

    double axis_y = top + 4 * (panel_h + gap) - gap + 16.0;
    out << "<text";
    append_attr(out, "x", left);
    append_attr(out, "y", axis_y);
    out << ">iteration " << fmt_double(it_min) << "</text>\n";
    out << "<text";
    append_attr(out, "x", left + panel_w - 80.0);
    append_attr(out, "y", axis_y);
    out << '>' << fmt_double(it_max) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

} // namespace scgen
