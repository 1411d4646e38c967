#pragma once

#include <charconv>
#include <string>

namespace scgen {

// Shortest decimal form that round-trips the double. Locale-independent,
// so CSV/SVG output stays byte-stable.
inline std::string fmt_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace scgen
