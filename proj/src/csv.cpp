#include "scgen/csv.hpp"

#include <cstdlib>

#include "scgen/errors.hpp"

namespace scgen {

CsvReader::CsvReader(const std::string& path) : file_(path), path_(path) {
    if (!file_.is_open()) return;
    std::string line;
    if (std::getline(file_, line)) {
        line_ = 1;
        split_csv_line(line, header_);
    }
}

int CsvReader::column(const std::string& name) const {
    for (size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return static_cast<int>(i);
    }
    return -1;
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(file_, line)) {
        ++line_;
        if (line.empty() || line == "\r") continue;
        split_csv_line(line, fields);
        return true;
    }
    return false;
}

void split_csv_line(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    size_t start = 0;
    size_t end = line.size();
    while (end > start && (line[end - 1] == '\r' || line[end - 1] == '\n')) --end;
    for (size_t i = start; i <= end; ++i) {
        if (i == end || line[i] == ',') {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
}

double parse_double_field(const std::string& s, const std::string& path,
                          size_t line, const std::string& column) {
    const char* begin = s.c_str();
    char* parse_end = nullptr;
    double v = std::strtod(begin, &parse_end);
    while (parse_end && (*parse_end == ' ' || *parse_end == '\t')) ++parse_end;
    if (parse_end == begin || (parse_end && *parse_end != '\0')) {
        throw ParseError(path, line, "non-numeric value '" + s + "' in column " + column);
    }
    return v;
}

} // namespace scgen
