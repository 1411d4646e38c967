#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace scgen {

// Minimal line-oriented CSV reader. No quoting support; the formats this
// project consumes (NGSIM-style extracts and its own trace files) never
// quote fields.
class CsvReader {
public:
    explicit CsvReader(const std::string& path);

    bool is_open() const { return file_.is_open(); }
    const std::vector<std::string>& header() const { return header_; }
    const std::string& path() const { return path_; }

    // Index of a named header column, or -1.
    int column(const std::string& name) const;

    // Reads the next data row into `fields`. Returns false at EOF.
    bool next(std::vector<std::string>& fields);

    // 1-based line number of the row most recently returned by next().
    size_t line_number() const { return line_; }

private:
    std::ifstream file_;
    std::string path_;
    std::vector<std::string> header_;
    size_t line_ = 0;
};

void split_csv_line(const std::string& line, std::vector<std::string>& out);

// strtod wrapper that rejects trailing garbage; throws ParseError.
double parse_double_field(const std::string& s, const std::string& path,
                          size_t line, const std::string& column);

} // namespace scgen
