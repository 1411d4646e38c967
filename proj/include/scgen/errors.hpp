#pragma once

#include <stdexcept>
#include <string>

namespace scgen {

// Input file could not be parsed; message carries path and line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
          path_(path), line_(line) {}

    const std::string& path() const { return path_; }
    size_t line() const { return line_; }

private:
    std::string path_;
    size_t line_;
};

// Required column missing or column mapping inconsistent.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file rejected; names the offending key when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error("config key '" + key + "': " + what), key_(key) {}

    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// Domain invariant violated (bad map, bad trajectory, bad state).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Source samples too far apart to resample across.
class GapError : public std::runtime_error {
public:
    explicit GapError(const std::string& what) : std::runtime_error(what) {}
};

// Checkpoint or other artifact incompatible with this build / layout.
class ArtifactError : public std::runtime_error {
public:
    explicit ArtifactError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace scgen
