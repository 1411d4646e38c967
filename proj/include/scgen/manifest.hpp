#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace scgen {

// Semantic version with the build's git describe when available.
std::string tool_version();

// UTC ISO-8601; the epoch when deterministic output is requested.
std::string iso_timestamp(bool deterministic);

// Writes via a sibling temp file plus rename so readers never observe a
// partial file. Throws ArtifactError on failure.
void write_text_atomic(const std::string& path, const std::string& text);

struct ManifestInfo {
    std::string tool; // subcommand that produced the run
    std::string config_hash;
    uint64_t seed = 0;
    bool deterministic = false;
    std::vector<std::pair<std::string, std::string>> inputs;  // label -> path
    std::vector<std::pair<std::string, std::string>> outputs; // label -> path
    nlohmann::ordered_json extra;                             // tool-specific block
};

nlohmann::ordered_json manifest_json(const ManifestInfo& info);
void write_manifest(const std::string& path, const ManifestInfo& info);

} // namespace scgen
