#include "scgen/manifest.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>

#include "scgen/errors.hpp"

namespace scgen {

using nlohmann::ordered_json;

std::string tool_version() {
#ifdef SCGEN_GIT_DESCRIBE
    return std::string("0.1.0+") + SCGEN_GIT_DESCRIBE;
#else
    return "0.1.0";
#endif
}

std::string iso_timestamp(bool deterministic) {
    if (deterministic) return "1970-01-01T00:00:00Z";
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(target.parent_path(), ec);
        if (ec) throw ArtifactError("cannot create directory " + target.parent_path().string() +
                                    ": " + ec.message());
    }
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArtifactError("cannot open " + tmp.string() + " for writing");
        out << text;
        out.flush();
        if (!out) throw ArtifactError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw ArtifactError("cannot move " + tmp.string() + " into place: " + ec.message());
}

ordered_json manifest_json(const ManifestInfo& info) {
    ordered_json j;
    j["format_version"] = 1;
    j["tool"] = info.tool;
    j["version"] = tool_version();
    j["created_at"] = iso_timestamp(info.deterministic);
    j["deterministic"] = info.deterministic;
    j["seed"] = info.seed;
    j["config_hash"] = info.config_hash;
    ordered_json inputs = ordered_json::object();
    for (const auto& [label, path] : info.inputs) inputs[label] = path;
    j["inputs"] = inputs;
    ordered_json outputs = ordered_json::object();
    for (const auto& [label, path] : info.outputs) outputs[label] = path;
    j["outputs"] = outputs;
    if (!info.extra.is_null()) j["details"] = info.extra;
    return j;
}

void write_manifest(const std::string& path, const ManifestInfo& info) {
    write_text_atomic(path, manifest_json(info).dump(2) + "\n");
}

} // namespace scgen
