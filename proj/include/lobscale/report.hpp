#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lobscale/config.hpp"

namespace lob {

// CSV column-major writer: fixed 17-significant-digit formatting, a
// `# config=<hash>` comment line and no timestamps, so re-runs are
// byte-identical. Timestamps live only in the manifest.
void write_csv(const std::string& path, const std::string& config_hash,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

void write_json(const std::string& path, const nlohmann::json& j);

// manifest.json: config hash + canonical dump, seed, tool version, timestamp.
void write_manifest(const std::string& out_dir, const RunConfig& cfg);

void ensure_dir(const std::string& path);

std::string format_g17(double x);

}  // namespace lob
