#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "matlift/oracle.hpp"
#include "matlift/scene.hpp"
#include "matlift/session.hpp"

namespace matlift::service {

/// Engine defaults. Loaded from a TOML-style file with [render], [selection],
/// [noise] and [service] sections; every key is optional, unknown keys are errors.
struct EngineConfig {
  // [render]
  scene::Resolution resolution{256, 256};
  int n_views = 30;
  double view_fraction = 1.0;
  double fov_deg = 40.0;
  int uv_resolution = 512;
  // [selection]
  lift::SelectionConfig selection;
  // [noise]
  oracle::NoiseModel noise;
  // [service]
  std::string oracle = "synthetic";  // or "file"
  std::string oracle_dir;            // similarity maps for the file oracle
  std::string output_dir = "out";
  std::string host = "127.0.0.1";
  int port = 8080;

  void validate() const;
};

/// Sets one key; `value` is a JSON scalar. Throws kInvalidArgument on unknown
/// keys or mistyped values.
void set_option(EngineConfig& config, std::string_view section, std::string_view key,
                const nlohmann::json& value);

EngineConfig parse_config(std::string_view text, const std::string& source = "<config>");
EngineConfig load_config(const std::filesystem::path& path);

/// Applies {"section": {"key": value}} overrides and validates the result.
void apply_overrides(EngineConfig& config, const nlohmann::json& overrides);

nlohmann::json config_to_json(const EngineConfig& config);

}  // namespace matlift::service
