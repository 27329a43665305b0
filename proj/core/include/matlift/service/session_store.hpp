#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "matlift/oracle.hpp"
#include "matlift/scene.hpp"
#include "matlift/service/config.hpp"
#include "matlift/session.hpp"

namespace matlift::service {

/// Oracle described by the [service] and [noise] sections.
std::shared_ptr<const oracle::SimilarityOracle> make_oracle(const EngineConfig& config);

/// Fibonacci manifest from the [render] section, subsampled by view_fraction.
scene::ViewManifest default_manifest(const scene::Mesh& mesh, const EngineConfig& config);

/// Built-in asset ids ("demo", "sphere") or an OBJ file under `asset_dir`.
scene::Mesh load_asset(const std::string& asset_id, const std::filesystem::path& asset_dir);

std::string polarity_name(oracle::Polarity p);
oracle::Polarity parse_polarity(const std::string& name);

nlohmann::json click_to_json(const oracle::Click& click);
oracle::Click click_from_json(const nlohmann::json& j);

struct SessionDirOptions {
  bool masks = true;  // reconstruct every manifest view into masks/ and heatmaps/
};

/// Writes a self-contained session directory: asset.obj, manifest.json,
/// session.json, cloud.msc, timing.json and optionally masks/ (PGM) and
/// heatmaps/ (float rasters) for the manifest views.
void write_session_dir(const std::filesystem::path& dir, const lift::SelectionSession& session,
                       const EngineConfig& config, const std::string& asset_id,
                       const SessionDirOptions& options = {});

struct LoadedSession {
  std::string asset_id;
  EngineConfig config;
  std::unique_ptr<lift::SelectionSession> session;
};

/// Reloads a directory written by write_session_dir; the stored cloud is
/// re-indexed without querying the oracle.
LoadedSession load_session_dir(const std::filesystem::path& dir);

}  // namespace matlift::service
