#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "matlift/segment.hpp"
#include "matlift/service/config.hpp"
#include "matlift/service/overlay.hpp"
#include "matlift/session.hpp"

namespace matlift::service {

/// Camera orbiting the scene centre: yaw about +z, pitch above the xy plane,
/// both in degrees. A non-positive distance uses the framing distance.
struct OrbitView {
  double yaw_deg = 30.0;
  double pitch_deg = 20.0;
  double dist = 0.0;
};

scene::Camera orbit_camera(const lift::Scene& scene, const OrbitView& view,
                           scene::Resolution resolution, double fov_deg);

struct ClickRequest {
  OrbitView view;
  int x = 0;
  int y = 0;
  oracle::Polarity polarity = oracle::Polarity::kPositive;
};

enum class SelectionStatus { kIdle, kRunning, kReady, kFailed };
std::string status_name(SelectionStatus s);

inline constexpr const char* kOrbitViewId = "orbit";

class ServiceSession {
 public:
  ServiceSession(std::string id, std::string asset_id, EngineConfig config,
                 std::unique_ptr<lift::SelectionSession> session);
  ~ServiceSession();

  const std::string& id() const { return id_; }
  const std::string& asset_id() const { return asset_id_; }
  const EngineConfig& config() const { return config_; }
  lift::SelectionSession& selection() { return *session_; }
  const lift::SelectionSession& selection() const { return *session_; }

  SelectionStatus status() const;
  std::string error() const;
  bool busy() const { return busy_.load(); }
  std::shared_ptr<const segment::SegmentationResult> segmentation() const;

  nlohmann::json describe() const;

 private:
  friend class SessionManager;

  std::string id_;
  std::string asset_id_;
  EngineConfig config_;
  std::unique_ptr<lift::SelectionSession> session_;

  mutable std::mutex mutex_;
  SelectionStatus status_ = SelectionStatus::kIdle;
  std::string error_;
  std::shared_ptr<const segment::SegmentationResult> segmentation_;
  std::atomic<bool> busy_{false};
  std::jthread worker_;
};

struct ExportFile {
  std::string filename;
  std::string content_type;
  std::string body;
};

/// Owns the sessions served over HTTP. Selections run on a worker thread per
/// session; at most one selection or segmentation per session is in flight.
class SessionManager {
 public:
  /// `data_dir` holds assets/<id>.obj and receives sessions/<id>/; empty
  /// disables persistence and only the built-in assets are available.
  SessionManager(EngineConfig defaults, std::filesystem::path data_dir);

  std::string create(const std::string& asset_id, const nlohmann::json& overrides = nullptr);
  /// Adds a session from a directory written by write_session_dir.
  std::string open(const std::filesystem::path& session_dir);
  std::shared_ptr<ServiceSession> get(const std::string& id) const;

  /// Validates the click synchronously and starts the selection. Throws
  /// kConflict while another selection runs and kBackgroundClick on background.
  void click(const std::string& id, const ClickRequest& request);
  /// Blocks until the session is not busy or the timeout expires.
  bool wait(const std::string& id, std::chrono::milliseconds timeout) const;

  nlohmann::json set_params(const std::string& id, const nlohmann::json& patch);
  std::string render_png(const std::string& id, const OrbitView& view, Overlay overlay) const;
  nlohmann::json segment(const std::string& id, const segment::SegmentParams& params = {});
  /// kind: "uv" (PGM atlas), "cloud" (MSC1) or "masks" (PGM for the orbit view).
  ExportFile export_file(const std::string& id, const std::string& kind, const OrbitView& view) const;

  const EngineConfig& defaults() const { return defaults_; }

 private:
  std::string next_id();
  std::string add(std::string asset_id, EngineConfig config,
                  std::unique_ptr<lift::SelectionSession> session);
  void persist(const ServiceSession& s) const;

  EngineConfig defaults_;
  std::filesystem::path data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<ServiceSession>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace matlift::service
