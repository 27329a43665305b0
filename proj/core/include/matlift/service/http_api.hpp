#pragma once

#include <memory>
#include <string>

#include "matlift/error.hpp"
#include "matlift/service/session_manager.hpp"

namespace matlift::service {

/// HTTP status for an engine error: 404 not found, 409 conflict, 422 invalid
/// click or argument, 400 malformed body, 500 otherwise.
int http_status(ErrorCode code);

/// JSON/PNG endpoints over a SessionManager:
///   POST  /sessions                      {asset_id, config} or {session_dir}
///   GET   /sessions/{id}
///   GET   /sessions/{id}/view?yaw&pitch&dist&overlay
///   POST  /sessions/{id}/click           {yaw, pitch, dist, x, y, polarity}
///   PATCH /sessions/{id}/params          {threshold, k, n_probe, exact}
///   POST  /sessions/{id}/segment
///   GET   /sessions/{id}/export/{uv|cloud|masks}
class HttpApi {
 public:
  explicit HttpApi(SessionManager& manager);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace matlift::service
