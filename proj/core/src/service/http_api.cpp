#include "matlift/service/http_api.hpp"

#include <httplib.h>

#include "matlift/service/session_store.hpp"

namespace matlift::service {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
  send_json(res, {{"error", msg}, {"code", code}}, status);
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed JSON body: ") + e.what());
  }
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("query parameter ") + key + " must be a number");
  }
}

OrbitView query_view(const httplib::Request& req) {
  OrbitView v;
  v.yaw_deg = query_double(req, "yaw", v.yaw_deg);
  v.pitch_deg = query_double(req, "pitch", v.pitch_deg);
  v.dist = query_double(req, "dist", v.dist);
  return v;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kBackgroundClick:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kUnselectable:
    case ErrorCode::kEmptyInput: return 422;
    case ErrorCode::kParse: return 400;
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

struct HttpApi::Impl {
  SessionManager& manager;
  httplib::Server server;

  explicit Impl(SessionManager& m) : manager(m) {}

  // Runs a handler and maps engine errors to status codes.
  template <typename F>
  httplib::Server::Handler guarded(F&& f) {
    return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      std::string id;
      if (body.contains("session_dir")) {
        id = manager.open(field<std::string>(body, "session_dir", ""));
      } else {
        id = manager.create(field<std::string>(body, "asset_id", "demo"),
                            body.contains("config") ? body.at("config") : json());
      }
      send_json(res, {{"session_id", id}}, 201);
    }));

    server.Get("/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, manager.get(req.path_params.at("id"))->describe());
    }));

    server.Get("/sessions/:id/view", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string name = req.has_param("overlay") ? req.get_param_value("overlay") : "none";
      const auto overlay = parse_overlay(name);
      if (!overlay) fail(ErrorCode::kInvalidArgument, "unknown overlay '" + name + "'");
      res.set_content(manager.render_png(req.path_params.at("id"), query_view(req), *overlay), "image/png");
    }));

    server.Post("/sessions/:id/click", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      ClickRequest click;
      click.view.yaw_deg = field<double>(body, "yaw", click.view.yaw_deg);
      click.view.pitch_deg = field<double>(body, "pitch", click.view.pitch_deg);
      click.view.dist = field<double>(body, "dist", click.view.dist);
      if (!body.contains("x") || !body.contains("y")) fail(ErrorCode::kInvalidArgument, "click needs x and y");
      click.x = field<int>(body, "x", 0);
      click.y = field<int>(body, "y", 0);
      click.polarity = parse_polarity(field<std::string>(body, "polarity", "positive"));
      const std::string& id = req.path_params.at("id");
      manager.click(id, click);
      send_json(res, {{"session_id", id}, {"status", "running"}}, 202);
    }));

    server.Patch("/sessions/:id/params", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, {{"params", manager.set_params(req.path_params.at("id"), body_json(req))}});
    }));

    server.Post("/sessions/:id/segment", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      segment::SegmentParams p;
      p.total_clicks = field<int>(body, "total_clicks", p.total_clicks);
      p.tau = field<double>(body, "tau", p.tau);
      p.eval_views = field<int>(body, "eval_views", p.eval_views);
      p.seed = field<std::uint64_t>(body, "seed", p.seed);
      send_json(res, manager.segment(req.path_params.at("id"), p));
    }));

    server.Get("/sessions/:id/export/:kind", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto file = manager.export_file(req.path_params.at("id"), req.path_params.at("kind"),
                                            query_view(req));
      res.set_header("Content-Disposition", "attachment; filename=\"" + file.filename + "\"");
      res.set_content(file.body, file.content_type);
    }));
  }
};

HttpApi::HttpApi(SessionManager& manager) : impl_(std::make_unique<Impl>(manager)) { impl_->routes(); }

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) fail(ErrorCode::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace matlift::service
