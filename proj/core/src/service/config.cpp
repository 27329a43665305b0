#include "matlift/service/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "matlift/error.hpp"

namespace matlift::service {

namespace {

[[noreturn]] void bad_value(std::string_view section, std::string_view key, const char* expected) {
  fail(ErrorCode::kInvalidArgument, "config: [" + std::string(section) + "] " + std::string(key) +
                                        " must be " + expected);
}

int as_int(const nlohmann::json& v, std::string_view s, std::string_view k) {
  if (!v.is_number_integer()) bad_value(s, k, "an integer");
  return v.get<int>();
}

double as_double(const nlohmann::json& v, std::string_view s, std::string_view k) {
  if (!v.is_number()) bad_value(s, k, "a number");
  return v.get<double>();
}

bool as_bool(const nlohmann::json& v, std::string_view s, std::string_view k) {
  if (!v.is_boolean()) bad_value(s, k, "true or false");
  return v.get<bool>();
}

std::string as_string(const nlohmann::json& v, std::string_view s, std::string_view k) {
  if (!v.is_string()) bad_value(s, k, "a string");
  return v.get<std::string>();
}

std::uint64_t as_seed(const nlohmann::json& v, std::string_view s, std::string_view k) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad_value(s, k, "a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

nlohmann::json parse_scalar(const std::string& text, const std::string& where) {
  if (text.empty()) fail(ErrorCode::kParse, where + ": missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') fail(ErrorCode::kParse, where + ": unterminated string");
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::kParse, where + ": bad string literal");
    }
  }
  if (text == "true") return true;
  if (text == "false") return false;
  try {
    const auto v = nlohmann::json::parse(text);
    if (v.is_number()) return v;
  } catch (const nlohmann::json::exception&) {
  }
  fail(ErrorCode::kParse, where + ": expected a number, boolean or quoted string, got '" + text + "'");
}

}  // namespace

void EngineConfig::validate() const {
  if (resolution.width < 1 || resolution.height < 1) {
    fail(ErrorCode::kInvalidArgument, "config: resolution must be positive");
  }
  if (n_views < 1) fail(ErrorCode::kInvalidArgument, "config: n_views must be >= 1");
  if (!(view_fraction > 0.0 && view_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "config: view_fraction must be in (0, 1]");
  }
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    fail(ErrorCode::kInvalidArgument, "config: fov_deg must be in (0, 180)");
  }
  if (uv_resolution < 1) fail(ErrorCode::kInvalidArgument, "config: uv_resolution must be >= 1");
  selection.params.validate();
  if (selection.ivf.n_clusters < 1) fail(ErrorCode::kInvalidArgument, "config: n_clusters must be >= 1");
  if (selection.stride < 1) fail(ErrorCode::kInvalidArgument, "config: stride must be >= 1");
  noise.validate();
  if (oracle != "synthetic" && oracle != "file") {
    fail(ErrorCode::kInvalidArgument, "config: oracle must be \"synthetic\" or \"file\"");
  }
  if (oracle == "file" && oracle_dir.empty()) {
    fail(ErrorCode::kInvalidArgument, "config: the file oracle needs oracle_dir");
  }
  if (port < 0 || port > 65535) fail(ErrorCode::kInvalidArgument, "config: port out of range");
}

void set_option(EngineConfig& c, std::string_view s, std::string_view k, const nlohmann::json& v) {
  if (s == "render") {
    if (k == "width") return void(c.resolution.width = as_int(v, s, k));
    if (k == "height") return void(c.resolution.height = as_int(v, s, k));
    if (k == "resolution") {
      const int r = as_int(v, s, k);
      c.resolution = {r, r};
      return;
    }
    if (k == "n_views") return void(c.n_views = as_int(v, s, k));
    if (k == "view_fraction") return void(c.view_fraction = as_double(v, s, k));
    if (k == "fov_deg") return void(c.fov_deg = as_double(v, s, k));
    if (k == "uv_resolution") return void(c.uv_resolution = as_int(v, s, k));
  } else if (s == "selection") {
    auto& sel = c.selection;
    if (k == "k") return void(sel.params.k = as_int(v, s, k));
    if (k == "threshold") return void(sel.params.threshold = as_double(v, s, k));
    if (k == "n_probe") return void(sel.params.n_probe = as_int(v, s, k));
    if (k == "exact") return void(sel.params.exact = as_bool(v, s, k));
    if (k == "n_clusters") return void(sel.ivf.n_clusters = as_int(v, s, k));
    if (k == "index_seed") return void(sel.ivf.seed = as_seed(v, s, k));
    if (k == "max_iterations") return void(sel.ivf.max_iterations = as_int(v, s, k));
    if (k == "stride") return void(sel.stride = as_int(v, s, k));
    if (k == "duplicate_click_frame") return void(sel.duplicate_click_frame = as_bool(v, s, k));
  } else if (s == "noise") {
    if (k == "pixel_sigma") return void(c.noise.pixel_sigma = as_double(v, s, k));
    if (k == "view_bias_sigma") return void(c.noise.view_bias_sigma = as_double(v, s, k));
    if (k == "view_bias_rate") return void(c.noise.view_bias_rate = as_double(v, s, k));
    if (k == "flip_rate") return void(c.noise.flip_rate = as_double(v, s, k));
    if (k == "blur_px") return void(c.noise.blur_px = as_int(v, s, k));
    if (k == "seed") {
      c.noise.seed = as_seed(v, s, k);
      c.selection.noise_seed = c.noise.seed;
      return;
    }
  } else if (s == "service") {
    if (k == "oracle") return void(c.oracle = as_string(v, s, k));
    if (k == "oracle_dir") return void(c.oracle_dir = as_string(v, s, k));
    if (k == "output_dir") return void(c.output_dir = as_string(v, s, k));
    if (k == "host") return void(c.host = as_string(v, s, k));
    if (k == "port") return void(c.port = as_int(v, s, k));
  } else {
    fail(ErrorCode::kInvalidArgument, "config: unknown section [" + std::string(s) + "]");
  }
  fail(ErrorCode::kInvalidArgument, "config: unknown key '" + std::string(k) + "' in [" +
                                        std::string(s) + "]");
}

EngineConfig parse_config(std::string_view text, const std::string& source) {
  EngineConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail(ErrorCode::kParse, where + ": malformed section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (section != "render" && section != "selection" && section != "noise" && section != "service") {
        fail(ErrorCode::kInvalidArgument, where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, where + ": expected key = value");
    if (section.empty()) fail(ErrorCode::kParse, where + ": key outside of a section");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const auto value = parse_scalar(trim(std::string_view(body).substr(eq + 1)), where);
    try {
      set_option(config, section, key, value);
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_overrides(EngineConfig& config, const nlohmann::json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) fail(ErrorCode::kInvalidArgument, "config overrides must be an object");
  EngineConfig next = config;
  for (const auto& [section, keys] : overrides.items()) {
    if (!keys.is_object()) {
      fail(ErrorCode::kInvalidArgument, "config overrides: [" + section + "] must be an object");
    }
    for (const auto& [key, value] : keys.items()) set_option(next, section, key, value);
  }
  next.validate();
  config = std::move(next);
}

nlohmann::json config_to_json(const EngineConfig& c) {
  const auto& sel = c.selection;
  return {
      {"render",
       {{"width", c.resolution.width},
        {"height", c.resolution.height},
        {"n_views", c.n_views},
        {"view_fraction", c.view_fraction},
        {"fov_deg", c.fov_deg},
        {"uv_resolution", c.uv_resolution}}},
      {"selection",
       {{"k", sel.params.k},
        {"threshold", sel.params.threshold},
        {"n_probe", sel.params.n_probe},
        {"exact", sel.params.exact},
        {"n_clusters", sel.ivf.n_clusters},
        {"index_seed", sel.ivf.seed},
        {"max_iterations", sel.ivf.max_iterations},
        {"stride", sel.stride},
        {"duplicate_click_frame", sel.duplicate_click_frame}}},
      {"noise",
       {{"pixel_sigma", c.noise.pixel_sigma},
        {"view_bias_sigma", c.noise.view_bias_sigma},
        {"view_bias_rate", c.noise.view_bias_rate},
        {"flip_rate", c.noise.flip_rate},
        {"blur_px", c.noise.blur_px},
        {"seed", c.noise.seed}}},
      {"service",
       {{"oracle", c.oracle},
        {"oracle_dir", c.oracle_dir},
        {"output_dir", c.output_dir},
        {"host", c.host},
        {"port", c.port}}},
  };
}

}  // namespace matlift::service
