#include "matlift/service/session_store.hpp"

#include <cctype>
#include <fstream>
#include <numbers>
#include <sstream>

#include "matlift/demo_assets.hpp"
#include "matlift/error.hpp"
#include "matlift/raster_io.hpp"

namespace matlift::service {

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

bool valid_asset_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return id.find("..") == std::string::npos;
}

}  // namespace

std::shared_ptr<const oracle::SimilarityOracle> make_oracle(const EngineConfig& config) {
  if (config.oracle == "file") return std::make_shared<const oracle::FileOracle>(config.oracle_dir);
  return std::make_shared<const oracle::SyntheticOracle>(config.noise);
}

scene::ViewManifest default_manifest(const scene::Mesh& mesh, const EngineConfig& config) {
  auto manifest = scene::fibonacci_manifest(mesh, config.n_views, config.resolution,
                                            config.fov_deg * std::numbers::pi / 180.0);
  return config.view_fraction < 1.0 ? scene::subsample_views(manifest, config.view_fraction) : manifest;
}

scene::Mesh load_asset(const std::string& asset_id, const std::filesystem::path& asset_dir) {
  if (asset_id == "demo") return demo::three_material_object();
  if (asset_id == "sphere") return demo::single_material_sphere();
  if (!valid_asset_id(asset_id)) fail(ErrorCode::kInvalidArgument, "invalid asset id '" + asset_id + "'");
  const auto path = asset_dir / (asset_id + ".obj");
  if (!std::filesystem::exists(path)) fail(ErrorCode::kNotFound, "unknown asset '" + asset_id + "'");
  return scene::load_mesh(path);
}

std::string polarity_name(oracle::Polarity p) {
  return p == oracle::Polarity::kNegative ? "negative" : "positive";
}

oracle::Polarity parse_polarity(const std::string& name) {
  if (name == "positive") return oracle::Polarity::kPositive;
  if (name == "negative") return oracle::Polarity::kNegative;
  fail(ErrorCode::kInvalidArgument, "polarity must be \"positive\" or \"negative\"");
}

json click_to_json(const oracle::Click& c) {
  return {{"view_id", c.view_id}, {"x", c.x}, {"y", c.y}, {"polarity", polarity_name(c.polarity)}};
}

oracle::Click click_from_json(const json& j) {
  try {
    oracle::Click c;
    c.view_id = j.at("view_id").get<std::string>();
    c.x = j.at("x").get<int>();
    c.y = j.at("y").get<int>();
    c.polarity = parse_polarity(j.value("polarity", std::string("positive")));
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("click: ") + e.what());
  }
}

void write_session_dir(const std::filesystem::path& dir, const lift::SelectionSession& session,
                       const EngineConfig& config, const std::string& asset_id,
                       const SessionDirOptions& options) {
  const auto result = session.result();
  if (!result) fail(ErrorCode::kConflict, "session has no selection to save");
  std::filesystem::create_directories(dir);
  const auto& scene = session.scene();

  scene::save_obj(*scene.mesh, dir / "asset.obj");
  scene::save_manifest(scene.manifest, dir / "manifest.json");
  lift::save_cloud(*result->cloud, dir / "cloud.msc");

  scene::ViewManifest click_view;
  click_view.views.push_back({result->click.view_id, result->click_camera});
  const auto& t = result->timings;
  write_json(dir / "timing.json", {{"render_ms", t.render_ms},
                                   {"oracle_ms", t.oracle_ms},
                                   {"backproject_ms", t.backproject_ms},
                                   {"index_build_ms", t.index_build_ms},
                                   {"total_ms", t.total_ms}});

  auto config_json = config_to_json(config);
  const auto p = session.params();
  config_json["selection"]["k"] = p.k;
  config_json["selection"]["threshold"] = p.threshold;
  config_json["selection"]["n_probe"] = p.n_probe;
  config_json["selection"]["exact"] = p.exact;
  write_json(dir / "session.json",
             {{"format", "matlift-session-1"},
              {"asset_id", asset_id},
              {"asset", "asset.obj"},
              {"manifest", "manifest.json"},
              {"cloud", "cloud.msc"},
              {"click", click_to_json(result->click)},
              {"click_in_manifest", result->click_in_manifest},
              {"click_camera", json::parse(scene::manifest_to_json(click_view))},
              {"click_point", {result->click_point.x, result->click_point.y, result->click_point.z}},
              {"trajectory", result->trajectory},
              {"config", config_json}});

  if (!options.masks) return;
  std::filesystem::create_directories(dir / "masks");
  std::filesystem::create_directories(dir / "heatmaps");
  for (const auto& view : scene.manifest.views) {
    const auto rec = session.reconstruct(view.camera, view.id);
    io::write_pgm(io::mask_to_gray(rec.mask), dir / "masks" / (view.id + ".pgm"));
    io::write_mlf(rec.heatmap, dir / "heatmaps" / (view.id + ".simf"));
  }
}

LoadedSession load_session_dir(const std::filesystem::path& dir) {
  const json meta = read_json(dir / "session.json");
  LoadedSession out;
  try {
    out.asset_id = meta.at("asset_id").get<std::string>();
    apply_overrides(out.config, meta.at("config"));
    auto mesh = scene::load_mesh(dir / meta.at("asset").get<std::string>());
    auto manifest = scene::load_manifest(dir / meta.at("manifest").get<std::string>());
    auto cloud = lift::load_cloud(dir / meta.at("cloud").get<std::string>());
    const auto click = click_from_json(meta.at("click"));
    const auto click_view = scene::manifest_from_json(meta.at("click_camera").dump());
    if (click_view.views.size() != 1) fail(ErrorCode::kParse, "session.json: bad click_camera");
    std::vector<std::string> ids;
    for (const auto& mv : manifest.views) ids.push_back(mv.id);
    if (!manifest.find(click.view_id)) ids.push_back(click.view_id);
    if (ids.size() == cloud.view_ids.size()) cloud.view_ids = std::move(ids);
    auto scene = lift::Scene::create(std::move(mesh), std::move(manifest));
    out.session = std::make_unique<lift::SelectionSession>(std::move(scene), make_oracle(out.config),
                                                           out.config.selection);
    const auto* stored = out.session->scene().manifest.find(click.view_id);
    out.session->restore(click, stored ? stored->camera : click_view.views.front().camera,
                         std::move(cloud));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, (dir / "session.json").string() + ": " + e.what());
  }
  return out;
}

}  // namespace matlift::service
