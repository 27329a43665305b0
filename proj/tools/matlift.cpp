// matlift command line: render-views, select, segment, eval, bake-uv, serve.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "matlift/error.hpp"
#include "matlift/evaluation.hpp"
#include "matlift/metrics.hpp"
#include "matlift/parallel.hpp"
#include "matlift/postprocess.hpp"
#include "matlift/raster_io.hpp"
#include "matlift/segment.hpp"
#include "matlift/service/config.hpp"
#include "matlift/service/http_api.hpp"
#include "matlift/service/session_manager.hpp"
#include "matlift/service/session_store.hpp"

namespace fs = std::filesystem;
using namespace matlift;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;

struct Common {
  std::string config_path;
  unsigned threads = 0;
  std::optional<int> res;
  std::optional<double> threshold;
  std::optional<int> k;
  std::optional<int> n_probe;
  std::optional<double> noise_pixel;
  std::optional<double> noise_bias;
  std::optional<double> noise_bias_rate;
  std::optional<double> noise_flip;
  std::optional<std::uint64_t> noise_seed;
  std::optional<std::string> oracle_dir;
};

void add_selection_flags(CLI::App* app, Common& c) {
  app->add_option("--res", c.res, "Square render resolution");
  app->add_option("--threshold", c.threshold, "Similarity threshold in [0, 1]");
  app->add_option("--k", c.k, "Neighbours per vote (odd)");
  app->add_option("--n-probe", c.n_probe, "Clusters visited per query");
  app->add_option("--noise-pixel", c.noise_pixel, "Synthetic oracle per-pixel sigma");
  app->add_option("--noise-bias", c.noise_bias, "Synthetic oracle per-view bias sigma");
  app->add_option("--noise-bias-rate", c.noise_bias_rate, "Fraction of views receiving the bias");
  app->add_option("--noise-flip", c.noise_flip, "Probability that a view is blurred");
  app->add_option("--noise-seed", c.noise_seed, "Synthetic oracle seed");
  app->add_option("--oracle-dir", c.oracle_dir, "Read <view>.simf similarity maps instead of synthesizing");
}

service::EngineConfig engine_config(const Common& c) {
  auto cfg = c.config_path.empty() ? service::EngineConfig{} : service::load_config(c.config_path);
  if (c.res) service::set_option(cfg, "render", "resolution", *c.res);
  if (c.threshold) service::set_option(cfg, "selection", "threshold", *c.threshold);
  if (c.k) service::set_option(cfg, "selection", "k", *c.k);
  if (c.n_probe) service::set_option(cfg, "selection", "n_probe", *c.n_probe);
  if (c.noise_pixel) service::set_option(cfg, "noise", "pixel_sigma", *c.noise_pixel);
  if (c.noise_bias) service::set_option(cfg, "noise", "view_bias_sigma", *c.noise_bias);
  if (c.noise_bias_rate) service::set_option(cfg, "noise", "view_bias_rate", *c.noise_bias_rate);
  if (c.noise_flip) service::set_option(cfg, "noise", "flip_rate", *c.noise_flip);
  if (c.noise_seed) service::set_option(cfg, "noise", "seed", *c.noise_seed);
  if (c.oracle_dir) {
    service::set_option(cfg, "service", "oracle", "file");
    service::set_option(cfg, "service", "oracle_dir", *c.oracle_dir);
  }
  cfg.validate();
  return cfg;
}

// "demo" and "sphere" are built in; anything else is an OBJ path.
scene::Mesh load_asset_arg(const std::string& asset) {
  if (asset == "demo" || asset == "sphere") return service::load_asset(asset, {});
  if (!fs::exists(asset)) fail(ErrorCode::kNotFound, "asset not found: " + asset);
  return scene::load_mesh(asset);
}

scene::ViewManifest cameras_arg(const std::string& cameras, const scene::Mesh& mesh,
                                const service::EngineConfig& cfg) {
  if (cameras.empty()) return service::default_manifest(mesh, cfg);
  if (cameras.rfind("fibonacci:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(cameras.substr(10));
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, "--cameras: expected fibonacci:N");
    }
    auto c = cfg;
    c.n_views = n;
    c.validate();
    return service::default_manifest(mesh, c);
  }
  return scene::load_manifest(cameras);
}

lift::Scene make_scene(const std::string& asset, const std::string& cameras,
                       const service::EngineConfig& cfg) {
  auto mesh = load_asset_arg(asset);
  auto manifest = cameras_arg(cameras, mesh, cfg);
  manifest.asset_path = asset;
  return lift::Scene::create(std::move(mesh), std::move(manifest));
}

std::string asset_id_of(const std::string& asset) {
  return asset == "demo" || asset == "sphere" ? asset : fs::path(asset).stem().string();
}

oracle::Click parse_click(const std::string& text) {
  const auto colon = text.rfind(':');
  const auto comma = text.rfind(',');
  if (colon == std::string::npos || comma == std::string::npos || comma < colon) {
    fail(ErrorCode::kInvalidArgument, "--click: expected <view>:<x>,<y>");
  }
  oracle::Click c;
  c.view_id = text.substr(0, colon);
  try {
    std::size_t used = 0;
    const auto xs = text.substr(colon + 1, comma - colon - 1);
    const auto ys = text.substr(comma + 1);
    c.x = std::stoi(xs, &used);
    if (used != xs.size()) throw std::invalid_argument(xs);
    c.y = std::stoi(ys, &used);
    if (used != ys.size()) throw std::invalid_argument(ys);
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "--click: coordinates must be integers");
  }
  return c;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int run_render_views(const Common& common, const std::string& asset, const std::string& cameras,
                     const fs::path& out) {
  const auto cfg = engine_config(common);
  const auto scene = make_scene(asset, cameras, cfg);
  fs::create_directories(out);
  for (const auto& view : scene.manifest.views) {
    const auto b = render::render_view(*scene.mesh, *scene.bvh, view.camera, view.id);
    Raster<float> depth = b.depth;
    for (auto& d : depth.data()) {
      if (!std::isfinite(d)) d = 0.0f;
    }
    io::write_ppm(b.rgb, out / (view.id + ".ppm"));
    io::write_mlf(depth, out / (view.id + ".depth.mlf"));
    io::write_pgm(io::ids_to_gray(b.material_id), out / (view.id + ".ids.pgm"));
  }
  scene::save_manifest(scene.manifest, out / "manifest.json");
  std::printf("rendered %zu views to %s\n", scene.manifest.size(), out.string().c_str());
  return 0;
}

int run_select(const Common& common, const std::string& asset, const std::string& cameras,
               const std::string& click_text, const fs::path& out) {
  const auto cfg = engine_config(common);
  auto scene = make_scene(asset, cameras, cfg);
  lift::SelectionSession session(std::move(scene), service::make_oracle(cfg), cfg.selection);
  session.select(parse_click(click_text));
  service::write_session_dir(out, session, cfg, asset_id_of(asset));
  const auto& t = session.result()->timings;
  std::printf("selection: %zu points, total %.1f ms (render %.1f, oracle %.1f, backproject %.1f, index %.1f)\n",
              session.result()->cloud->size(), t.total_ms, t.render_ms, t.oracle_ms, t.backproject_ms,
              t.index_build_ms);
  return 0;
}

int run_segment(const Common& common, const std::string& asset, const std::string& cameras,
                const segment::SegmentParams& params, const fs::path& out) {
  const auto cfg = engine_config(common);
  auto scene = make_scene(asset, cameras, cfg);
  lift::SelectionSession session(std::move(scene), service::make_oracle(cfg), cfg.selection);
  const auto seg = segment::segment_object(session, params);
  fs::create_directories(out);
  write_json_file(out / "segments.json", seg.to_json());
  segment::save_labels(seg.point_labels, out / "labels.bin");
  lift::save_cloud(seg.index->cloud(), out / "cloud.msc");
  const auto& sc = session.scene();
  if (sc.mesh->has_uv()) {
    std::vector<scene::Camera> cams;
    for (const auto& v : sc.manifest.views) cams.push_back(v.camera);
    const auto map = render::bake_uv(*sc.mesh, *sc.bvh, cams,
                                     [&](const Vec3& p, std::uint32_t) {
                                       return static_cast<float>(seg.label_point(to_point3f(p)));
                                     },
                                     cfg.uv_resolution);
    Raster<std::int32_t> ids(map.width(), map.height(), 1, -1);
    for (std::size_t i = 0; i < ids.data().size(); ++i) {
      if (map.coverage[i]) ids[i] = static_cast<std::int32_t>(map.values[i]);
    }
    io::write_pgm(io::ids_to_gray(ids), out / "uv_segments.pgm");
  }
  std::printf("%zu clicks -> %zu groups\n", seg.clicks.size(), seg.groups.size());
  return 0;
}

struct EvalArgs {
  std::string protocol = "accuracy";
  int views = 50;
  int clicks = 5;
  std::uint64_t seed = 0;
  int material = -1;
  std::string json_out;
  std::string label;
};

int run_eval(const Common& common, const std::string& asset, const std::string& cameras,
             const EvalArgs& args) {
  const auto cfg = engine_config(common);
  const auto scene = make_scene(asset, cameras, cfg);
  const auto oracle = service::make_oracle(cfg);
  const metrics::SessionFactory factory = [&] {
    return std::make_unique<lift::SelectionSession>(scene, oracle, cfg.selection);
  };
  metrics::EvalReport report;
  report.scene = asset_id_of(asset);
  report.config = args.label.empty() ? cfg.oracle + (cfg.noise.zero() ? "/zero-noise" : "/noisy") : args.label;

  std::vector<int> materials;
  if (args.material >= 0) {
    materials.push_back(args.material);
  } else {
    for (int m = 0; m < scene.mesh->material_count; ++m) materials.push_back(m);
  }

  if (args.protocol == "accuracy") {
    metrics::AccuracyOptions o;
    o.n_views = args.views;
    o.n_clicks = args.clicks;
    o.seed = args.seed;
    report.accuracy = metrics::eval_accuracy(factory, scene, o, &report.warnings);
  } else if (args.protocol == "consistency") {
    metrics::ConsistencyOptions o;
    o.n_views = args.views;
    o.seed = args.seed;
    double sum = 0.0;
    int n = 0;
    for (int m : materials) {
      auto session = factory();
      session->ensure_rendered();
      bool done = false;
      for (const auto& b : session->bundles()) {
        try {
          std::mt19937_64 rng(args.seed + static_cast<std::uint64_t>(m));
          session->select(oracle::sample_click(b.material_id, m, rng, b.view_id));
          done = true;
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kUnselectable) throw;
        }
      }
      if (!done) {
        report.warnings.push_back("material " + std::to_string(m) + " is unselectable; skipped");
        continue;
      }
      sum += metrics::eval_consistency(*session, o);
      ++n;
    }
    if (n > 0) report.consistency = sum / n;
  } else if (args.protocol == "robustness") {
    metrics::RobustnessOptions o;
    o.n_views = args.views;
    o.n_clicks = args.clicks;
    o.seed = args.seed;
    double sum = 0.0;
    int n = 0;
    for (int m : materials) {
      try {
        sum += metrics::eval_robustness(factory, scene, m, o);
        ++n;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnselectable) throw;
        report.warnings.push_back(e.what());
      }
    }
    if (n > 0) report.robustness = sum / n;
  } else {
    fail(ErrorCode::kInvalidArgument, "--protocol must be accuracy, consistency or robustness");
  }
  std::fputs(report.to_table().c_str(), stdout);
  if (!args.json_out.empty()) write_json_file(args.json_out, report.to_json());
  return 0;
}

struct BakeArgs {
  std::string mode = "ids";
  std::string session_dir;
  int res = 0;
  std::size_t fill_holes = 0;
  std::size_t remove_sprinkles = 0;
  std::string out;
};

int run_bake(const Common& common, const std::string& asset, const BakeArgs& args) {
  const auto cfg = engine_config(common);
  const int res = args.res > 0 ? args.res : cfg.uv_resolution;
  std::optional<service::LoadedSession> loaded;
  std::optional<lift::Scene> own_scene;
  if (!args.session_dir.empty()) {
    loaded = service::load_session_dir(args.session_dir);
  } else if (args.mode != "ids") {
    fail(ErrorCode::kInvalidArgument, "--mode " + args.mode + " needs --session");
  } else {
    auto mesh = load_asset_arg(asset);
    scene::ViewManifest none;
    own_scene = lift::Scene{std::make_shared<const scene::Mesh>(std::move(mesh)), nullptr, none};
    own_scene->bvh = std::make_shared<const render::Bvh>(*own_scene->mesh);
  }
  const lift::Scene& sc = loaded ? loaded->session->scene() : *own_scene;
  const std::vector<scene::Camera> cams;

  if (args.mode == "ids") {
    const auto map = render::bake_uv(*sc.mesh, *sc.bvh, cams,
                                     [&](const Vec3&, std::uint32_t tri) {
                                       return static_cast<float>(sc.mesh->material_ids[tri]);
                                     },
                                     res);
    Raster<std::int32_t> ids(res, res, 1, -1);
    for (std::size_t i = 0; i < ids.data().size(); ++i) {
      if (map.coverage[i]) ids[i] = static_cast<std::int32_t>(map.values[i]);
    }
    io::write_pgm(io::ids_to_gray(ids), args.out);
  } else if (args.mode == "similarity") {
    const auto& session = *loaded->session;
    const auto map = render::bake_uv(*sc.mesh, *sc.bvh, cams,
                                     [&](const Vec3& p, std::uint32_t) {
                                       return session.vote_at(p).mean_similarity;
                                     },
                                     res);
    io::write_mlf(map.values, args.out);
  } else if (args.mode == "mask") {
    const auto& session = *loaded->session;
    const auto map = render::bake_uv(*sc.mesh, *sc.bvh, cams,
                                     [&](const Vec3& p, std::uint32_t) {
                                       return session.vote_at(p).selected ? 1.0f : 0.0f;
                                     },
                                     res);
    BinaryMask mask(res, res);
    for (std::size_t i = 0; i < mask.pixels.data().size(); ++i) mask.pixels[i] = map.values[i] > 0.5f;
    mask = postprocess::remove_sprinkles(postprocess::fill_holes(mask, args.fill_holes), args.remove_sprinkles);
    io::write_pgm(io::mask_to_gray(mask), args.out);
  } else {
    fail(ErrorCode::kInvalidArgument, "--mode must be ids, similarity or mask");
  }
  std::printf("wrote %s (%dx%d)\n", args.out.c_str(), res, res);
  return 0;
}

service::HttpApi* g_api = nullptr;

void on_signal(int) {
  if (g_api) g_api->stop();
}

int run_serve(const Common& common, std::optional<int> port, const std::string& host,
              std::string data_dir, const std::vector<std::string>& load) {
  auto cfg = engine_config(common);
  if (port) service::set_option(cfg, "service", "port", *port);
  if (!host.empty()) service::set_option(cfg, "service", "host", host);
  if (data_dir.empty()) {
    if (const char* env = std::getenv("MATLIFT_DATA_DIR")) data_dir = env;
  }
  service::SessionManager manager(cfg, data_dir);
  for (const auto& dir : load) {
    std::printf("loaded %s as session %s\n", dir.c_str(), manager.open(dir).c_str());
  }
  service::HttpApi api(manager);
  const int bound = api.bind(cfg.host, cfg.port);
  g_api = &api;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on http://%s:%d\n", cfg.host.c_str(), bound);
  std::fflush(stdout);
  api.listen();
  g_api = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matlift: lift 2D material similarity into 3D selections"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "Engine config file")->check(CLI::ExistingFile);
  app.add_option("--threads", common.threads, "Worker threads (default: hardware)");

  std::string asset, cameras, click;
  fs::path out;

  auto* render_cmd = app.add_subcommand("render-views", "Render RGB, depth and material ids");
  render_cmd->add_option("asset", asset, "OBJ path or built-in asset (demo, sphere)")->required();
  render_cmd->add_option("--cameras", cameras, "Manifest JSON or fibonacci:N");
  render_cmd->add_option("--out", out, "Output directory")->required();
  render_cmd->add_option("--res", common.res, "Square render resolution");

  auto* select_cmd = app.add_subcommand("select", "Lift one click and write a session directory");
  select_cmd->add_option("asset", asset, "OBJ path or built-in asset")->required();
  select_cmd->add_option("--click", click, "<view>:<x>,<y>")->required();
  select_cmd->add_option("--cameras", cameras, "Manifest JSON or fibonacci:N");
  select_cmd->add_option("--out", out, "Session directory")->required();
  add_selection_flags(select_cmd, common);

  segment::SegmentParams seg_params;
  auto* segment_cmd = app.add_subcommand("segment", "Automatic material segmentation");
  segment_cmd->add_option("asset", asset, "OBJ path or built-in asset")->required();
  segment_cmd->add_option("--cameras", cameras, "Manifest JSON or fibonacci:N");
  segment_cmd->add_option("--clicks", seg_params.total_clicks, "Proposed clicks");
  segment_cmd->add_option("--tau", seg_params.tau, "Merge threshold on pairwise mIoU");
  segment_cmd->add_option("--eval-views", seg_params.eval_views, "Views for the merge matrix");
  segment_cmd->add_option("--seed", seg_params.seed, "Proposal and view seed");
  segment_cmd->add_option("--out", out, "Output directory")->required();
  add_selection_flags(segment_cmd, common);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy, consistency or robustness protocol");
  eval_cmd->add_option("asset", asset, "OBJ path or built-in asset")->required();
  eval_cmd->add_option("--protocol", eval_args.protocol, "accuracy | consistency | robustness");
  eval_cmd->add_option("--cameras", cameras, "Manifest JSON or fibonacci:N");
  eval_cmd->add_option("--views", eval_args.views, "Novel views");
  eval_cmd->add_option("--clicks", eval_args.clicks, "Clicks per material");
  eval_cmd->add_option("--material", eval_args.material, "Restrict to one material id");
  eval_cmd->add_option("--seed", eval_args.seed, "Protocol seed");
  eval_cmd->add_option("--label", eval_args.label, "Row label in the report");
  eval_cmd->add_option("--json", eval_args.json_out, "Also write the report as JSON");
  add_selection_flags(eval_cmd, common);

  BakeArgs bake_args;
  auto* bake_cmd = app.add_subcommand("bake-uv", "Bake material ids or a selection into UV space");
  bake_cmd->add_option("asset", asset, "OBJ path or built-in asset (ignored with --session)");
  bake_cmd->add_option("--mode", bake_args.mode, "ids | similarity | mask");
  bake_cmd->add_option("--session", bake_args.session_dir, "Session directory from `select`");
  bake_cmd->add_option("--uv-res", bake_args.res, "Atlas resolution");
  bake_cmd->add_option("--fill-holes", bake_args.fill_holes, "Fill holes up to this area (mask mode)");
  bake_cmd->add_option("--remove-sprinkles", bake_args.remove_sprinkles,
                       "Drop components below this area (mask mode)");
  bake_cmd->add_option("--out", bake_args.out, "Output file")->required();

  std::optional<int> port;
  std::string host, data_dir;
  std::vector<std::string> load;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP API");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--data-dir", data_dir, "Asset and session root (default $MATLIFT_DATA_DIR)");
  serve_cmd->add_option("--load", load, "Session directories to serve");
  add_selection_flags(serve_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    set_thread_count(common.threads > 0 ? common.threads : std::max(1u, std::thread::hardware_concurrency()));
    if (*render_cmd) return run_render_views(common, asset, cameras, out);
    if (*select_cmd) return run_select(common, asset, cameras, click, out);
    if (*segment_cmd) return run_segment(common, asset, cameras, seg_params, out);
    if (*eval_cmd) return run_eval(common, asset, cameras, eval_args);
    if (*bake_cmd) return run_bake(common, asset, bake_args);
    if (*serve_cmd) return run_serve(common, port, host, data_dir, load);
  } catch (const Error& e) {
    std::fprintf(stderr, "matlift: %s\n", e.what());
    return e.code() == ErrorCode::kIo ? 1 : kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "matlift: %s\n", e.what());
    return 1;
  }
  return 0;
}
