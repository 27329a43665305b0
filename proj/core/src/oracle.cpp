#include "matlift/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "matlift/error.hpp"
#include "matlift/postprocess.hpp"
#include "matlift/raster_io.hpp"

namespace matlift::oracle {

std::uint64_t hash_combine(std::uint64_t seed, const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<Frame> duplicate_click_frame(const std::vector<Frame>& sequence,
                                         const std::string& clicked_view_id) {
  const auto it = std::find_if(sequence.begin(), sequence.end(),
                               [&](const Frame& f) { return f.view_id == clicked_view_id; });
  if (it == sequence.end()) {
    fail(ErrorCode::kNotFound, "duplicate_click_frame: view '" + clicked_view_id +
                                   "' not in sequence");
  }
  std::vector<Frame> out;
  out.reserve(sequence.size() + 1);
  Frame conditioning = *it;
  conditioning.conditioning_only = true;
  Frame predicted = *it;
  predicted.conditioning_only = false;
  out.push_back(conditioning);
  out.push_back(predicted);
  for (auto f = sequence.begin(); f != sequence.end(); ++f) {
    if (f != it) out.push_back(*f);
  }
  return out;
}

OracleRequest make_request(const std::vector<render::ViewBundle>& bundles, const Click& click,
                           bool duplicate) {
  OracleRequest req;
  req.click = click;
  req.duplicated = duplicate;
  for (const auto& b : bundles) req.frames.push_back({b.view_id, &b, false});
  if (duplicate) req.frames = duplicate_click_frame(req.frames, click.view_id);
  return req;
}

namespace {

const Frame& clicked_frame(const OracleRequest& request) {
  for (const auto& f : request.frames) {
    if (f.view_id == request.click.view_id) return f;
  }
  fail(ErrorCode::kNotFound, "oracle: click view '" + request.click.view_id +
                                 "' is not part of the request");
}

void validate_request(const OracleRequest& request) {
  if (request.frames.empty()) fail(ErrorCode::kEmptyInput, "oracle: empty frame sequence");
  const Frame& clicked = clicked_frame(request);
  int w = -1;
  int h = -1;
  for (const auto& f : request.frames) {
    if (f.bundle == nullptr) fail(ErrorCode::kInvalidArgument, "oracle: frame without bundle");
    if (w < 0) {
      w = f.bundle->width();
      h = f.bundle->height();
    } else if (f.bundle->width() != w || f.bundle->height() != h) {
      fail(ErrorCode::kInvalidArgument, "oracle: frames differ in resolution");
    }
  }
  if (request.duplicated) {
    const auto copies = std::count_if(request.frames.begin(), request.frames.end(),
                                      [&](const Frame& f) { return f.view_id == clicked.view_id; });
    if (copies != 2 || request.frames.front().view_id != clicked.view_id ||
        !request.frames.front().conditioning_only) {
      fail(ErrorCode::kInvalidArgument, "oracle: duplicated request must lead with two copies "
                                        "of the clicked frame");
    }
  }
  const auto& b = *clicked.bundle;
  const Click& c = request.click;
  if (!b.material_id.in_bounds(c.x, c.y)) {
    fail(ErrorCode::kInvalidArgument, "oracle: click outside view '" + c.view_id + "'");
  }
  if (!b.foreground(c.x, c.y)) {
    fail(ErrorCode::kBackgroundClick, "oracle: click on background pixel (" + std::to_string(c.x) +
                                          "," + std::to_string(c.y) + ") of view '" + c.view_id +
                                          "'");
  }
}

void box_blur(Raster<float>& map, int radius) {
  if (radius <= 0) return;
  const int w = map.width();
  const int h = map.height();
  Raster<float> tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      int n = 0;
      for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius); ++k, ++n) s += map.at(k, y);
      tmp.at(x, y) = static_cast<float>(s / n);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      int n = 0;
      for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius); ++k, ++n) s += tmp.at(x, k);
      map.at(x, y) = static_cast<float>(s / n);
    }
  }
}

}  // namespace

std::vector<Raster<float>> SimilarityOracle::query(const OracleRequest& request) const {
  validate_request(request);
  calls_.fetch_add(1);
  auto out = run(request);
  std::size_t expected = 0;
  for (const auto& f : request.frames) expected += f.conditioning_only ? 0 : 1;
  if (out.size() != expected) {
    fail(ErrorCode::kInvalidArgument, "oracle: implementation returned wrong raster count");
  }
  return out;
}

void NoiseModel::validate() const {
  const auto rate = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(pixel_sigma >= 0.0) || !(view_bias_sigma >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "noise: sigmas must be >= 0");
  }
  if (!rate(view_bias_rate) || !rate(flip_rate)) {
    fail(ErrorCode::kInvalidArgument, "noise: rates must be in [0, 1]");
  }
  if (blur_px < 0) fail(ErrorCode::kInvalidArgument, "noise: blur_px must be >= 0");
}

SyntheticOracle::SyntheticOracle(NoiseModel noise) : noise_(noise) { noise_.validate(); }

std::vector<Raster<float>> SyntheticOracle::run(const OracleRequest& request) const {
  const Frame& clicked = clicked_frame(request);
  const int target = clicked.bundle->material_id.at(request.click.x, request.click.y);
  const bool negative = request.click.polarity == Polarity::kNegative;

  std::vector<Raster<float>> out;
  for (const auto& f : request.frames) {
    if (f.conditioning_only) continue;
    const auto& ids = f.bundle->material_id;
    Raster<float> map(ids.width(), ids.height(), 1, 0.0f);
    for (std::size_t i = 0; i < ids.data().size(); ++i) {
      if (ids[i] < 0) continue;
      const bool same = ids[i] == target;
      map[i] = (same != negative) ? 1.0f : 0.0f;
    }
    if (!noise_.zero()) {
      std::mt19937_64 rng(hash_combine(noise_.seed, f.view_id));
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      const bool blur = uniform(rng) < noise_.flip_rate;
      const bool biased = uniform(rng) < noise_.view_bias_rate;
      const double bias =
          noise_.view_bias_sigma > 0.0
              ? std::normal_distribution<double>(0.0, noise_.view_bias_sigma)(rng)
              : 0.0;
      if (blur) box_blur(map, noise_.blur_px);
      std::normal_distribution<double> pixel(0.0, noise_.pixel_sigma > 0.0 ? noise_.pixel_sigma : 1.0);
      for (std::size_t i = 0; i < ids.data().size(); ++i) {
        if (ids[i] < 0) {
          map[i] = 0.0f;
          continue;
        }
        double v = map[i];
        if (biased) v += bias;
        if (noise_.pixel_sigma > 0.0) v += pixel(rng);
        map[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
    out.push_back(std::move(map));
  }
  return out;
}

FileOracle::FileOracle(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::vector<Raster<float>> FileOracle::run(const OracleRequest& request) const {
  std::vector<Raster<float>> out;
  for (const auto& f : request.frames) {
    if (f.conditioning_only) continue;
    const auto path = directory_ / (f.view_id + ".simf");
    if (!std::filesystem::exists(path)) {
      fail(ErrorCode::kNotFound, "file oracle: missing similarity map for view '" + f.view_id +
                                     "' (" + path.string() + ")");
    }
    Raster<float> map = io::read_mlf(path);
    if (map.channels() != 1 || map.width() != f.bundle->width() ||
        map.height() != f.bundle->height()) {
      fail(ErrorCode::kInvalidArgument, "file oracle: map for view '" + f.view_id +
                                            "' does not match the frame resolution");
    }
    const auto& ids = f.bundle->material_id;
    for (std::size_t i = 0; i < map.data().size(); ++i) {
      const float v = std::isfinite(map[i]) ? map[i] : 0.0f;
      map[i] = ids[i] < 0 ? 0.0f : std::clamp(v, 0.0f, 1.0f);
    }
    out.push_back(std::move(map));
  }
  return out;
}

std::size_t min_selectable_area(int width, int height) {
  const double fraction = 0.0002 * static_cast<double>(width) * height;
  return std::max<std::size_t>(150, static_cast<std::size_t>(std::ceil(fraction)));
}

Click sample_click(const Raster<std::int32_t>& material_id, int target, std::mt19937_64& rng,
                   const std::string& view_id, Polarity polarity) {
  BinaryMask mask(material_id.width(), material_id.height(), view_id);
  std::size_t area = 0;
  for (std::size_t i = 0; i < material_id.data().size(); ++i) {
    if (material_id[i] == target) {
      mask.pixels[i] = 1;
      ++area;
    }
  }
  if (area == 0) {
    fail(ErrorCode::kUnselectable, "material " + std::to_string(target) + " not visible in view '" +
                                       view_id + "'");
  }
  if (area < min_selectable_area(material_id.width(), material_id.height())) {
    fail(ErrorCode::kUnselectable, "material " + std::to_string(target) + " covers only " +
                                       std::to_string(area) + " px in view '" + view_id + "'");
  }
  const BinaryMask eroded = postprocess::erode(mask, kClickBorderDistance);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < eroded.pixels.data().size(); ++i) {
    if (eroded.pixels[i]) candidates.push_back(i);
  }
  if (candidates.empty()) {
    fail(ErrorCode::kUnselectable, "material " + std::to_string(target) +
                                       " has no pixel four pixels away from its border in view '" +
                                       view_id + "'");
  }
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const std::size_t i = candidates[pick(rng)];
  return {view_id, static_cast<int>(i % material_id.width()),
          static_cast<int>(i / material_id.width()), polarity};
}

}  // namespace matlift::oracle
