#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "matlift/raster.hpp"
#include "matlift/render.hpp"

namespace matlift::oracle {

enum class Polarity { kPositive, kNegative };

struct Click {
  std::string view_id;
  int x = 0;
  int y = 0;
  Polarity polarity = Polarity::kPositive;

  friend bool operator==(const Click&, const Click&) = default;
};

/// One entry of the sequence handed to the similarity model. Conditioning-only
/// frames prime the model and produce no output raster.
struct Frame {
  std::string view_id;
  const render::ViewBundle* bundle = nullptr;
  bool conditioning_only = false;
};

struct OracleRequest {
  std::vector<Frame> frames;  // trajectory order; duplicated click frame first when enabled
  Click click;
  bool duplicated = false;
};

/// Builds a request over `bundles` (already in trajectory order), duplicating
/// the clicked frame when asked.
OracleRequest make_request(const std::vector<render::ViewBundle>& bundles, const Click& click,
                           bool duplicate);

/// [clicked*, clicked, rest...] where clicked* is conditioning-only.
std::vector<Frame> duplicate_click_frame(const std::vector<Frame>& sequence,
                                         const std::string& clicked_view_id);

/// Boundary to the 2D material-similarity model. Implementations must be safe
/// to call concurrently.
class SimilarityOracle {
 public:
  virtual ~SimilarityOracle() = default;

  /// One raster per non-conditioning frame, in request order. Values in
  /// [0, 1] and 0 on background.
  std::vector<Raster<float>> query(const OracleRequest& request) const;

  std::uint64_t call_count() const { return calls_.load(); }

 protected:
  virtual std::vector<Raster<float>> run(const OracleRequest& request) const = 0;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

struct NoiseModel {
  double pixel_sigma = 0.0;      // additive per-pixel Gaussian
  double view_bias_sigma = 0.0;  // per-view constant offset
  double view_bias_rate = 1.0;   // probability that a view receives the offset
  double flip_rate = 0.0;        // probability that a view is blurred
  int blur_px = 3;
  std::uint64_t seed = 0;

  bool zero() const { return pixel_sigma == 0.0 && view_bias_sigma == 0.0 && flip_rate == 0.0; }
  void validate() const;
};

/// Ground-truth similarity from rendered material ids: 1 where the pixel shares
/// the clicked material, 0 elsewhere; negative clicks invert the foreground.
/// Noise is applied per view from a generator seeded by (seed, view id).
class SyntheticOracle : public SimilarityOracle {
 public:
  explicit SyntheticOracle(NoiseModel noise = {});
  const NoiseModel& noise() const { return noise_; }

 protected:
  std::vector<Raster<float>> run(const OracleRequest& request) const override;

 private:
  NoiseModel noise_;
};

/// Reads `<view_id>.simf` rasters from a directory, e.g. maps exported from a
/// trained network.
class FileOracle : public SimilarityOracle {
 public:
  explicit FileOracle(std::filesystem::path directory);
  const std::filesystem::path& directory() const { return directory_; }

 protected:
  std::vector<Raster<float>> run(const OracleRequest& request) const override;

 private:
  std::filesystem::path directory_;
};

/// Visible-area floor for click sampling: max(150 px, 0.02% of the frame).
std::size_t min_selectable_area(int width, int height);
inline constexpr int kClickBorderDistance = 4;

/// Uniform pixel of `target` at least four pixels from the material border.
/// Throws kUnselectable when the material is too small or the erosion is empty.
Click sample_click(const Raster<std::int32_t>& material_id, int target, std::mt19937_64& rng,
                   const std::string& view_id = {}, Polarity polarity = Polarity::kPositive);

/// Stable 64-bit hash used to derive per-view seeds.
std::uint64_t hash_combine(std::uint64_t seed, const std::string& text);

}  // namespace matlift::oracle
