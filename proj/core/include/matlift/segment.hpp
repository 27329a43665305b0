#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "matlift/oracle.hpp"
#include "matlift/raster.hpp"
#include "matlift/render.hpp"
#include "matlift/session.hpp"

namespace matlift::segment {

/// CIE LAB under a D65 white point.
struct LabColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

LabColor rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

inline constexpr int kLBins = 4;
inline constexpr int kABins = 16;
inline constexpr int kHistogramBins = kLBins * kABins * kABins;

/// Flat histogram bin of a colour: L in 25-unit steps, a and b in 16-unit steps.
int histogram_bin(const LabColor& lab);

struct PixelRef {
  std::uint32_t view = 0;  // index into the bundle span
  int x = 0;
  int y = 0;
};

struct ColorMode {
  int bin = 0;
  std::vector<PixelRef> pixels;
  std::size_t area() const { return pixels.size(); }
};

/// Nonempty histogram bins over foreground pixels, ordered by bin index.
std::vector<ColorMode> color_modes(std::span<const render::ViewBundle> bundles);

/// Largest-remainder split of `total` proportional to `areas`. Remainder ties
/// go to the larger area, then the lower index. Modes left at zero then take
/// one click each, in order of decreasing area, from the mode holding the most
/// while that mode keeps at least one.
std::vector<int> allocate_clicks(std::span<const std::size_t> areas, int total);

/// Stratified click proposal: each mode's pixel list is cut into as many equal
/// strata as it has clicks, and one pixel is drawn uniformly per stratum.
std::vector<oracle::Click> propose_clicks(std::span<const render::ViewBundle> bundles, int total,
                                          std::uint64_t seed);

/// Symmetric pairwise mIoU of per-click mask sets.
struct MergeMatrix {
  std::size_t size = 0;
  std::vector<double> values;
  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

/// Each entry is the pooled IoU over all views of the two mask sets.
MergeMatrix merge_matrix(std::span<const std::vector<BinaryMask>> masks);

struct ClickGroup {
  std::size_t representative = 0;   // index of the surviving click
  std::vector<std::size_t> members;  // ascending click indices
  std::size_t area = 0;              // selected pixels of the representative
};

/// Repeatedly merges the pair with the highest mIoU while it is >= tau; the
/// click with the larger selected area survives. Groups ordered by representative.
std::vector<ClickGroup> merge_selections(std::span<const std::vector<BinaryMask>> masks,
                                         double tau = 0.75);

struct SegmentParams {
  int total_clicks = 25;
  double tau = 0.75;
  int eval_views = 8;
  std::uint64_t seed = 0;
};

inline constexpr std::int32_t kUnknownLabel = -1;

struct SegmentGroup {
  int id = 0;
  oracle::Click representative;
  std::array<std::uint8_t, 3> color{};
  std::vector<std::size_t> members;
  std::shared_ptr<const lift::SimilarityCloud> cloud;  // representative's similarity
};

struct SegmentationResult {
  std::vector<oracle::Click> clicks;
  std::vector<SegmentGroup> groups;
  std::vector<std::int32_t> point_labels;  // per cloud point; kUnknownLabel when unclaimed
  std::optional<lift::IvfIndex> index;     // clustering over the shared cloud positions
  lift::SelectionParams params;

  nlohmann::json to_json() const;
  /// Group label of a surface point, or kUnknownLabel when no group claims it.
  std::int32_t label_point(const Point3f& point) const;
  /// Per-pixel group label for a camera; background and unclaimed pixels are kUnknownLabel.
  Raster<std::int32_t> label_view(const render::Bvh& bvh, const scene::Camera& camera) const;
};

std::array<std::uint8_t, 3> group_color(int group);

/// Proposes clicks on the session's manifest views, lifts each one, merges
/// overlapping selections and labels every cloud point. Leaves the session on
/// the last proposed click.
SegmentationResult segment_object(lift::SelectionSession& session, const SegmentParams& params = {});

/// Little-endian {"MSL1", count u64} followed by count i32 labels.
void save_labels(std::span<const std::int32_t> labels, const std::filesystem::path& path);
std::vector<std::int32_t> load_labels(const std::filesystem::path& path);

}  // namespace matlift::segment
