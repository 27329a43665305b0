#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "matlift/geometry.hpp"

namespace matlift::lift {

/// Back-projected surface samples carrying a material similarity each.
struct SimilarityCloud {
  std::vector<Point3f> points;
  std::vector<float> values;
  std::vector<std::uint32_t> view_index;  // into view_ids
  std::vector<std::string> view_ids;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void validate() const;
};

/// Little-endian: {"MSC1", count u64} then count records of
/// (f32 x, f32 y, f32 z, f32 value, u32 view_idx). View ids are not stored.
std::vector<std::uint8_t> encode_cloud(const SimilarityCloud& cloud);
SimilarityCloud decode_cloud(const std::vector<std::uint8_t>& bytes);
void save_cloud(const SimilarityCloud& cloud, const std::filesystem::path& path);
SimilarityCloud load_cloud(const std::filesystem::path& path);

}  // namespace matlift::lift
