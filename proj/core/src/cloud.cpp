#include "matlift/cloud.hpp"

#include <cstring>

#include "matlift/error.hpp"
#include "matlift/raster_io.hpp"

namespace matlift::lift {

namespace {
constexpr std::size_t kHeaderBytes = 12;
constexpr std::size_t kRecordBytes = 20;
}  // namespace

void SimilarityCloud::validate() const {
  if (values.size() != points.size() || view_index.size() != points.size()) {
    fail(ErrorCode::kInvalidArgument, "cloud: points, values and view indices differ in length");
  }
}

std::vector<std::uint8_t> encode_cloud(const SimilarityCloud& cloud) {
  cloud.validate();
  const std::uint64_t count = cloud.size();
  std::vector<std::uint8_t> bytes(kHeaderBytes + count * kRecordBytes);
  std::memcpy(bytes.data(), "MSC1", 4);
  std::memcpy(bytes.data() + 4, &count, 8);
  std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += kRecordBytes) {
    std::memcpy(p, cloud.points[i].data(), 12);
    std::memcpy(p + 12, &cloud.values[i], 4);
    std::memcpy(p + 16, &cloud.view_index[i], 4);
  }
  return bytes;
}

SimilarityCloud decode_cloud(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "MSC1", 4) != 0) {
    fail(ErrorCode::kParse, "not an MSC1 cloud");
  }
  std::uint64_t count = 0;
  std::memcpy(&count, bytes.data() + 4, 8);
  if (bytes.size() != kHeaderBytes + count * kRecordBytes) {
    fail(ErrorCode::kParse, "MSC1: size does not match point count");
  }
  SimilarityCloud cloud;
  cloud.points.resize(count);
  cloud.values.resize(count);
  cloud.view_index.resize(count);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  std::uint32_t max_view = 0;
  for (std::size_t i = 0; i < count; ++i, p += kRecordBytes) {
    std::memcpy(cloud.points[i].data(), p, 12);
    std::memcpy(&cloud.values[i], p + 12, 4);
    std::memcpy(&cloud.view_index[i], p + 16, 4);
    max_view = std::max(max_view, cloud.view_index[i] + 1);
  }
  for (std::uint32_t v = 0; v < max_view; ++v) cloud.view_ids.push_back("view_" + std::to_string(v));
  return cloud;
}

void save_cloud(const SimilarityCloud& cloud, const std::filesystem::path& path) {
  const auto bytes = encode_cloud(cloud);
  io::write_file(path, bytes.data(), bytes.size());
}

SimilarityCloud load_cloud(const std::filesystem::path& path) {
  return decode_cloud(io::read_file(path));
}

}  // namespace matlift::lift
