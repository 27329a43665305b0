#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/error.hpp"
#include "matlift/raster_io.hpp"

using namespace matlift;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("matlift_io_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::uint32_t be32(const std::string& s, std::size_t at) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]));
}

}  // namespace

TEST_CASE("raster basics") {
  Raster<int> r(3, 2, 2, 7);
  CHECK(r.pixel_count() == 6);
  CHECK(r.data().size() == 12);
  r.at(2, 1, 1) = 5;
  CHECK(r[11] == 5);
  CHECK(r.row(1).size() == 6);
  CHECK(r.in_bounds(2, 1));
  CHECK_FALSE(r.in_bounds(3, 0));
  CHECK_THROWS_AS(Raster<int>(-1, 2), Error);
  CHECK_THROWS_AS(Raster<int>(1, 2, 0), Error);
}

TEST_CASE("MLF round trip keeps every bit") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-10.0f, 10.0f);
  Raster<float> r(17, 9, 3);
  for (auto& v : r.data()) v = u(rng);
  r[0] = std::numeric_limits<float>::infinity();
  r[1] = 0.0f;
  const auto bytes = io::encode_mlf(r);
  CHECK(bytes.size() == 16 + r.data().size() * 4);
  CHECK(std::memcmp(bytes.data(), "MLF1", 4) == 0);
  const auto back = io::decode_mlf(bytes);
  CHECK(back == r);

  TempDir tmp;
  io::write_mlf(r, tmp.path / "r.mlf");
  CHECK(io::read_mlf(tmp.path / "r.mlf") == r);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(io::decode_mlf(truncated), Error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::decode_mlf(bad_magic), Error);
  CHECK_THROWS_AS(io::read_mlf(tmp.path / "missing.mlf"), Error);
}

TEST_CASE("PGM, PPM and id conversions") {
  TempDir tmp;
  std::mt19937_64 rng(2);
  Raster<std::uint8_t> gray(13, 7);
  for (auto& v : gray.data()) v = static_cast<std::uint8_t>(rng());
  io::write_pgm(gray, tmp.path / "g.pgm");
  CHECK(io::read_pgm(tmp.path / "g.pgm") == gray);
  CHECK(io::encode_pgm(gray).rfind("P5\n13 7\n255\n", 0) == 0);

  Raster<std::uint8_t> rgb(5, 4, 3);
  for (auto& v : rgb.data()) v = static_cast<std::uint8_t>(rng());
  io::write_ppm(rgb, tmp.path / "c.ppm");
  CHECK(io::read_ppm(tmp.path / "c.ppm") == rgb);
  CHECK_THROWS_AS(io::write_pgm(rgb, tmp.path / "x.pgm"), Error);
  CHECK_THROWS_AS(io::write_ppm(gray, tmp.path / "x.ppm"), Error);

  Raster<std::int32_t> ids(4, 1);
  ids[0] = -1;
  ids[1] = 0;
  ids[2] = 3;
  ids[3] = 254;
  const auto g = io::ids_to_gray(ids);
  CHECK(g[0] == 255);
  CHECK(io::gray_to_ids(g) == ids);
  ids[3] = 255;
  CHECK_THROWS_AS(io::ids_to_gray(ids), Error);

  BinaryMask m(3, 3, "v");
  m.set(1, 1, true);
  const auto mg = io::mask_to_gray(m);
  CHECK(mg.at(1, 1) == 255);
  CHECK(mg.at(0, 0) == 0);
  CHECK(io::gray_to_mask(mg) == m);

  io::write_file(tmp.path / "bad.pgm", "P5\n4 4\n255\n", 11);
  CHECK_THROWS_AS(io::read_pgm(tmp.path / "bad.pgm"), Error);
  io::write_file(tmp.path / "bad2.pgm", "P6\n1 1\n255\nabc", 14);
  CHECK_THROWS_AS(io::read_pgm(tmp.path / "bad2.pgm"), Error);
}

TEST_CASE("PNG header carries the image size") {
  Raster<std::uint8_t> rgb(21, 11, 3, 128);
  const auto png = io::encode_png(rgb);
  REQUIRE(png.size() > 33);
  CHECK(png.compare(0, 8, "\x89PNG\r\n\x1a\n") == 0);
  CHECK(png.compare(12, 4, "IHDR") == 0);
  CHECK(be32(png, 16) == 21);
  CHECK(be32(png, 20) == 11);
  CHECK(static_cast<int>(png[25]) == 2);  // truecolour
  CHECK(static_cast<int>(io::encode_png(Raster<std::uint8_t>(3, 3))[25]) == 0);  // grayscale
  CHECK_THROWS_AS(io::encode_png(Raster<std::uint8_t>(3, 3, 2)), Error);
}
