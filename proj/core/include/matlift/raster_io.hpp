#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "matlift/raster.hpp"

namespace matlift::io {

/// Little-endian float raster: 16-byte header {"MLF1", width, height, channels}
/// followed by width*height*channels f32 values. Used for depth and for
/// similarity maps (`.simf`).
void write_mlf(const Raster<float>& raster, const std::filesystem::path& path);
Raster<float> read_mlf(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_mlf(const Raster<float>& raster);
Raster<float> decode_mlf(const std::vector<std::uint8_t>& bytes);

/// Binary PGM (P5, maxval 255).
void write_pgm(const Raster<std::uint8_t>& raster, const std::filesystem::path& path);
Raster<std::uint8_t> read_pgm(const std::filesystem::path& path);
std::string encode_pgm(const Raster<std::uint8_t>& raster);

/// Material ids to PGM bytes: background (-1) becomes 255.
Raster<std::uint8_t> ids_to_gray(const Raster<std::int32_t>& ids);
Raster<std::int32_t> gray_to_ids(const Raster<std::uint8_t>& gray);
/// 0/1 mask to 0/255.
Raster<std::uint8_t> mask_to_gray(const BinaryMask& mask);
BinaryMask gray_to_mask(const Raster<std::uint8_t>& gray, const std::string& view_id = {});

/// Binary PPM (P6) for 3-channel rasters.
void write_ppm(const Raster<std::uint8_t>& rgb, const std::filesystem::path& path);
Raster<std::uint8_t> read_ppm(const std::filesystem::path& path);

/// 8-bit PNG, 1 or 3 channels.
std::string encode_png(const Raster<std::uint8_t>& image);
void write_png(const Raster<std::uint8_t>& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const void* data, std::size_t size);

}  // namespace matlift::io
