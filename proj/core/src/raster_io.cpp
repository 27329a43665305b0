#include "matlift/raster_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>

#include "matlift/error.hpp"

namespace matlift::io {

static_assert(std::endian::native == std::endian::little, "MLF1 I/O assumes a little-endian host");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

std::vector<std::uint8_t> encode_mlf(const Raster<float>& raster) {
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(raster.width()),
                                   static_cast<std::uint32_t>(raster.height()),
                                   static_cast<std::uint32_t>(raster.channels())};
  std::vector<std::uint8_t> bytes(16 + raster.data().size() * sizeof(float));
  std::memcpy(bytes.data(), "MLF1", 4);
  std::memcpy(bytes.data() + 4, header, sizeof header);
  std::memcpy(bytes.data() + 16, raster.data().data(), raster.data().size() * sizeof(float));
  return bytes;
}

Raster<float> decode_mlf(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "MLF1", 4) != 0) {
    fail(ErrorCode::kParse, "not an MLF1 raster");
  }
  std::uint32_t header[3];
  std::memcpy(header, bytes.data() + 4, sizeof header);
  if (header[2] == 0) fail(ErrorCode::kParse, "MLF1: zero channels");
  const std::size_t count = static_cast<std::size_t>(header[0]) * header[1] * header[2];
  if (bytes.size() != 16 + count * sizeof(float)) fail(ErrorCode::kParse, "MLF1: size mismatch");
  Raster<float> r(static_cast<int>(header[0]), static_cast<int>(header[1]),
                  static_cast<int>(header[2]));
  std::memcpy(r.data().data(), bytes.data() + 16, count * sizeof(float));
  return r;
}

void write_mlf(const Raster<float>& raster, const std::filesystem::path& path) {
  const auto bytes = encode_mlf(raster);
  write_file(path, bytes.data(), bytes.size());
}

Raster<float> read_mlf(const std::filesystem::path& path) {
  try {
    return decode_mlf(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) fail(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

namespace {

// Reads a binary PNM header ("P5"/"P6", width, height, maxval) and returns the payload offset.
std::size_t parse_pnm_header(const std::vector<std::uint8_t>& bytes, const char* magic, int& w,
                             int& h, const std::string& name) {
  std::size_t pos = 0;
  const auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != magic) fail(ErrorCode::kParse, name + ": expected " + magic);
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    if (std::stoi(next_token()) != 255) fail(ErrorCode::kParse, name + ": maxval must be 255");
  } catch (const std::logic_error&) {
    fail(ErrorCode::kParse, name + ": malformed header");
  }
  return pos + 1;  // single whitespace byte before the raster
}

}  // namespace

std::string encode_pgm(const Raster<std::uint8_t>& raster) {
  std::ostringstream out;
  out << "P5\n" << raster.width() << ' ' << raster.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.data().data()),
            static_cast<std::streamsize>(raster.pixel_count()));
  return out.str();
}

void write_pgm(const Raster<std::uint8_t>& raster, const std::filesystem::path& path) {
  if (raster.channels() != 1) fail(ErrorCode::kInvalidArgument, "write_pgm: expects one channel");
  const auto bytes = encode_pgm(raster);
  write_file(path, bytes.data(), bytes.size());
}

Raster<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  int w = 0;
  int h = 0;
  const auto offset = parse_pnm_header(bytes, "P5", w, h, path.string());
  Raster<std::uint8_t> r(w, h, 1);
  if (bytes.size() < offset + r.pixel_count()) fail(ErrorCode::kParse, path.string() + ": truncated");
  std::memcpy(r.data().data(), bytes.data() + offset, r.pixel_count());
  return r;
}

void write_ppm(const Raster<std::uint8_t>& rgb, const std::filesystem::path& path) {
  if (rgb.channels() != 3) fail(ErrorCode::kInvalidArgument, "write_ppm: expects three channels");
  std::ostringstream out;
  out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data().data()),
            static_cast<std::streamsize>(rgb.data().size()));
  const auto s = out.str();
  write_file(path, s.data(), s.size());
}

Raster<std::uint8_t> read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  int w = 0;
  int h = 0;
  const auto offset = parse_pnm_header(bytes, "P6", w, h, path.string());
  Raster<std::uint8_t> r(w, h, 3);
  if (bytes.size() < offset + r.data().size()) fail(ErrorCode::kParse, path.string() + ": truncated");
  std::memcpy(r.data().data(), bytes.data() + offset, r.data().size());
  return r;
}

Raster<std::uint8_t> ids_to_gray(const Raster<std::int32_t>& ids) {
  Raster<std::uint8_t> out(ids.width(), ids.height(), 1);
  for (std::size_t i = 0; i < ids.data().size(); ++i) {
    const auto id = ids[i];
    if (id > 254) fail(ErrorCode::kInvalidArgument, "material id above 254 cannot be stored in PGM");
    out[i] = id < 0 ? 255 : static_cast<std::uint8_t>(id);
  }
  return out;
}

Raster<std::int32_t> gray_to_ids(const Raster<std::uint8_t>& gray) {
  Raster<std::int32_t> out(gray.width(), gray.height(), 1);
  for (std::size_t i = 0; i < gray.data().size(); ++i) out[i] = gray[i] == 255 ? -1 : gray[i];
  return out;
}

Raster<std::uint8_t> mask_to_gray(const BinaryMask& mask) {
  Raster<std::uint8_t> out(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < out.data().size(); ++i) out[i] = mask.pixels[i] ? 255 : 0;
  return out;
}

BinaryMask gray_to_mask(const Raster<std::uint8_t>& gray, const std::string& view_id) {
  BinaryMask m(gray.width(), gray.height(), view_id);
  for (std::size_t i = 0; i < gray.data().size(); ++i) m.pixels[i] = gray[i] >= 128 ? 1 : 0;
  return m;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::string encode_png(const Raster<std::uint8_t>& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    fail(ErrorCode::kInvalidArgument, "encode_png: expects 1 or 3 channels");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    fail(ErrorCode::kIo, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8,
               image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 3);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(image.row(y).data()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Raster<std::uint8_t>& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  write_file(path, bytes.data(), bytes.size());
}

}  // namespace matlift::io
