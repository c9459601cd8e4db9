#include "mvedit/io/png.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

namespace mvedit::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    fail(mode[0] == 'r' ? ErrorKind::NotFound : ErrorKind::Io, "cannot open " + path.string());
  }
  return f;
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // 16-bit samples are big-endian pairs
};

DecodedPng decode(std::FILE* file, const std::string& name) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorKind::Io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::Io, "libpng init failed");
  }
  DecodedPng out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, "invalid PNG: " + name);
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

DecodedPng decode_path(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  return decode(file.get(), path.string());
}

std::uint16_t sample(const DecodedPng& png, std::size_t i) {
  if (png.bit_depth == 16) {
    return static_cast<std::uint16_t>((png.bytes[2 * i] << 8) | png.bytes[2 * i + 1]);
  }
  return png.bytes[i];
}

using WriteSink = void (*)(png_structp, png_bytep, png_size_t);

void encode(png_structp png, png_infop info, int width, int height, int color_type,
            int bit_depth, const std::vector<std::uint8_t>& packed) {
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = packed.size() / std::max(height, 1);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(packed.data() + row_bytes * y));
  }
  png_write_end(png, nullptr);
}

void write_packed(const std::filesystem::path& path, int width, int height, int color_type,
                  int bit_depth, const std::vector<std::uint8_t>& packed) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  encode(png, info, width, height, color_type, bit_depth, packed);
  png_destroy_write_struct(&png, &info);
}

void append_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

std::vector<std::uint8_t> encode_packed(int width, int height, int color_type, int bit_depth,
                                        const std::vector<std::uint8_t>& packed) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, append_to_vector, nullptr);
  encode(png, info, width, height, color_type, bit_depth, packed);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> mask_bytes(const Mask& mask) {
  std::vector<std::uint8_t> packed(mask.pixel_count());
  for (std::size_t i = 0; i < packed.size(); ++i) packed[i] = mask.data()[i] ? 255 : 0;
  return packed;
}

void require_rgb(const RgbImage& image) {
  if (image.channels() != 3) fail(ErrorKind::InvalidArgument, "expected a 3-channel image");
}

}  // namespace

RgbImage read_png_rgb(const std::filesystem::path& path) {
  const auto png = decode_path(path);
  RgbImage out(png.width, png.height, 3);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
      for (int c = 0; c < 3; ++c) {
        const int src_c = png.channels >= 3 ? c : 0;
        std::uint16_t v = sample(png, base + src_c);
        if (png.bit_depth == 16) v = static_cast<std::uint16_t>(v >> 8);
        out.at(x, y, c) = static_cast<std::uint8_t>(v);
      }
    }
  }
  return out;
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
  require_rgb(image);
  write_packed(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, image.storage());
}

Gray16 read_png_gray16(const std::filesystem::path& path) {
  const auto png = decode_path(path);
  if (png.channels != 1) fail(ErrorKind::Format, "expected single-channel PNG: " + path.string());
  Gray16 out(png.width, png.height);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) out.data()[i] = sample(png, i);
  return out;
}

void write_png_gray16(const std::filesystem::path& path, const Gray16& image) {
  std::vector<std::uint8_t> packed(image.pixel_count() * 2);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    packed[2 * i] = static_cast<std::uint8_t>(image.data()[i] >> 8);
    packed[2 * i + 1] = static_cast<std::uint8_t>(image.data()[i] & 0xff);
  }
  write_packed(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 16, packed);
}

Mask read_png_mask(const std::filesystem::path& path) {
  const auto png = decode_path(path);
  Mask out(png.width, png.height);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    out.data()[i] = sample(png, i * png.channels) != 0 ? 1 : 0;
  }
  return out;
}

void write_png_mask(const std::filesystem::path& path, const Mask& mask) {
  write_packed(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 8, mask_bytes(mask));
}

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image) {
  require_rgb(image);
  return encode_packed(image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, image.storage());
}

std::vector<std::uint8_t> encode_png_mask(const Mask& mask) {
  return encode_packed(mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 8, mask_bytes(mask));
}

DepthMap read_depth_png(const std::filesystem::path& path) {
  const auto mm = read_png_gray16(path);
  DepthMap out(mm.width(), mm.height());
  for (std::size_t i = 0; i < mm.pixel_count(); ++i) out.data()[i] = mm.data()[i] / 1000.0;
  return out;
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  Gray16 mm(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
    const double v = depth.data()[i];
    const double scaled = std::isfinite(v) && v > 0.0 ? std::floor(v * 1000.0 + 0.5) : 0.0;
    mm.data()[i] = static_cast<std::uint16_t>(std::min(scaled, 65535.0));
  }
  write_png_gray16(path, mm);
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t n = bytes[i] << 16;
    if (i + 1 < bytes.size()) n |= bytes[i + 1] << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

}  // namespace mvedit::io
