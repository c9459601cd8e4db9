#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "detail.hpp"
#include "mvedit/io/byte_order.hpp"
#include "mvedit/io/png.hpp"

namespace mvedit {

double FlowField::magnitude(int x, int y) const noexcept {
  return std::hypot(static_cast<double>(u.at(x, y)), static_cast<double>(v.at(x, y)));
}

Mask FlowField::moving_mask() const {
  Mask out(width(), height());
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) out.at(x, y) = moves(x, y) ? 1 : 0;
  }
  return out;
}

void validate(const FlowField& flow) {
  if (!flow.u.same_size(flow.valid) || !flow.v.same_size(flow.valid)) {
    fail(ErrorKind::InvalidArgument, "flow components differ in size");
  }
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const float u = flow.u.at(x, y);
      const float v = flow.v.at(x, y);
      if (flow.is_valid(x, y)) {
        if (!std::isfinite(u) || !std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite flow");
      } else if (u != 0.0f || v != 0.0f) {
        fail(ErrorKind::InvalidArgument, "invalid flow pixels must be zero");
      }
    }
  }
}

OcclusionMask occlusion_mask(const FlowField& flow, const Mask& footprint) {
  require_same_size(footprint, flow.valid, "occlusion_mask");
  const int w = flow.width();
  const int h = flow.height();
  Mask destination(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!footprint.at(x, y)) continue;
      const double du = flow.is_valid(x, y) ? flow.u.at(x, y) : 0.0;
      const double dv = flow.is_valid(x, y) ? flow.v.at(x, y) : 0.0;
      const int tx = nearest_pixel(x + du);
      const int ty = nearest_pixel(y + dv);
      if (destination.contains(tx, ty)) destination.at(tx, ty) = 1;
    }
  }
  return {mask_and_not(footprint, destination), mask_and_not(destination, footprint)};
}

namespace {

std::array<std::uint8_t, 3> hsv_to_rgb(double hue_deg, double saturation) {
  const double h = std::fmod(hue_deg, 360.0) / 60.0;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = 1.0 - saturation;
  const double q = 1.0 - saturation * f;
  const double t = 1.0 - saturation * (1.0 - f);
  double r = 1.0, g = 1.0, b = 1.0;
  switch (sector) {
    case 0: r = 1.0; g = t; b = p; break;
    case 1: r = q; g = 1.0; b = p; break;
    case 2: r = p; g = 1.0; b = t; break;
    case 3: r = p; g = q; b = 1.0; break;
    case 4: r = t; g = p; b = 1.0; break;
    default: r = 1.0; g = p; b = q; break;
  }
  auto to8 = [](double c) { return static_cast<std::uint8_t>(std::floor(std::clamp(c, 0.0, 1.0) * 255.0 + 0.5)); };
  return {to8(r), to8(g), to8(b)};
}

}  // namespace

RgbImage colorize_flow(const FlowField& flow) {
  RgbImage out(flow.width(), flow.height(), 3);
  double max_magnitude = 0.0;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (flow.is_valid(x, y)) max_magnitude = std::max(max_magnitude, flow.magnitude(x, y));
    }
  }
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.is_valid(x, y)) continue;
      const double magnitude = flow.magnitude(x, y);
      const double saturation = max_magnitude > 0.0 ? magnitude / max_magnitude : 0.0;
      double hue = std::atan2(static_cast<double>(flow.v.at(x, y)), static_cast<double>(flow.u.at(x, y))) *
                   180.0 / std::numbers::pi;
      if (hue < 0.0) hue += 360.0;
      const auto rgb = hsv_to_rgb(hue, saturation);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = rgb[c];
    }
  }
  return out;
}

std::filesystem::path validity_sidecar(const std::filesystem::path& flo_path) {
  auto sidecar = flo_path;
  sidecar.replace_extension(".valid.png");
  return sidecar;
}

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  const int w = flow.width();
  const int h = flow.height();
  std::vector<std::uint8_t> bytes(12 + static_cast<std::size_t>(w) * h * 8);
  io::store(kFloMagic, std::endian::little, bytes.data());
  io::store(static_cast<std::int32_t>(w), std::endian::little, bytes.data() + 4);
  io::store(static_cast<std::int32_t>(h), std::endian::little, bytes.data() + 8);
  std::size_t offset = 12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool valid = flow.is_valid(x, y);
      io::store(valid ? flow.u.at(x, y) : 0.0f, std::endian::little, bytes.data() + offset);
      io::store(valid ? flow.v.at(x, y) : 0.0f, std::endian::little, bytes.data() + offset + 4);
      offset += 8;
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
  io::write_png_mask(validity_sidecar(path), flow.valid);
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, path.filename().string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) fail(ErrorKind::Format, path.string() + ": truncated .flo header");
  if (io::load<float>(bytes.data(), std::endian::little) != kFloMagic) {
    fail(ErrorKind::Format, path.string() + ": bad .flo magic");
  }
  const auto w = io::load<std::int32_t>(bytes.data() + 4, std::endian::little);
  const auto h = io::load<std::int32_t>(bytes.data() + 8, std::endian::little);
  if (w < 0 || h < 0 || bytes.size() != 12 + static_cast<std::size_t>(w) * h * 8) {
    fail(ErrorKind::Format, path.string() + ": .flo size does not match its header");
  }
  FlowField flow(w, h);
  std::size_t offset = 12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      flow.u.at(x, y) = io::load<float>(bytes.data() + offset, std::endian::little);
      flow.v.at(x, y) = io::load<float>(bytes.data() + offset + 4, std::endian::little);
      offset += 8;
    }
  }
  const auto sidecar = validity_sidecar(path);
  if (std::filesystem::exists(sidecar)) {
    flow.valid = io::read_png_mask(sidecar);
    if (!flow.valid.same_size(flow.u)) fail(ErrorKind::Format, sidecar.string() + ": size mismatch");
  } else {
    // Middlebury marks unknown flow with huge values.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool known = std::abs(flow.u.at(x, y)) < 1e9f && std::abs(flow.v.at(x, y)) < 1e9f;
        flow.valid.at(x, y) = known ? 1 : 0;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!flow.is_valid(x, y)) flow.clear(x, y);
    }
  }
  return flow;
}

}  // namespace mvedit
