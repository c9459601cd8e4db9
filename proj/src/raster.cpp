#include "mvedit/raster.hpp"

#include <algorithm>

namespace mvedit {

ImageD to_unit(const RgbImage& image) {
  ImageD out(image.width(), image.height(), image.channels());
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / 255.0;
  return out;
}

RgbImage to_rgb8(const ImageD& image) {
  RgbImage out(image.width(), image.height(), image.channels());
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::clamp(src[i], 0.0, 1.0) * 255.0;
    dst[i] = static_cast<std::uint8_t>(std::floor(v + 0.5));
  }
  return out;
}

std::size_t count_set(const Mask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](auto v) { return v != 0; }));
}

Mask mask_or(const Mask& a, const Mask& b) {
  require_same_size(a, b, "mask_or");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) out.data()[i] = (a.data()[i] || b.data()[i]) ? 1 : 0;
  return out;
}

Mask mask_and_not(const Mask& a, const Mask& b) {
  require_same_size(a, b, "mask_and_not");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) out.data()[i] = (a.data()[i] && !b.data()[i]) ? 1 : 0;
  return out;
}

Mask mask_not(const Mask& a) {
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.pixel_count(); ++i) out.data()[i] = a.data()[i] ? 0 : 1;
  return out;
}

// Square (Chebyshev) structuring element.
Mask dilate(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  Mask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      bool hit = false;
      for (int dy = -radius; dy <= radius && !hit; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (mask.contains(x + dx, y + dy) && mask.at(x + dx, y + dy)) {
            hit = true;
            break;
          }
        }
      }
      out.at(x, y) = hit ? 1 : 0;
    }
  }
  return out;
}

// Pixels outside the raster count as set, so erosion never eats the border.
Mask erode(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  Mask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      bool keep = mask.at(x, y) != 0;
      for (int dy = -radius; dy <= radius && keep; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (mask.contains(x + dx, y + dy) && !mask.at(x + dx, y + dy)) {
            keep = false;
            break;
          }
        }
      }
      out.at(x, y) = keep ? 1 : 0;
    }
  }
  return out;
}

}  // namespace mvedit
