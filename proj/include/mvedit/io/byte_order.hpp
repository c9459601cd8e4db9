#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <type_traits>

namespace mvedit::io {

/// Serialize a trivially copyable value with an explicit byte order,
/// independent of the host's.
template <typename T>
void store(T value, std::endian order, std::uint8_t* out) noexcept {
  static_assert(std::is_trivially_copyable_v<T>);
  std::memcpy(out, &value, sizeof(T));
  if (order != std::endian::native) std::reverse(out, out + sizeof(T));
}

template <typename T>
T load(const std::uint8_t* in, std::endian order) noexcept {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, in, sizeof(T));
  if (order != std::endian::native) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace mvedit::io
