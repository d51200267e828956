#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace placedet::detail {

// CRC-32 (IEEE 802.3 polynomial, reflected), used for bank payload and
// run-manifest checksums.
inline const std::array<std::uint32_t, 256>& crc32_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1u) ? (0xedb88320u ^ (c >> 1)) : (c >> 1);
      }
      t[i] = c;
    }
    return t;
  }();
  return table;
}

inline std::uint32_t crc32_update(std::uint32_t crc, const void* data,
                                  std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  const auto& table = crc32_table();
  crc = ~crc;
  for (std::size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
  }
  return ~crc;
}

inline std::uint32_t crc32(const void* data, std::size_t len) {
  return crc32_update(0u, data, len);
}

}  // namespace placedet::detail
