#pragma once

#include <cstdint>
#include <string_view>

namespace avs {

/// FNV-1a 64-bit over a byte range; used for artifact content checksums.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace avs
