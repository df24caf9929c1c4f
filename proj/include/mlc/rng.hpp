#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mlc {

/// Independent generator for a named sub-stream of a master seed
/// ("tcr", "mlc", "kmeans", "data", "aug", ...).
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t x = master ^ h;  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::string_view name) {
  return std::mt19937_64(stream_seed(master, name));
}

}  // namespace mlc
