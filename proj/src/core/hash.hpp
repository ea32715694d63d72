#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace amc {

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t v);

// Content hash of a file, as 16 hex digits.
std::string hash_file(const std::filesystem::path& path);

// Combined content hash of every regular file under a directory,
// visited in sorted relative-path order.
std::string hash_tree(const std::filesystem::path& dir);

}  // namespace amc
