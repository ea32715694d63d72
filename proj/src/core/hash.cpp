#include "core/hash.hpp"

#include <algorithm>

#include "core/bytes.hpp"

namespace amc {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string hash_file(const std::filesystem::path& path) {
  return hex64(fnv1a64(read_file(path)));
}

std::string hash_tree(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    const std::string rel = f.lexically_relative(dir).generic_string();
    h = fnv1a64(rel.data(), rel.size(), h);
    auto bytes = read_file(f);
    h = fnv1a64(bytes.data(), bytes.size(), h);
  }
  return hex64(h);
}

}  // namespace amc
