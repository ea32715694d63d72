#include "tensor/tensor.hpp"

#include "core/bytes.hpp"

namespace amc {

std::string Tensor::shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::vector<std::uint8_t> tensor_to_blob(const Tensor& t) {
  ByteWriter w;
  w.magic("TNSR");
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u64(d);
  w.raw(t.data(), t.size() * sizeof(double));
  return w.bytes();
}

Tensor tensor_from_blob(const std::uint8_t* data, std::size_t n) {
  ByteReader r(data, n);
  r.expect_magic("TNSR", "tensor blob");
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw FormatError("tensor blob: implausible rank");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = static_cast<std::size_t>(r.u64());
    if (d == 0) throw FormatError("tensor blob: zero dimension");
    count *= d;
  }
  if (r.remaining() != count * sizeof(double)) {
    throw FormatError("tensor blob: payload length mismatch");
  }
  std::vector<double> payload(count);
  r.raw(payload.data(), count * sizeof(double));
  return Tensor(std::move(shape), std::move(payload));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  write_file(path, tensor_to_blob(t));
}

Tensor load_tensor(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return tensor_from_blob(bytes.data(), bytes.size());
}

}  // namespace amc
