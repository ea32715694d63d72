#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace amc {

// Dense n-dimensional array of f64 in row-major order, with an optional
// gradient buffer of the same length.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size()) {
      throw DimensionError("tensor data length does not match shape");
    }
  }

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double item() const {
    if (size() != 1) throw ContractError("item() requires a scalar tensor");
    return data_[0];
  }

  // Row-major element access for 2D tensors (tests and small code paths).
  double& at(std::size_t i, std::size_t j) {
    return data_[i * shape_.at(1) + j];
  }
  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_.at(1) + j];
  }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }

  bool has_grad() const { return !grad_.empty(); }

  // Gradient buffer, allocated zeroed on first use.
  std::vector<double>& grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
    return grad_;
  }
  const std::vector<double>& grad() const {
    if (grad_.empty()) throw ContractError("gradient not populated");
    return grad_;
  }

  void zero_grad() { grad_.assign(grad_.empty() ? 0 : data_.size(), 0.0); }
  void drop_grad() { grad_.clear(); }

  void reshape(std::vector<std::size_t> shape) {
    if (checked_size(shape) != data_.size()) {
      throw DimensionError("reshape changes element count");
    }
    shape_ = std::move(shape);
  }

  static std::string shape_str(const std::vector<std::size_t>& s);

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw DimensionError("zero-length tensor dimension");
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
  std::vector<double> grad_;
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(Tensor t) { return std::make_shared<Tensor>(std::move(t)); }

// "TNSR" blob: magic, u32 rank, rank x u64 dims, f64 payload row-major,
// all little-endian.
std::vector<std::uint8_t> tensor_to_blob(const Tensor& t);
Tensor tensor_from_blob(const std::uint8_t* data, std::size_t n);
void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace amc
