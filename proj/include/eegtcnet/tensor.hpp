#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegtcnet {

using Dims = std::vector<std::size_t>;

inline std::size_t element_count(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_to_string(const Dims& dims) {
  std::ostringstream oss;
  oss << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) oss << ',';
    oss << dims[i];
  }
  oss << ')';
  return oss.str();
}

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense row-major float tensor with up to three axes
// (depth, height, width) or (depth, width) or (length).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Dims dims, float fill = 0.0f)
      : dims_(std::move(dims)), data_(element_count(dims_), fill) {
    check_rank();
  }

  Tensor(Dims dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_rank();
    if (element_count(dims_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match dims " + dims_to_string(dims_));
    }
  }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  // Row-major accessors; no bounds checking beyond the flat index.
  float& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  float at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }
  float& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  float at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  // Same data, different view. Element count must be preserved.
  Tensor reshaped(Dims dims) const& {
    Tensor out = *this;
    out.reshape(std::move(dims));
    return out;
  }
  Tensor reshaped(Dims dims) && {
    reshape(std::move(dims));
    return std::move(*this);
  }

  void reshape(Dims dims) {
    if (element_count(dims) != data_.size()) {
      throw ShapeError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
    }
    dims_ = std::move(dims);
    check_rank();
  }

  bool all_finite() const noexcept {
    for (float v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void check_rank() const {
    if (dims_.empty() || dims_.size() > 4) {
      throw ShapeError("tensor rank must be in [1,4], got " + std::to_string(dims_.size()));
    }
  }

  Dims dims_;
  std::vector<float> data_;
};

}  // namespace eegtcnet
