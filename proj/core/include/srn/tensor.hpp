#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace srn {

/// Dense row-major tensor of rank 1..5. Feature maps are laid out
/// (C, Z, Y, X); convolution kernels (C_out, C_in, kz, ky, kx).
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (int d : shape_) {
      if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, T(0));
  }

  TensorT(std::vector<int> shape, std::vector<T> values) : TensorT(std::move(shape)) {
    if (values.size() != data_.size()) throw std::invalid_argument("tensor value count mismatch");
    data_ = std::move(values);
  }

  static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

  static TensorT full(std::vector<int> shape, T value) {
    TensorT t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // (c, z, y, x) accessor for rank-4 maps.
  T& at(int c, int z, int y, int x) {
    return data_[((static_cast<std::size_t>(c) * shape_[1] + z) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(int c, int z, int y, int x) const {
    return data_[((static_cast<std::size_t>(c) * shape_[1] + z) * shape_[2] + y) * shape_[3] + x];
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  std::size_t count_nonzero() const {
    std::size_t n = 0;
    for (const T& v : data_) n += (v != T(0));
    return n;
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
bool operator==(const TensorT<T>& a, const TensorT<T>& b) {
  return a.shape() == b.shape() && a.values() == b.values();
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

/// Rank-4 feature map (C, Z, Y, X). `binary` marks spike maps whose
/// elements are all 0 or 1; the event-driven convolution path requires it.
template <typename T>
struct FeatureMapT {
  TensorT<T> values;
  bool binary = false;

  bool all_binary() const {
    for (const T& v : values.values())
      if (v != T(0) && v != T(1)) return false;
    return true;
  }
};

using FeatureMap = FeatureMapT<float>;

}  // namespace srn
