#pragma once

// Dense row-major tensors and the matrix product used by the lowered
// deconvolution. Axis conventions:
//   rank 2: (rows, cols)
//   rank 3: feature map (channels, height, width)
//   rank 4: deconvolution weights (c_i, c_o, h_k, w_k), or a batch of
//           feature maps (batch, channels, height, width)

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "binplan/error.hpp"

namespace binplan {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = RowMatrix<double>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;

  /// Zero-filled tensor.
  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape();
    data_ = Vector::Zero(shape_size(shape_));
  }

  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_size(shape_))
      throw ContractViolation("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                              shape_string(shape_));
  }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
  Index size() const noexcept { return data_.size(); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  const Vector& flat() const noexcept { return data_; }
  Vector& flat() noexcept { return data_; }
  const Scalar* data() const noexcept { return data_.data(); }
  Scalar* data() noexcept { return data_.data(); }

  Scalar& operator()(Index i, Index j) { return data_[i * shape_[1] + j]; }
  Scalar operator()(Index i, Index j) const { return data_[i * shape_[1] + j]; }
  Scalar& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  Scalar operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }
  Scalar& operator()(Index i, Index j, Index k, Index l) { return data_[offset(i, j, k, l)]; }
  Scalar operator()(Index i, Index j, Index k, Index l) const { return data_[offset(i, j, k, l)]; }

  /// Same data viewed under another shape of equal size.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  void check_shape() const {
    if (shape_.empty()) throw ContractViolation("tensor shape must have at least one axis");
    for (Index d : shape_)
      if (d < 1) throw ContractViolation("tensor dimensions must be positive, got " + shape_string(shape_));
  }

  Index offset(Index i, Index j, Index k) const { return (i * shape_[1] + j) * shape_[2] + k; }
  Index offset(Index i, Index j, Index k, Index l) const {
    return ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }

  Shape shape_;
  Vector data_;
};

using TensorXd = Tensor<double>;

template <typename A, typename B>
RowMatrix<typename A::Scalar> matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows())
    throw ContractViolation("matmul dimension mismatch: " + shape_string({a.rows(), a.cols()}) + " * " +
                            shape_string({b.rows(), b.cols()}));
  return a * b;
}

}  // namespace binplan
