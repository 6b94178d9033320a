#pragma once

// Transposed convolution ("deconvolution") in two forms:
//
//   deconv_direct  scatter-add of every input pixel times its kernel slice
//   deconv_matrix  lowering D^Od = D^Id * K^d followed by a scatter of the
//                  product's cells into the output through a ScatterMap
//
// Lowered layouts:
//   D^Id  s_i x c_i,  row = input pixel (h * w_i + w), col = input channel
//   K^d   c_i x r_o,  col = (c_o, kh, kw) with c_o major, kw fastest
//   D^Od  s_i x r_o
//
// The row-major (c_i, h, w) feature map is, byte for byte, a column-major
// s_i x c_i matrix, and the row-major (c_i, c_o, h_k, w_k) weight tensor is
// a row-major c_i x r_o matrix, so both lowerings are zero-copy maps.

#include <vector>

#include "binplan/tensor.hpp"

namespace binplan {

struct DeconvGeometry {
  Index in_channels = 1;
  Index out_channels = 1;
  Index in_h = 1;
  Index in_w = 1;
  Index kernel_h = 1;
  Index kernel_w = 1;
  Index stride = 1;
  Index padding = 0;
  Index output_padding = 0;

  Index out_h() const { return (in_h - 1) * stride + kernel_h - 2 * padding + output_padding; }
  Index out_w() const { return (in_w - 1) * stride + kernel_w - 2 * padding + output_padding; }
  Index s_i() const { return in_h * in_w; }
  Index r_o() const { return out_channels * kernel_h * kernel_w; }

  /// Throws InvalidGeometry unless every dimension is usable.
  void check() const {
    if (in_channels < 1 || out_channels < 1 || in_h < 1 || in_w < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1)
      throw InvalidGeometry("deconvolution dimensions and stride must be positive");
    if (padding < 0 || output_padding < 0) throw InvalidGeometry("padding must be non-negative");
    if (out_h() < 1 || out_w() < 1)
      throw InvalidGeometry("deconvolution output would be " + std::to_string(out_h()) + "x" +
                            std::to_string(out_w()));
  }
};

/// For each cell (row in s_i, col in r_o) of D^Od, the flat index into the
/// (c_o, h_o, w_o) output it lands on, or kCropped when padding removes it.
struct ScatterMap {
  static constexpr Index kCropped = -1;

  Index rows = 0;
  Index cols = 0;
  Shape out_shape;
  std::vector<Index> target;

  Index at(Index row, Index col) const { return target[static_cast<std::size_t>(row * cols + col)]; }
};

inline ScatterMap im2col_output(const DeconvGeometry& g) {
  g.check();
  ScatterMap map;
  map.rows = g.s_i();
  map.cols = g.r_o();
  const Index oh = g.out_h();
  const Index ow = g.out_w();
  map.out_shape = {g.out_channels, oh, ow};
  map.target.resize(static_cast<std::size_t>(map.rows * map.cols));
  for (Index h = 0; h < g.in_h; ++h) {
    for (Index w = 0; w < g.in_w; ++w) {
      const Index row = h * g.in_w + w;
      for (Index co = 0; co < g.out_channels; ++co) {
        for (Index kh = 0; kh < g.kernel_h; ++kh) {
          for (Index kw = 0; kw < g.kernel_w; ++kw) {
            const Index col = (co * g.kernel_h + kh) * g.kernel_w + kw;
            const Index y = h * g.stride + kh - g.padding;
            const Index x = w * g.stride + kw - g.padding;
            const bool inside = y >= 0 && y < oh && x >= 0 && x < ow;
            map.target[static_cast<std::size_t>(row * map.cols + col)] =
                inside ? (co * oh + y) * ow + x : ScatterMap::kCropped;
          }
        }
      }
    }
  }
  return map;
}

namespace detail {

struct DeconvOperands {
  DeconvGeometry geometry;
  Index batch = 1;
  bool batched = false;
};

template <typename Scalar>
DeconvOperands check_operands(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, Index stride,
                              Index padding, Index output_padding) {
  DeconvOperands ops;
  if (input.rank() != 3 && input.rank() != 4)
    throw ContractViolation("deconvolution input must be rank 3 (c, h, w) or rank 4 (n, c, h, w), got " +
                            shape_string(input.shape()));
  if (weights.rank() != 4)
    throw ContractViolation("deconvolution weights must be rank 4 (c_i, c_o, h_k, w_k), got " +
                            shape_string(weights.shape()));
  ops.batched = input.rank() == 4;
  const Index base = ops.batched ? 1 : 0;
  ops.batch = ops.batched ? input.dim(0) : 1;
  if (input.dim(base) != weights.dim(0))
    throw ContractViolation("input channels " + std::to_string(input.dim(base)) + " do not match weight c_i " +
                            std::to_string(weights.dim(0)));
  ops.geometry = DeconvGeometry{weights.dim(0), weights.dim(1), input.dim(base + 1), input.dim(base + 2),
                                weights.dim(2), weights.dim(3), stride,          padding,
                                output_padding};
  ops.geometry.check();
  return ops;
}

inline Shape output_shape(const DeconvOperands& ops) {
  const auto& g = ops.geometry;
  if (ops.batched) return {ops.batch, g.out_channels, g.out_h(), g.out_w()};
  return {g.out_channels, g.out_h(), g.out_w()};
}

}  // namespace detail

/// Reference transposed convolution by direct scatter-add.
template <typename Scalar>
Tensor<Scalar> deconv_direct(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, Index stride,
                             Index padding, Index output_padding = 0) {
  const auto ops = detail::check_operands(input, weights, stride, padding, output_padding);
  const auto& g = ops.geometry;
  const Index oh = g.out_h();
  const Index ow = g.out_w();
  Tensor<Scalar> out(detail::output_shape(ops));
  const Index in_plane = g.in_channels * g.s_i();
  const Index out_plane = g.out_channels * oh * ow;
  for (Index n = 0; n < ops.batch; ++n) {
    const Scalar* x = input.data() + n * in_plane;
    Scalar* y = out.data() + n * out_plane;
    for (Index ci = 0; ci < g.in_channels; ++ci) {
      for (Index h = 0; h < g.in_h; ++h) {
        for (Index w = 0; w < g.in_w; ++w) {
          const Scalar v = x[(ci * g.in_h + h) * g.in_w + w];
          for (Index co = 0; co < g.out_channels; ++co) {
            for (Index kh = 0; kh < g.kernel_h; ++kh) {
              const Index oy = h * stride + kh - padding;
              if (oy < 0 || oy >= oh) continue;
              for (Index kw = 0; kw < g.kernel_w; ++kw) {
                const Index ox = w * stride + kw - padding;
                if (ox < 0 || ox >= ow) continue;
                y[(co * oh + oy) * ow + ox] += v * weights(ci, co, kh, kw);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

/// D^Id for every sample stacked vertically: (batch * s_i) x c_i.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> lower_input(const Tensor<Scalar>& input) {
  if (input.rank() != 3 && input.rank() != 4)
    throw ContractViolation("cannot lower input of shape " + shape_string(input.shape()));
  const bool batched = input.rank() == 4;
  const Index batch = batched ? input.dim(0) : 1;
  const Index channels = input.dim(batched ? 1 : 0);
  const Index s_i = input.size() / (batch * channels);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> lowered(batch * s_i, channels);
  for (Index n = 0; n < batch; ++n)
    lowered.middleRows(n * s_i, s_i) =
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(
            input.data() + n * s_i * channels, s_i, channels);
  return lowered;
}

/// K^d, c_i x r_o.
template <typename Scalar>
Eigen::Map<const RowMatrix<Scalar>> lower_weights(const Tensor<Scalar>& weights) {
  if (weights.rank() != 4)
    throw ContractViolation("cannot lower weights of shape " + shape_string(weights.shape()));
  return {weights.data(), weights.dim(0), weights.size() / weights.dim(0)};
}

/// Transposed convolution through the lowered matrix product.
template <typename Scalar>
Tensor<Scalar> deconv_matrix(const Tensor<Scalar>& input, const Tensor<Scalar>& weights, Index stride,
                             Index padding, Index output_padding = 0) {
  const auto ops = detail::check_operands(input, weights, stride, padding, output_padding);
  const ScatterMap map = im2col_output(ops.geometry);
  const auto lowered = lower_input(input);
  const RowMatrix<Scalar> product = matmul(lowered, lower_weights(weights));

  Tensor<Scalar> out(detail::output_shape(ops));
  const Index out_plane = shape_size(map.out_shape);
  for (Index n = 0; n < ops.batch; ++n) {
    Scalar* y = out.data() + n * out_plane;
    for (Index row = 0; row < map.rows; ++row) {
      const Scalar* cells = product.data() + (n * map.rows + row) * map.cols;
      const Index* target = map.target.data() + row * map.cols;
      for (Index col = 0; col < map.cols; ++col)
        if (target[col] != ScatterMap::kCropped) y[target[col]] += cells[col];
    }
  }
  return out;
}

}  // namespace binplan
