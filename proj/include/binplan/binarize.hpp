#pragma once

// Weight binarization (BWN style) and the forward pass of a partially
// binarized network.
//
// Weight tensors use one layout for every kind:
//   deconv, conv: (c_i, c_o, h_k, w_k)
//   dense:        (c_i, c_o)
// so the output channel is always axis 1.

#include <cstdint>
#include <span>
#include <vector>

#include "binplan/netspec.hpp"
#include "binplan/savings.hpp"

namespace binplan {

struct BinarizedWeights {
  TensorXd signs;          // entries in {-1, +1}
  Eigen::VectorXd scales;  // one non-negative scale per output channel

  const Shape& shape() const { return signs.shape(); }
};

/// signs = sign(w) with sign(0) = +1; scale_c = mean |w| over output channel c.
BinarizedWeights binarize_weights(const TensorXd& weights);

/// scale_c * sign, elementwise.
TensorXd reconstruct(const BinarizedWeights& bw);

/// Squared binarization error per output channel, |w_c|^2 - n * scale_c^2.
Eigen::VectorXd channel_error_sq(const TensorXd& weights, const BinarizedWeights& bw);

struct FitOptions {
  int refits = 3;  // scale re-fits
  int sweeps = 2;  // sign sweeps per refit
};

/// Binarized weights chosen to reproduce the layer's output on the given
/// lowered inputs (rows x c_i, as produced by lower_input). Starts from
/// binarize_weights, then alternates single-sign flips that reduce
/// |X (K - K_b)|_F with least-squares refits of the per-channel scales.
/// Never worse than the starting point on the given inputs.
BinarizedWeights fit_binarized(const TensorXd& weights, const Eigen::MatrixXd& layer_inputs,
                               const FitOptions& options = {});

Shape weight_shape(const LayerSpec& layer);
void check_weights(const NetworkSpec& net, std::span<const TensorXd> weights);

/// Normal(0, stdev) weights for every layer, stream keyed by (seed, layer).
std::vector<TensorXd> random_weights(const NetworkSpec& net, std::uint64_t seed, double stdev = 0.02);

/// One layer on a batch (n, c, h, w) or single (c, h, w) input.
TensorXd layer_forward(const LayerSpec& layer, const TensorXd& weights, const TensorXd& input);

/// Input reshaped to a (batch, c_i, h_i, w_i) batch for `layer`.
TensorXd as_layer_batch(const LayerSpec& layer, const TensorXd& input);

/// Full-precision activations [input batch, out_1, ..., out_L], each batched.
std::vector<TensorXd> forward_activations(const NetworkSpec& net, std::span<const TensorXd> weights,
                                          const TensorXd& input);

/// Runs the chain with BWN-reconstructed weights on the plan's layers.
/// Output is batched iff the input was (rank-4 input for a spatial first layer).
TensorXd forward_with_plan(const NetworkSpec& net, std::span<const TensorXd> weights, const TensorXd& input,
                           const LayerSet& plan);

}  // namespace binplan
