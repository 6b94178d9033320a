#include "binplan/binarize.hpp"

#include <cmath>

#include "binplan/parallel.hpp"
#include "binplan/rng.hpp"

namespace binplan {

namespace {

// Output-channel slices of a (c_i, c_o, h_k, w_k) or (c_i, c_o) tensor viewed
// as c_i x (c_o * taps): channel c owns columns [c * taps, (c + 1) * taps).
Index taps_per_channel(const TensorXd& w) { return w.rank() == 4 ? w.dim(2) * w.dim(3) : 1; }

void require_weight_rank(const TensorXd& w, const char* what) {
  if (w.rank() != 4 && w.rank() != 2)
    throw ContractViolation(std::string(what) + " needs (c_i, c_o, h_k, w_k) or (c_i, c_o) weights, got " +
                            shape_string(w.shape()));
}

Eigen::Map<const RowMatrix<double>> as_matrix(const TensorXd& w) { return {w.data(), w.dim(0), w.size() / w.dim(0)}; }

// Mean shifted by the first element, so equal magnitudes give that magnitude exactly.
double mean_abs(const Eigen::Ref<const Eigen::MatrixXd>& block) {
  const double first = std::abs(block(0, 0));
  return first + (block.cwiseAbs().array() - first).sum() / static_cast<double>(block.size());
}

}  // namespace

BinarizedWeights binarize_weights(const TensorXd& weights) {
  require_weight_rank(weights, "binarize_weights");
  const Index channels = weights.dim(1);
  const Index taps = taps_per_channel(weights);
  const auto k = as_matrix(weights);

  BinarizedWeights bw{TensorXd(weights.shape()), Eigen::VectorXd::Zero(channels)};
  bw.signs.flat() = weights.flat().unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  for (Index c = 0; c < channels; ++c)
    bw.scales[c] = mean_abs(k.middleCols(c * taps, taps));
  return bw;
}

TensorXd reconstruct(const BinarizedWeights& bw) {
  TensorXd out(bw.signs.shape());
  const Index channels = bw.signs.dim(1);
  if (bw.scales.size() != channels) throw ContractViolation("one scale per output channel required");
  const Index taps = taps_per_channel(bw.signs);
  Eigen::Map<RowMatrix<double>> dst(out.data(), out.dim(0), channels * taps);
  const auto src = as_matrix(bw.signs);
  for (Index c = 0; c < channels; ++c)
    dst.middleCols(c * taps, taps) = bw.scales[c] * src.middleCols(c * taps, taps);
  return out;
}

Eigen::VectorXd channel_error_sq(const TensorXd& weights, const BinarizedWeights& bw) {
  require_weight_rank(weights, "channel_error_sq");
  const Index channels = weights.dim(1);
  const Index taps = taps_per_channel(weights);
  const auto k = as_matrix(weights);
  const double n = static_cast<double>(weights.dim(0) * taps);
  Eigen::VectorXd err(channels);
  for (Index c = 0; c < channels; ++c)
    err[c] = k.middleCols(c * taps, taps).squaredNorm() - n * bw.scales[c] * bw.scales[c];
  return err;
}

BinarizedWeights fit_binarized(const TensorXd& weights, const Eigen::MatrixXd& layer_inputs,
                               const FitOptions& options) {
  require_weight_rank(weights, "fit_binarized");
  const Index c_i = weights.dim(0);
  const Index channels = weights.dim(1);
  const Index taps = taps_per_channel(weights);
  const Index cols = channels * taps;
  if (layer_inputs.cols() != c_i)
    throw ContractViolation("fit_binarized: inputs have " + std::to_string(layer_inputs.cols()) +
                            " columns, weights expect c_i = " + std::to_string(c_i));

  BinarizedWeights bw = binarize_weights(weights);
  const Eigen::MatrixXd gram = layer_inputs.transpose() * layer_inputs;
  const Eigen::MatrixXd k = as_matrix(weights);
  Eigen::MatrixXd signs = as_matrix(bw.signs);

  const auto column_scales = [&] {
    Eigen::VectorXd a(cols);
    for (Index c = 0; c < channels; ++c) a.segment(c * taps, taps).setConstant(bw.scales[c]);
    return a;
  };

  for (int refit = 0; refit < options.refits; ++refit) {
    const Eigen::VectorXd alpha = column_scales();
    // gram * (k - signs * diag(alpha)); column j tracks G e_j as signs flip.
    Eigen::MatrixXd g_err = gram * (k - signs * alpha.asDiagonal());

    parallel_for(static_cast<std::size_t>(cols), [&](std::size_t jj) {
      const auto j = static_cast<Index>(jj);
      const double a = alpha[j];
      if (a <= 0.0) return;
      auto b = signs.col(j);
      auto ge = g_err.col(j);
      for (int sweep = 0; sweep < options.sweeps; ++sweep) {
        bool flipped = false;
        for (Index m = 0; m < c_i; ++m) {
          // Objective change of e_j -> e_j + 2 a b_m u_m.
          const double delta = 4.0 * a * b[m] * ge[m] + 4.0 * a * a * gram(m, m);
          if (delta < -1e-12 * a * a * gram(m, m)) {
            ge += (2.0 * a * b[m]) * gram.col(m);
            b[m] = -b[m];
            flipped = true;
          }
        }
        if (!flipped) break;
      }
    });

    // Least-squares scale per channel for the current signs, clamped at 0.
    const Eigen::MatrixXd g_signs = gram * signs;
    for (Index c = 0; c < channels; ++c) {
      const double num = (k.middleCols(c * taps, taps).cwiseProduct(g_signs.middleCols(c * taps, taps))).sum();
      const double den = (signs.middleCols(c * taps, taps).cwiseProduct(g_signs.middleCols(c * taps, taps))).sum();
      bw.scales[c] = den > 0.0 ? std::max(0.0, num / den) : 0.0;
    }
  }

  Eigen::Map<RowMatrix<double>>(bw.signs.data(), c_i, cols) = signs;
  return bw;
}

Shape weight_shape(const LayerSpec& layer) {
  if (layer.kind == LayerKind::dense) return {layer.c_i, layer.c_o};
  return {layer.c_i, layer.c_o, layer.h_k, layer.w_k};
}

void check_weights(const NetworkSpec& net, std::span<const TensorXd> weights) {
  if (static_cast<int>(weights.size()) != net.layer_count())
    throw ContractViolation("got " + std::to_string(weights.size()) + " weight tensors for " +
                            std::to_string(net.layer_count()) + " layers");
  for (int n = 1; n <= net.layer_count(); ++n) {
    const Shape expected = weight_shape(net.layer(n));
    const auto& w = weights[static_cast<std::size_t>(n - 1)];
    if (w.shape() != expected)
      throw ContractViolation("layer " + std::to_string(n) + " '" + net.layer(n).name + "' expects weights " +
                              shape_string(expected) + ", got " + shape_string(w.shape()));
  }
}

std::vector<TensorXd> random_weights(const NetworkSpec& net, std::uint64_t seed, double stdev) {
  std::vector<TensorXd> weights;
  weights.reserve(net.layers.size());
  for (int n = 1; n <= net.layer_count(); ++n) {
    TensorXd w(weight_shape(net.layer(n)));
    auto engine = make_engine(seed, {0x77656967ULL, static_cast<std::uint64_t>(n)});
    fill_normal(w.flat(), engine, 0.0, stdev);
    weights.push_back(std::move(w));
  }
  return weights;
}

TensorXd as_layer_batch(const LayerSpec& layer, const TensorXd& input) {
  const Index per_sample = layer.c_i * layer.h_i * layer.w_i;
  if (input.size() % per_sample != 0)
    throw ContractViolation("input of shape " + shape_string(input.shape()) + " does not fit layer '" + layer.name +
                            "' input " + std::to_string(layer.c_i) + "x" + std::to_string(layer.h_i) + "x" +
                            std::to_string(layer.w_i));
  return input.reshaped({input.size() / per_sample, layer.c_i, layer.h_i, layer.w_i});
}

TensorXd layer_forward(const LayerSpec& layer, const TensorXd& weights, const TensorXd& input) {
  if (weights.shape() != weight_shape(layer))
    throw ContractViolation("layer '" + layer.name + "' expects weights " + shape_string(weight_shape(layer)) +
                            ", got " + shape_string(weights.shape()));
  switch (layer.kind) {
    case LayerKind::deconv:
      return deconv_matrix(as_layer_batch(layer, input), weights, layer.stride, layer.padding, layer.output_padding);
    case LayerKind::dense: {
      const TensorXd batch = as_layer_batch(layer, input);
      const Index n = batch.dim(0);
      Eigen::Map<const RowMatrix<double>> x(batch.data(), n, layer.c_i);
      Eigen::Map<const RowMatrix<double>> w(weights.data(), layer.c_i, layer.c_o);
      const RowMatrix<double> y = matmul(x, w);
      return TensorXd({n, layer.c_o, 1, 1}, Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()));
    }
    case LayerKind::conv:
      break;
  }
  throw ContractViolation("forward pass is not available for conv layer '" + layer.name +
                          "'; only deconv and dense layers run forward");
}

std::vector<TensorXd> forward_activations(const NetworkSpec& net, std::span<const TensorXd> weights,
                                          const TensorXd& input) {
  check_weights(net, weights);
  std::vector<TensorXd> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(as_layer_batch(net.layers.front(), input));
  for (int n = 1; n <= net.layer_count(); ++n)
    acts.push_back(layer_forward(net.layer(n), weights[static_cast<std::size_t>(n - 1)], acts.back()));
  return acts;
}

TensorXd forward_with_plan(const NetworkSpec& net, std::span<const TensorXd> weights, const TensorXd& input,
                           const LayerSet& plan) {
  check_weights(net, weights);
  for (int n : plan) {
    const auto& l = net.layer(n);
    if (l.kind == LayerKind::dense)
      throw ContractViolation("plan binarizes dense layer " + std::to_string(n) + " '" + l.name + "'");
  }
  TensorXd x = as_layer_batch(net.layers.front(), input);
  for (int n = 1; n <= net.layer_count(); ++n) {
    const auto& w = weights[static_cast<std::size_t>(n - 1)];
    x = plan.contains(n) ? layer_forward(net.layer(n), reconstruct(binarize_weights(w)), x)
                         : layer_forward(net.layer(n), w, x);
  }
  const bool unbatched = input.rank() == 3 && net.layers.front().is_spatial() && x.dim(0) == 1;
  if (unbatched) return x.reshaped({x.dim(1), x.dim(2), x.dim(3)});
  return x;
}

}  // namespace binplan
