#include "binplan/savings.hpp"

#include <cmath>

namespace binplan {

double memory_cost(Index total, Index binarized) {
  if (total < 1) throw ContractViolation("memory_cost needs N >= 1, got " + std::to_string(total));
  if (binarized < 0 || binarized > total)
    throw ContractViolation("memory_cost needs 0 <= K <= N, got K = " + std::to_string(binarized) +
                            ", N = " + std::to_string(total));
  const Index numerator = binarized + 32 * (total - binarized);
  const Index denominator = 32 * total;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

double compute_cost(Index total_ops, Index binarized_ops) {
  if (total_ops < 1) throw ContractViolation("compute_cost needs N_ops >= 1, got " + std::to_string(total_ops));
  if (binarized_ops < 0 || binarized_ops > total_ops)
    throw ContractViolation("compute_cost needs 0 <= K_ops <= N_ops, got K_ops = " + std::to_string(binarized_ops) +
                            ", N_ops = " + std::to_string(total_ops));
  const Index numerator = binarized_ops + 2 * (total_ops - binarized_ops);
  return static_cast<double>(numerator) / static_cast<double>(2 * total_ops);
}

SavingsReport estimate_plan(const NetworkSpec& net, const LayerSet& plan, bool include_dense, double forward_fraction) {
  if (!(forward_fraction >= 0.0 && forward_fraction <= 1.0))
    throw ContractViolation("forward fraction must lie in [0, 1]");
  for (int n : plan) {
    const auto& l = net.layer(n);
    if (l.kind == LayerKind::dense)
      throw ContractViolation("plan binarizes dense layer " + std::to_string(n) + " '" + l.name +
                              "'; only deconv/conv layers can be binarized");
  }

  SavingsReport r;
  r.include_dense = include_dense;
  r.forward_fraction = forward_fraction;
  for (int n = 1; n <= net.layer_count(); ++n) {
    const auto& l = net.layer(n);
    if (l.kind == LayerKind::dense && !include_dense) continue;
    r.total_weights += l.weight_count();
    r.total_mults += l.multiply_count();
    if (plan.contains(n)) {
      r.binarized_weights += l.weight_count();
      r.binarized_mults += l.multiply_count();
    }
  }

  const auto& first = net.layers.front();
  if (include_dense) {
    if (net.latent_dim && first.kind != LayerKind::dense) {
      const Index projection = *net.latent_dim * first.c_i * first.h_i * first.w_i;
      r.total_weights += projection;
      r.total_mults += projection;
      r.notes.push_back("counts the implicit full-precision latent projection (" + std::to_string(*net.latent_dim) +
                        " -> " + std::to_string(first.c_i * first.h_i * first.w_i) + ", " +
                        std::to_string(projection) + " weights)");
    }
    r.notes.push_back("dense layers counted as full precision");
  } else {
    r.notes.push_back("deconv/conv weights only; dense layers and any latent projection excluded");
  }
  r.notes.push_back("training estimate: forward fraction " + std::to_string(forward_fraction) +
                    " of multiplies accelerated, backward pass unchanged");

  r.memory_cost_ratio = memory_cost(r.total_weights, r.binarized_weights);
  r.inference_cost_ratio = compute_cost(r.total_mults, r.binarized_mults);
  r.training_cost_ratio = forward_fraction * r.inference_cost_ratio + (1.0 - forward_fraction);
  return r;
}

}  // namespace binplan
