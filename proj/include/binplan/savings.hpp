#pragma once

// Storage and multiply-cost estimates for a binarization plan. A binarized
// weight costs 1 bit against 32 for single precision; a binarized multiply
// is counted at half the cost of a full-precision one.

#include <set>
#include <string>
#include <vector>

#include "binplan/netspec.hpp"

namespace binplan {

/// Set of 1-based layer numbers.
using LayerSet = std::set<int>;

/// (K + 32 (N - K)) / (32 N), exact to the last bit for N < 2^47.
double memory_cost(Index total, Index binarized);
/// (K + 2 (N - K)) / (2 N).
double compute_cost(Index total_ops, Index binarized_ops);

struct SavingsReport {
  Index total_weights = 0;
  Index binarized_weights = 0;
  double memory_cost_ratio = 1.0;
  Index total_mults = 0;
  Index binarized_mults = 0;
  double inference_cost_ratio = 1.0;
  /// Share of training multiplies spent in the forward pass.
  double forward_fraction = 0.5;
  /// forward_fraction * inference ratio + (1 - forward_fraction); backward is not accelerated.
  double training_cost_ratio = 1.0;
  bool include_dense = false;
  std::vector<std::string> notes;

  double memory_saving() const { return 1.0 / memory_cost_ratio; }
  double inference_speedup() const { return 1.0 / inference_cost_ratio; }
  double training_speedup() const { return 1.0 / training_cost_ratio; }
};

SavingsReport estimate_plan(const NetworkSpec& net, const LayerSet& plan, bool include_dense,
                            double forward_fraction = 0.5);

}  // namespace binplan
