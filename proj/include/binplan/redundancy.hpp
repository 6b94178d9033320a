#pragma once

// Degree of redundancy (DOR): how much spare dimension a layer has for
// absorbing sign-constrained weights.
//   deconv: c_i - h_i * w_i
//   conv:   h_k * w_k * c_i - c_o
// Higher is safer to binarize; negative values mark layers whose outputs
// live in a larger space than their inputs can span.

#include <cstdint>
#include <string>
#include <vector>

#include "binplan/netspec.hpp"

namespace binplan {

std::int64_t dor_deconv(const LayerSpec& layer);
std::int64_t dor_conv(const LayerSpec& layer);
/// Dispatches on kind; dense layers have no DOR and throw.
std::int64_t degree_of_redundancy(const LayerSpec& layer);

struct DorEntry {
  int layer = 0;  // 1-based layer number
  std::string name;
  LayerKind kind = LayerKind::deconv;
  std::int64_t dor = 0;
  int rank = 0;  // 1 = most redundant
};

struct DorReport {
  std::vector<DorEntry> entries;  // network order
  std::vector<std::string> notes;

  /// Layer numbers sorted by DOR, high to low, ties shallow first.
  std::vector<int> descending() const;
};

DorReport analyze(const NetworkSpec& net);

}  // namespace binplan
