#include "binplan/redundancy.hpp"

#include <algorithm>

namespace binplan {

std::int64_t dor_deconv(const LayerSpec& layer) {
  if (layer.kind != LayerKind::deconv)
    throw ContractViolation("dor_deconv on " + std::string(to_string(layer.kind)) + " layer '" + layer.name + "'");
  return layer.c_i - layer.s_i();
}

std::int64_t dor_conv(const LayerSpec& layer) {
  if (layer.kind != LayerKind::conv)
    throw ContractViolation("dor_conv on " + std::string(to_string(layer.kind)) + " layer '" + layer.name + "'");
  return layer.h_k * layer.w_k * layer.c_i - layer.c_o;
}

std::int64_t degree_of_redundancy(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::deconv:
      return dor_deconv(layer);
    case LayerKind::conv:
      return dor_conv(layer);
    case LayerKind::dense:
      break;
  }
  throw ContractViolation("degree of redundancy is undefined for dense layer '" + layer.name + "'");
}

std::vector<int> DorReport::descending() const {
  std::vector<DorEntry> sorted = entries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const DorEntry& a, const DorEntry& b) { return a.dor > b.dor; });
  std::vector<int> order;
  order.reserve(sorted.size());
  for (const auto& e : sorted) order.push_back(e.layer);
  return order;
}

DorReport analyze(const NetworkSpec& net) {
  DorReport report;
  for (int n = 1; n <= net.layer_count(); ++n) {
    const auto& l = net.layer(n);
    if (l.kind == LayerKind::dense) {
      report.notes.push_back("layer " + std::to_string(n) + " '" + l.name + "' is dense and has no DOR; omitted");
      continue;
    }
    report.entries.push_back({n, l.name, l.kind, degree_of_redundancy(l), 0});
  }
  const auto order = report.descending();
  for (std::size_t r = 0; r < order.size(); ++r)
    for (auto& e : report.entries)
      if (e.layer == order[r]) e.rank = static_cast<int>(r) + 1;
  return report;
}

}  // namespace binplan
