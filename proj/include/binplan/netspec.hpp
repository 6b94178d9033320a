#pragma once

// Network architecture descriptions and the `binplan/1` JSON format.
//
//   {
//     "format": "binplan/1",
//     "name": "...",
//     "latent_dim": 100,                       (optional)
//     "layers": [
//       {"name": "CONV1", "kind": "deconv", "c_i": 512, "c_o": 256,
//        "h_i": 4, "w_i": 4, "h_k": 5, "w_k": 5, "stride": 2,
//        "padding": 2, "output_padding": 1,    (optional, default 0)
//        "binarizable_hint": true}             (optional)
//     ]
//   }
//
// Output spatial dims are always derived from the geometry, never read.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "binplan/deconv.hpp"

namespace binplan {

inline constexpr std::string_view kNetworkFormat = "binplan/1";

enum class LayerKind { deconv, conv, dense };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::deconv;
  Index c_i = 1;
  Index c_o = 1;
  Index h_i = 1;
  Index w_i = 1;
  Index h_k = 1;
  Index w_k = 1;
  Index stride = 1;
  Index padding = 0;
  Index output_padding = 0;
  std::optional<bool> binarizable_hint;

  Index s_i() const { return h_i * w_i; }
  Index r_o() const { return c_o * h_k * w_k; }
  Index h_o() const;
  Index w_o() const;

  /// Number of weights (c_i * c_o * h_k * w_k).
  Index weight_count() const { return c_i * c_o * h_k * w_k; }
  /// Multiplies per forward sample.
  Index multiply_count() const;

  bool is_spatial() const { return kind != LayerKind::dense; }
  DeconvGeometry deconv_geometry() const;

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::optional<Index> latent_dim;

  int layer_count() const { return static_cast<int>(layers.size()); }
  /// 1-based access, matching the layer numbers used in plans.
  const LayerSpec& layer(int number) const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Throws ValidationError naming the invariant and the offending layer.
void validate(const LayerSpec& layer);
void validate(const NetworkSpec& net);

NetworkSpec parse_network(std::string_view text);
NetworkSpec load_network(const std::filesystem::path& path);

/// Canonical form: 2-space indent, keys sorted, trailing newline.
std::string emit_network(const NetworkSpec& net);

ScatterMap im2col_output(const LayerSpec& layer);

}  // namespace binplan
