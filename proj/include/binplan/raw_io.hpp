#pragma once

// Raw array files: `<file>` holds little-endian IEEE-754 float64 values in
// row-major order; `<file>.json` is a sidecar {"dtype": "f64le", "shape": [...]}.
// A weight directory holds layer1.raw, layer2.raw, ... with sidecars.

#include <filesystem>
#include <vector>

#include "binplan/tensor.hpp"

namespace binplan {

TensorXd read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const TensorXd& tensor);

std::vector<TensorXd> read_weight_dir(const std::filesystem::path& dir, int layers);
void write_weight_dir(const std::filesystem::path& dir, const std::vector<TensorXd>& weights);

}  // namespace binplan
