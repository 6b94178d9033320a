#pragma once

// Sliced Wasserstein distance between two sets of vectors, and a multi-scale
// variant over square images that compares distributions of local patches.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace binplan {

/// One sample per row.
class SampleSet {
 public:
  explicit SampleSet(Eigen::MatrixXd vectors);

  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  Eigen::Index size() const noexcept { return vectors_.rows(); }
  Eigen::Index dim() const noexcept { return vectors_.cols(); }

 private:
  Eigen::MatrixXd vectors_;
};

struct SwdConfig {
  int projections = 64;
  std::uint64_t seed = 0;
  /// Downsampling factors for multiscale_swd; 1 is full resolution.
  std::vector<int> resolutions = {1, 2, 4};
  int patch_size = 7;
  int patches_per_image = 64;
  /// Per-patch, per-channel standardization before projecting.
  bool normalize = true;

  void validate() const;
};

/// Exact 1-D Wasserstein-1 distance between two equal-size samples.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// `projections` seeded unit directions in R^dim, one per column.
Eigen::MatrixXd projection_directions(Eigen::Index dim, int projections, std::uint64_t seed);

/// Mean over the columns of `directions` of the 1-D Wasserstein-1 distance
/// between the projected samples. `seed` drives the equal-size resampling.
double sliced_wasserstein(const SampleSet& a, const SampleSet& b, const Eigen::MatrixXd& directions,
                          std::uint64_t seed);

/// Mean over `projections` random unit directions of the 1-D Wasserstein-1
/// distance between projected samples. Sets of different size are first
/// resampled (with replacement, seeded) down to the smaller size.
double swd(const SampleSet& a, const SampleSet& b, const SwdConfig& config);

struct ScaleSwd {
  int factor = 1;
  Eigen::Index resolution = 0;
  double swd = 0.0;
};

struct MultiscaleSwd {
  std::vector<ScaleSwd> scales;
  double average = 0.0;
};

/// Samples are flattened square images, (channels, r, r) row-major with
/// channels 1 or 3. Per resolution: average-pool by the factor, extract
/// patch_size^2 patches per channel at seeded positions, standardize, swd.
MultiscaleSwd multiscale_swd(const SampleSet& a, const SampleSet& b, const SwdConfig& config);

}  // namespace binplan
