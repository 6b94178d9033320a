#include "binplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "binplan/error.hpp"
#include "binplan/rng.hpp"

namespace binplan {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

constexpr std::uint64_t kTagResample = 0x7265;
constexpr std::uint64_t kTagDirections = 0x646972;
constexpr std::uint64_t kTagPatches = 0x706174;
constexpr std::uint64_t kTagScale = 0x7363;

MatrixXd resample(const MatrixXd& rows, Index count, std::uint64_t seed) {
  auto engine = make_engine(seed, {kTagResample, static_cast<std::uint64_t>(rows.rows()),
                                   static_cast<std::uint64_t>(count)});
  std::uniform_int_distribution<Index> pick(0, rows.rows() - 1);
  MatrixXd out(count, rows.cols());
  for (Index i = 0; i < count; ++i) out.row(i) = rows.row(pick(engine));
  return out;
}

struct ImageLayout {
  Index channels;
  Index side;
};

ImageLayout image_layout(Index dim) {
  const auto square_side = [](Index n) -> Index {
    const auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
  };
  if (const Index r = square_side(dim); r > 0) return {1, r};
  if (dim % 3 == 0)
    if (const Index r = square_side(dim / 3); r > 0) return {3, r};
  throw ContractViolation("sample dimension " + std::to_string(dim) +
                          " is not a square image (expected r^2 or 3 r^2 values)");
}

// Average-pools one flattened (channels, side, side) image by `factor`.
Eigen::VectorXd pool(const Eigen::Ref<const Eigen::RowVectorXd>& image, const ImageLayout& layout, Index factor) {
  const Index side = layout.side / factor;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.channels * side * side);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (Index c = 0; c < layout.channels; ++c)
    for (Index y = 0; y < layout.side; ++y)
      for (Index x = 0; x < layout.side; ++x)
        out[(c * side + y / factor) * side + x / factor] += inv * image[(c * layout.side + y) * layout.side + x];
  return out;
}

MatrixXd patch_descriptors(const SampleSet& set, const ImageLayout& layout, int factor, const SwdConfig& cfg) {
  const Index side = layout.side / factor;
  const Index ps = cfg.patch_size;
  const Index per_channel = ps * ps;
  MatrixXd desc(set.size() * cfg.patches_per_image, layout.channels * per_channel);
  std::uniform_int_distribution<Index> corner(0, side - ps);
  for (Index i = 0; i < set.size(); ++i) {
    const Eigen::VectorXd img = pool(set.vectors().row(i), layout, factor);
    // Positions depend only on (seed, factor, image index), never on which set.
    auto engine = make_engine(cfg.seed, {kTagPatches, static_cast<std::uint64_t>(factor),
                                         static_cast<std::uint64_t>(i)});
    for (int k = 0; k < cfg.patches_per_image; ++k) {
      const Index y0 = corner(engine);
      const Index x0 = corner(engine);
      auto row = desc.row(i * cfg.patches_per_image + k);
      for (Index c = 0; c < layout.channels; ++c) {
        auto block = row.segment(c * per_channel, per_channel);
        for (Index y = 0; y < ps; ++y)
          for (Index x = 0; x < ps; ++x) block[y * ps + x] = img[(c * side + y0 + y) * side + x0 + x];
        if (cfg.normalize) {
          const double mean = block.mean();
          block.array() -= mean;
          const double sd = std::sqrt(block.squaredNorm() / static_cast<double>(per_channel));
          if (sd > 1e-12)
            block /= sd;
          else
            block.setZero();
        }
      }
    }
  }
  return desc;
}

}  // namespace

SampleSet::SampleSet(MatrixXd vectors) : vectors_(std::move(vectors)) {
  if (vectors_.rows() < 1 || vectors_.cols() < 1) throw ContractViolation("sample set must be non-empty");
}

void SwdConfig::validate() const {
  if (projections < 1) throw ContractViolation("swd needs at least one projection");
  if (patch_size < 1) throw ContractViolation("patch size must be >= 1");
  if (patches_per_image < 1) throw ContractViolation("patches per image must be >= 1");
  for (int f : resolutions)
    if (f < 1) throw ContractViolation("resolution factors must be >= 1");
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty())
    throw ContractViolation("wasserstein1 needs two non-empty samples of equal size");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

Eigen::MatrixXd projection_directions(Index dim, int projections, std::uint64_t seed) {
  if (dim < 1 || projections < 1) throw ContractViolation("projection directions need dim >= 1 and projections >= 1");
  auto engine = make_engine(seed, {kTagDirections, static_cast<std::uint64_t>(dim)});
  MatrixXd directions(dim, projections);
  for (Index p = 0; p < projections; ++p) {
    auto col = directions.col(p);
    do {
      fill_normal(col, engine);
    } while (col.norm() == 0.0);
    col /= col.norm();
  }
  return directions;
}

double sliced_wasserstein(const SampleSet& a, const SampleSet& b, const MatrixXd& directions, std::uint64_t seed) {
  if (a.dim() != b.dim())
    throw ContractViolation("swd dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  if (directions.rows() != a.dim() || directions.cols() < 1)
    throw ContractViolation("directions must be " + std::to_string(a.dim()) + " x projections");
  const Index n = std::min(a.size(), b.size());
  const MatrixXd xa = a.size() > n ? resample(a.vectors(), n, seed) : a.vectors();
  const MatrixXd xb = b.size() > n ? resample(b.vectors(), n, seed) : b.vectors();

  const MatrixXd pa = xa * directions;
  const MatrixXd pb = xb * directions;
  double total = 0.0;
  std::vector<double> ua(static_cast<std::size_t>(n));
  std::vector<double> ub(static_cast<std::size_t>(n));
  for (Index p = 0; p < directions.cols(); ++p) {
    Eigen::VectorXd::Map(ua.data(), n) = pa.col(p);
    Eigen::VectorXd::Map(ub.data(), n) = pb.col(p);
    total += wasserstein1(ua, ub);
  }
  return total / static_cast<double>(directions.cols());
}

double swd(const SampleSet& a, const SampleSet& b, const SwdConfig& config) {
  config.validate();
  if (a.dim() != b.dim())
    throw ContractViolation("swd dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  return sliced_wasserstein(a, b, projection_directions(a.dim(), config.projections, config.seed), config.seed);
}

MultiscaleSwd multiscale_swd(const SampleSet& a, const SampleSet& b, const SwdConfig& config) {
  config.validate();
  if (a.dim() != b.dim())
    throw ContractViolation("swd dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  const ImageLayout layout = image_layout(a.dim());
  MultiscaleSwd result;
  for (int factor : config.resolutions) {
    if (layout.side % factor != 0 || layout.side / factor < config.patch_size)
      throw ContractViolation("resolution factor " + std::to_string(factor) + " does not fit " +
                              std::to_string(layout.side) + "x" + std::to_string(layout.side) + " images with " +
                              std::to_string(config.patch_size) + "x" + std::to_string(config.patch_size) +
                              " patches");
    SwdConfig scale_cfg = config;
    scale_cfg.seed = derive_seed(config.seed, {kTagScale, static_cast<std::uint64_t>(factor)});
    const SampleSet da(patch_descriptors(a, layout, factor, config));
    const SampleSet db(patch_descriptors(b, layout, factor, config));
    result.scales.push_back({factor, layout.side / factor, swd(da, db, scale_cfg)});
  }
  double total = 0.0;
  for (const auto& s : result.scales) total += s.swd;
  result.average = result.scales.empty() ? 0.0 : total / static_cast<double>(result.scales.size());
  return result;
}

}  // namespace binplan
