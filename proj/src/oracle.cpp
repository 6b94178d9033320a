#include "binplan/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "binplan/error.hpp"
#include "binplan/parallel.hpp"
#include "binplan/rng.hpp"

namespace binplan {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Scaling scaling) { return scaling == Scaling::shared ? "shared" : "per_column"; }

Scaling parse_scaling(const std::string& text) {
  if (text == "per_column") return Scaling::per_column;
  if (text == "shared") return Scaling::shared;
  throw ContractViolation("unknown scaling mode '" + text + "' (expected per_column or shared)");
}

namespace {

// Bit i set in a mask means b_i = -1.
VectorXd signs_from_mask(std::uint64_t mask, Index n) {
  VectorXd b(n);
  for (Index i = 0; i < n; ++i) b[i] = (mask >> i) & 1U ? -1.0 : 1.0;
  return b;
}

double error_for(const MatrixXd& d, const VectorXd& t, std::uint64_t mask, double alpha) {
  return (t - alpha * (d * signs_from_mask(mask, d.cols()))).norm();
}

double best_alpha(const MatrixXd& d, const VectorXd& t, std::uint64_t mask) {
  const VectorXd v = d * signs_from_mask(mask, d.cols());
  const double q = v.squaredNorm();
  return q > 0.0 ? std::max(0.0, t.dot(v) / q) : 0.0;
}

struct HullPoint {
  double p;  // <t, D b>
  double q;  // |D b|^2
  std::uint64_t mask;
};

// Vertices of the lower convex hull of (p, q), p >= 0, from the min-q vertex
// rightwards: exactly the points that minimize q a^2 - 2 p a for some a >= 0.
void compress_hull(std::vector<HullPoint>& pts) {
  std::stable_sort(pts.begin(), pts.end(), [](const HullPoint& a, const HullPoint& b) {
    return a.p < b.p || (a.p == b.p && a.q < b.q);
  });
  std::vector<HullPoint> hull;
  hull.reserve(pts.size());
  for (const auto& pt : pts) {
    if (!hull.empty() && hull.back().p == pt.p) continue;
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      const double cross = (a.p - o.p) * (pt.q - o.q) - (a.q - o.q) * (pt.p - o.p);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(pt);
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < hull.size(); ++i)
    if (hull[i].q <= hull[start].q) start = i;
  pts.assign(hull.begin() + static_cast<std::ptrdiff_t>(start), hull.end());
}

// Gray-code walk over the low bits of one chunk of the sign space. The
// visitor sees (mask, q, p) where p holds <t_j, D b> for every column.
template <typename Visit>
void walk_chunk(const MatrixXd& gram, const MatrixXd& proj, int low_bits, std::uint64_t chunk, Visit&& visit) {
  const Index n = gram.rows();
  std::uint64_t mask = chunk << low_bits;
  VectorXd b = signs_from_mask(mask, n);
  VectorXd u = gram * b;
  double q = b.dot(u);
  VectorXd p = proj.transpose() * b;
  visit(mask, q, p);
  const std::uint64_t steps = std::uint64_t{1} << low_bits;
  for (std::uint64_t s = 1; s < steps; ++s) {
    const int m = std::countr_zero(s);
    const double delta = -2.0 * b[m];
    q += 2.0 * delta * u[m] + delta * delta * gram(m, m);
    u.noalias() += delta * gram.col(m);
    p.noalias() += delta * proj.row(m).transpose();
    b[m] = -b[m];
    mask ^= std::uint64_t{1} << m;
    visit(mask, q, p);
  }
}

struct Layout {
  int low_bits;
  std::size_t chunks;
};

Layout chunk_layout(Index c) {
  // Fixed partition (independent of the worker count) keeps results bit-identical.
  const int top = static_cast<int>(std::min<Index>(c, 6));
  return {static_cast<int>(c) - top, std::size_t{1} << top};
}

void check_problem(const MatrixXd& d, const MatrixXd& targets, int cap) {
  if (cap < 1 || cap > kMaxEnumerationCap)
    throw ContractViolation("enumeration cap must lie in 1.." + std::to_string(kMaxEnumerationCap));
  if (d.cols() < 1 || d.rows() < 1) throw ContractViolation("lowered input must be non-empty");
  if (targets.rows() != d.rows())
    throw ContractViolation("target length " + std::to_string(targets.rows()) + " does not match s_i = " +
                            std::to_string(d.rows()));
  if (d.cols() > cap)
    throw CapExceeded("c_i = " + std::to_string(d.cols()) + " needs 2^" + std::to_string(d.cols()) +
                      " sign patterns, above the enumeration cap of " + std::to_string(cap) +
                      "; lower c_i (or raise the cap)");
}

VectorXd per_column_errors(const MatrixXd& d, const MatrixXd& targets) {
  const Index cols = targets.cols();
  const MatrixXd gram = d.transpose() * d;
  const MatrixXd proj = d.transpose() * targets;
  const Layout layout = chunk_layout(d.cols());

  struct Best {
    std::vector<double> score;
    std::vector<std::uint64_t> mask;
  };
  std::vector<Best> best(layout.chunks);
  parallel_for(layout.chunks, [&](std::size_t chunk) {
    Best local{std::vector<double>(static_cast<std::size_t>(cols), -1.0),
               std::vector<std::uint64_t>(static_cast<std::size_t>(cols), 0)};
    walk_chunk(gram, proj, layout.low_bits, chunk, [&](std::uint64_t mask, double q, const VectorXd& p) {
      for (Index j = 0; j < cols; ++j) {
        // |t|^2 - |t - alpha D b|^2 at the optimal alpha >= 0.
        const double score = (p[j] > 0.0 && q > 0.0) ? p[j] * p[j] / q : 0.0;
        if (score > local.score[static_cast<std::size_t>(j)]) {
          local.score[static_cast<std::size_t>(j)] = score;
          local.mask[static_cast<std::size_t>(j)] = mask;
        }
      }
    });
    best[chunk] = std::move(local);
  });

  VectorXd errors(cols);
  for (Index j = 0; j < cols; ++j) {
    const auto js = static_cast<std::size_t>(j);
    std::size_t winner = 0;
    for (std::size_t c = 1; c < layout.chunks; ++c)
      if (best[c].score[js] > best[winner].score[js]) winner = c;
    const std::uint64_t mask = best[winner].mask[js];
    const VectorXd t = targets.col(j);
    errors[j] = error_for(d, t, mask, best_alpha(d, t, mask));
  }
  return errors;
}

VectorXd shared_scale_errors(const MatrixXd& d, const MatrixXd& targets) {
  const Index cols = targets.cols();
  const auto ucols = static_cast<std::size_t>(cols);
  const MatrixXd gram = d.transpose() * d;
  const MatrixXd proj = d.transpose() * targets;
  const Layout layout = chunk_layout(d.cols());
  constexpr std::size_t kBuffer = 8192;

  std::vector<std::vector<std::vector<HullPoint>>> chunk_hulls(layout.chunks);
  parallel_for(layout.chunks, [&](std::size_t chunk) {
    std::vector<std::vector<HullPoint>> hulls(ucols);
    walk_chunk(gram, proj, layout.low_bits, chunk, [&](std::uint64_t mask, double q, const VectorXd& p) {
      for (std::size_t j = 0; j < ucols; ++j) {
        // (p, q) and its negation share q; only p >= 0 can be optimal for alpha >= 0.
        if (p[static_cast<Index>(j)] < 0.0) continue;
        hulls[j].push_back({p[static_cast<Index>(j)], q, mask});
        if (hulls[j].size() >= kBuffer) compress_hull(hulls[j]);
      }
    });
    for (auto& h : hulls) compress_hull(h);
    chunk_hulls[chunk] = std::move(hulls);
  });

  std::vector<std::vector<HullPoint>> hulls(ucols);
  for (std::size_t j = 0; j < ucols; ++j) {
    for (auto& ch : chunk_hulls) hulls[j].insert(hulls[j].end(), ch[j].begin(), ch[j].end());
    compress_hull(hulls[j]);
  }

  // Each column's envelope min_b (q a^2 - 2 p a) is quadratic between the
  // breakpoints where its active hull vertex changes.
  std::vector<double> breaks;
  for (const auto& h : hulls)
    for (std::size_t k = 0; k + 1 < h.size(); ++k)
      if (h[k + 1].q > h[k].q) breaks.push_back(2.0 * (h[k + 1].p - h[k].p) / (h[k + 1].q - h[k].q));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const auto active = [&](const std::vector<HullPoint>& h, double alpha) {
    std::size_t pick = 0;
    double best = h[0].q * alpha * alpha - 2.0 * h[0].p * alpha;
    for (std::size_t k = 1; k < h.size(); ++k) {
      const double v = h[k].q * alpha * alpha - 2.0 * h[k].p * alpha;
      if (v < best) {
        best = v;
        pick = k;
      }
    }
    return pick;
  };
  const auto objective = [&](double alpha) {
    double total = 0.0;
    for (const auto& h : hulls) {
      const auto& v = h[active(h, alpha)];
      total += v.q * alpha * alpha - 2.0 * v.p * alpha;
    }
    return total;
  };

  double best_alpha_shared = 0.0;
  double best_value = 0.0;  // objective(0), relative to sum |t_j|^2
  for (std::size_t i = 0; i <= breaks.size(); ++i) {
    const double lo = i == 0 ? 0.0 : breaks[i - 1];
    const double hi = i < breaks.size() ? breaks[i] : std::numeric_limits<double>::infinity();
    const double probe = std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi);
    double sum_p = 0.0;
    double sum_q = 0.0;
    for (const auto& h : hulls) {
      const auto& v = h[active(h, probe)];
      sum_p += v.p;
      sum_q += v.q;
    }
    if (sum_q <= 0.0) continue;
    const double alpha = std::clamp(sum_p / sum_q, lo, hi);
    const double value = objective(alpha);
    if (value < best_value) {
      best_value = value;
      best_alpha_shared = alpha;
    }
  }

  VectorXd errors(cols);
  for (std::size_t j = 0; j < ucols; ++j) {
    const auto& h = hulls[j];
    errors[static_cast<Index>(j)] =
        error_for(d, targets.col(static_cast<Index>(j)), h[active(h, best_alpha_shared)].mask, best_alpha_shared);
  }
  return errors;
}

}  // namespace

double min_binarization_error(const MatrixXd& lowered_input, const VectorXd& target, int cap) {
  return min_binarization_errors(lowered_input, target, Scaling::per_column, cap)[0];
}

VectorXd min_binarization_errors(const MatrixXd& lowered_input, const MatrixXd& targets, Scaling scaling, int cap) {
  check_problem(lowered_input, targets, cap);
  if (targets.cols() < 1) return VectorXd();
  return scaling == Scaling::shared ? shared_scale_errors(lowered_input, targets)
                                    : per_column_errors(lowered_input, targets);
}

void OracleConfig::validate() const {
  if (s_i < 1) throw ContractViolation("oracle s_i must be >= 1");
  if (c_i_values.empty()) throw ContractViolation("oracle needs at least one c_i value");
  if (trials < 1) throw ContractViolation("oracle trials must be >= 1");
  if (columns < 1) throw ContractViolation("oracle columns must be >= 1");
  if (cap < 1 || cap > kMaxEnumerationCap)
    throw ContractViolation("enumeration cap must lie in 1.." + std::to_string(kMaxEnumerationCap));
  for (Index c : c_i_values) {
    if (c < 1) throw ContractViolation("oracle c_i values must be >= 1");
    if (c > cap)
      throw CapExceeded("c_i = " + std::to_string(c) + " is above the enumeration cap of " + std::to_string(cap) +
                        "; lower c_i (or raise the cap)");
  }
}

bool OracleResult::operator==(const OracleResult& other) const {
  if (rows.size() != other.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = other.rows[i];
    if (a.c_i != b.c_i || a.dor != b.dor || a.mean_error != b.mean_error || a.std_error != b.std_error ||
        a.trials != b.trials)
      return false;
  }
  return true;
}

OracleResult run_oracle(const OracleConfig& config) {
  config.validate();
  OracleResult result;
  for (Index c : config.c_i_values) {
    std::vector<double> trial_errors(static_cast<std::size_t>(config.trials));
    for (int trial = 0; trial < config.trials; ++trial) {
      auto engine = make_engine(config.seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(trial)});
      MatrixXd d(config.s_i, c);
      fill_normal(d, engine);
      MatrixXd targets(config.s_i, config.columns);
      fill_normal(targets, engine);
      targets.colwise().normalize();
      trial_errors[static_cast<std::size_t>(trial)] =
          min_binarization_errors(d, targets, config.scaling, config.cap).mean();
    }
    OracleRow row;
    row.c_i = c;
    row.dor = static_cast<std::int64_t>(c) - static_cast<std::int64_t>(config.s_i);
    row.trials = config.trials;
    const Eigen::Map<const VectorXd> errs(trial_errors.data(), config.trials);
    row.mean_error = errs.mean();
    row.std_error =
        config.trials > 1 ? std::sqrt((errs.array() - row.mean_error).square().sum() / (config.trials - 1)) : 0.0;
    result.rows.push_back(row);
  }
  return result;
}

std::string to_csv(const OracleResult& result, const OracleConfig& config) {
  std::ostringstream os;
  os << "# s_i=" << config.s_i << " trials=" << config.trials << " columns=" << config.columns
     << " seed=" << config.seed << " scaling=" << to_string(config.scaling) << " cap=" << config.cap << '\n';
  os << "ci,dor,mean_error,std_error,trials\n";
  char buf[64];
  for (const auto& r : result.rows) {
    os << r.c_i << ',' << r.dor << ',';
    std::snprintf(buf, sizeof buf, "%.9g", r.mean_error);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.9g", r.std_error);
    os << buf << ',' << r.trials << '\n';
  }
  return os.str();
}

}  // namespace binplan
