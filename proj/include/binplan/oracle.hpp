#pragma once

// Exhaustive minimum binarization error of a lowered deconvolution column:
//
//   min over b in {-1,+1}^c_i and alpha >= 0 of | t - alpha * D b |_2
//
// D is s_i x c_i (the lowered input), t one target output column. The sign
// space is walked in Gray-code order so each step costs O(c_i + columns);
// alpha is solved in closed form per sign pattern, so the result is exact.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace binplan {

inline constexpr int kDefaultEnumerationCap = 24;
inline constexpr int kMaxEnumerationCap = 40;

enum class Scaling {
  per_column,  // each target column gets its own alpha
  shared,      // one alpha for all target columns, minimizing the summed squared error
};

std::string to_string(Scaling scaling);
Scaling parse_scaling(const std::string& text);

double min_binarization_error(const Eigen::MatrixXd& lowered_input, const Eigen::VectorXd& target,
                              int cap = kDefaultEnumerationCap);

/// Per-column errors for a block of targets (s_i x columns).
Eigen::VectorXd min_binarization_errors(const Eigen::MatrixXd& lowered_input, const Eigen::MatrixXd& targets,
                                        Scaling scaling, int cap = kDefaultEnumerationCap);

struct OracleConfig {
  Eigen::Index s_i = 20;
  std::vector<Eigen::Index> c_i_values;
  int trials = 30;
  int columns = 4;
  std::uint64_t seed = 0;
  Scaling scaling = Scaling::per_column;
  int cap = kDefaultEnumerationCap;

  void validate() const;
};

struct OracleRow {
  Eigen::Index c_i = 0;
  std::int64_t dor = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

struct OracleResult {
  std::vector<OracleRow> rows;

  bool operator==(const OracleResult& other) const;
};

/// For each c_i: D ~ N(0, 1)^(s_i x c_i), targets ~ N(0, 1) normalized to
/// unit length and independent of D. Trial t of c_i draws from the stream
/// (seed, c_i, t). Each trial contributes its mean error over columns.
OracleResult run_oracle(const OracleConfig& config);

/// "ci,dor,mean_error,std_error,trials", 9 significant digits, preceded by
/// '#' comment lines echoing the configuration.
std::string to_csv(const OracleResult& result, const OracleConfig& config);

}  // namespace binplan
