#pragma once

#include <random>
#include <string>

#include "binplan/tensor.hpp"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(BINPLAN_FIXTURE_DIR) + "/" + name; }
inline std::string data_file(const std::string& name) { return std::string(BINPLAN_TEST_DATA_DIR) + "/" + name; }

inline binplan::TensorXd random_tensor(binplan::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  binplan::TensorXd t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (binplan::Index i = 0; i < t.size(); ++i) t.flat()[i] = u(rng);
  return t;
}

inline binplan::Index pick(std::mt19937_64& rng, binplan::Index lo, binplan::Index hi) {
  return std::uniform_int_distribution<binplan::Index>(lo, hi)(rng);
}

}  // namespace testing
