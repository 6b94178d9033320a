#pragma once

// Seeded random streams. Every stochastic quantity is drawn from an engine
// keyed by (seed, tags...), so parallel work items get independent,
// reproducible streams regardless of scheduling.

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace binplan {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  return std::mt19937_64(derive_seed(seed, tags));
}

template <typename Derived>
void fill_normal(Eigen::DenseBase<Derived>& out, std::mt19937_64& engine, double mean = 0.0, double stdev = 1.0) {
  std::normal_distribution<double> dist(mean, stdev);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.coeffRef(i) = dist(engine);
}

}  // namespace binplan
