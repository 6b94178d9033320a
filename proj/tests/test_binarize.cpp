#include "binplan/binarize.hpp"
#include "binplan/deconv.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace binplan;

namespace {

TensorXd slice(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return TensorXd({v.size(), 1, 1, 1}, v);
}

// Weights of output channel c as a vector.
Eigen::VectorXd channel(const TensorXd& w, Index c) {
  const Index ci = w.dim(0), co = w.dim(1), k = w.size() / (ci * co);
  Eigen::VectorXd out(ci * k);
  for (Index i = 0; i < ci; ++i)
    for (Index j = 0; j < k; ++j) out[i * k + j] = w.flat()[(i * co + c) * k + j];
  return out;
}

double best_grid_error(const Eigen::VectorXd& w, const Eigen::VectorXd& b) {
  const double hi = 2.0 * w.cwiseAbs().maxCoeff();
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= 999; ++g) best = std::min(best, (w - (hi * g / 999.0) * b).norm());
  return best;
}

}  // namespace

TEST_CASE("worked channel slice") {
  const BinarizedWeights bw = binarize_weights(slice({0.5, -0.3, 0.1, -0.1}));
  CHECK(bw.scales[0] == doctest::Approx(0.25).epsilon(1e-15));
  Eigen::VectorXd signs(4);
  signs << 1, -1, 1, -1;
  CHECK(bw.signs.flat() == signs);
  const Eigen::VectorXd w = slice({0.5, -0.3, 0.1, -0.1}).flat();
  CHECK((w - 0.25 * signs).norm() <= best_grid_error(w, signs) + 1e-15);
}

TEST_CASE("degenerate slices") {
  const TensorXd c = TensorXd::constant({3, 2, 2, 2}, 0.7);
  CHECK(reconstruct(binarize_weights(c)) == c);
  CHECK(channel_error_sq(c, binarize_weights(c)).cwiseAbs().maxCoeff() <= 1e-12);

  const BinarizedWeights z = binarize_weights(TensorXd({4, 1, 1, 1}));
  CHECK(z.scales[0] == 0.0);
  CHECK(z.signs.flat() == Eigen::VectorXd::Ones(4));
  CHECK(reconstruct(z).flat().isZero(0.0));

  std::mt19937_64 rng(1);
  BinarizedWeights zero_scale = binarize_weights(testing::random_tensor({2, 3, 2, 2}, rng));
  zero_scale.scales.setZero();
  CHECK(reconstruct(zero_scale).flat().isZero(0.0));
}

TEST_CASE("sign(0) is +1 and scale is per output channel") {
  Eigen::VectorXd v(4);
  v << 0.0, -2.0, 1.0, 0.0;  // (c_i=2, c_o=2): channel 0 = {0, 1}, channel 1 = {-2, 0}
  const BinarizedWeights bw = binarize_weights(TensorXd({2, 2}, v));
  Eigen::VectorXd signs(4);
  signs << 1, -1, 1, 1;
  CHECK(bw.signs.flat() == signs);
  CHECK(bw.scales[0] == 0.5);
  CHECK(bw.scales[1] == 1.0);
}

TEST_CASE("property: mean |w| beats a 1000-point scale grid and matches the closed form") {
  std::mt19937_64 rng(314);
  for (int rep = 0; rep < 60; ++rep) {
    const Index ci = testing::pick(rng, 1, 12), co = testing::pick(rng, 1, 6), k = testing::pick(rng, 1, 4);
    const TensorXd w = testing::random_tensor({ci, co, k, k}, rng, -2.0, 2.0);
    const BinarizedWeights bw = binarize_weights(w);
    const TensorXd rec = reconstruct(bw);
    const Eigen::VectorXd err_sq = channel_error_sq(w, bw);
    for (Index c = 0; c < co; ++c) {
      const Eigen::VectorXd wc = channel(w, c);
      const Eigen::VectorXd bc = channel(bw.signs, c);
      const double alpha = bw.scales[c];
      CHECK(alpha == doctest::Approx(wc.cwiseAbs().mean()).epsilon(1e-14));
      const double err = (wc - channel(rec, c)).norm();
      CHECK(err <= best_grid_error(wc, bc) + 1e-12);
      const double closed = wc.squaredNorm() - static_cast<double>(wc.size()) * alpha * alpha;
      CHECK(std::abs(err * err - closed) <= 1e-9);
      CHECK(std::abs(err_sq[c] - closed) <= 1e-9);
    }
  }
}

TEST_CASE("property: binarizing a reconstruction is a fixed point") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    const TensorXd w = testing::random_tensor({testing::pick(rng, 1, 9), testing::pick(rng, 1, 5), 3, 3}, rng);
    const BinarizedWeights a = binarize_weights(w);
    const BinarizedWeights b = binarize_weights(reconstruct(a));
    CHECK(b.signs == a.signs);
    CHECK((b.scales - a.scales).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("weight shapes, seeded weights and shape checks") {
  const NetworkSpec net = load_network(testing::fixture("dcgan_g.json"));
  CHECK(weight_shape(net.layer(1)) == Shape{512, 256, 5, 5});
  const auto w = random_weights(net, 3);
  REQUIRE(w.size() == 4);
  CHECK(w[3].shape() == Shape{64, 3, 5, 5});
  CHECK(w[0] == random_weights(net, 3)[0]);
  CHECK(!(w[0] == random_weights(net, 4)[0]));
  const double sd = std::sqrt(w[0].flat().squaredNorm() / static_cast<double>(w[0].size()));
  CHECK(sd == doctest::Approx(0.02).epsilon(0.01));
  std::vector<TensorXd> wrong = w;
  wrong[2] = TensorXd({1, 1, 1, 1});
  CHECK_THROWS_AS(check_weights(net, wrong), ContractViolation);
}

TEST_CASE("forward with a plan binarizes exactly the planned layers") {
  const NetworkSpec net = load_network(testing::data_file("toy.json"));
  std::mt19937_64 rng(8);
  const std::vector<TensorXd> w = {testing::random_tensor({6, 4, 4, 4}, rng),
                                   testing::random_tensor({4, 1, 4, 4}, rng)};
  const TensorXd x = testing::random_tensor({6, 2, 2}, rng);

  const auto run = [&](const TensorXd& w1, const TensorXd& w2) {
    return deconv_direct(deconv_direct(x, w1, 2, 1), w2, 2, 1);
  };
  const TensorXd b1 = reconstruct(binarize_weights(w[0]));
  const TensorXd b2 = reconstruct(binarize_weights(w[1]));

  const TensorXd fp = forward_with_plan(net, w, x, {});
  CHECK(fp.shape() == Shape{1, 8, 8});
  CHECK((fp.flat() - run(w[0], w[1]).flat()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((forward_with_plan(net, w, x, {1}).flat() - run(b1, w[1]).flat()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((forward_with_plan(net, w, x, {2}).flat() - run(w[0], b2).flat()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((forward_with_plan(net, w, x, {1, 2}).flat() - run(b1, b2).flat()).cwiseAbs().maxCoeff() <= 1e-12);

  const auto acts = forward_activations(net, w, x.reshaped({1, 6, 2, 2}));
  REQUIRE(acts.size() == 3);
  CHECK(acts[2].shape() == Shape{1, 1, 8, 8});
  CHECK((acts[2].flat() - fp.flat()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(forward_with_plan(net, w, x, {3}), ContractViolation);
}

TEST_CASE("generator plans run end to end") {
  const NetworkSpec net = load_network(testing::fixture("dcgan_g.json"));
  const auto w = random_weights(net, 1);
  std::mt19937_64 rng(2);
  const TensorXd z = testing::random_tensor({512, 4, 4}, rng);
  const TensorXd fp = forward_with_plan(net, w, z, {});
  CHECK(fp.shape() == Shape{3, 64, 64});
  const TensorXd f = forward_with_plan(net, w, z, {1, 2, 3});
  const TensorXd g = forward_with_plan(net, w, z, {1, 2, 3, 4});
  CHECK(f.shape() == fp.shape());
  CHECK((f.flat() - fp.flat()).norm() > 0.0);
  CHECK((g.flat() - f.flat()).norm() > 0.0);
}

TEST_CASE("property: fitted binarization never loses to BWN on its calibration inputs") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 12; ++rep) {
    const Index ci = testing::pick(rng, 2, 24), co = testing::pick(rng, 1, 4), k = testing::pick(rng, 1, 3);
    const TensorXd w = testing::random_tensor({ci, co, k, k}, rng);
    const Eigen::MatrixXd x =
        testing::random_tensor({testing::pick(rng, 1, 40), ci}, rng).flat().reshaped(ci, Eigen::AutoSize).transpose();
    const auto out_err = [&](const TensorXd& approx) {
      return (x * (lower_weights(w) - lower_weights(approx))).norm();
    };
    const BinarizedWeights fit = fit_binarized(w, x);
    for (Index i = 0; i < fit.signs.size(); ++i) CHECK(std::abs(fit.signs.flat()[i]) == 1.0);
    CHECK(fit.scales.minCoeff() >= 0.0);
    CHECK(out_err(reconstruct(fit)) <= out_err(reconstruct(binarize_weights(w))) * (1.0 + 1e-12));
  }
}
