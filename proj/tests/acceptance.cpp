// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "binplan/binarize.hpp"
#include "binplan/deconv.hpp"
#include "binplan/metrics.hpp"
#include "binplan/oracle.hpp"
#include "binplan/planner.hpp"
#include "binplan/redundancy.hpp"
#include "binplan/savings.hpp"
#include "support.hpp"

using namespace binplan;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Tolerances and budgets.
constexpr double kDorRuntimeS = 1.0;
constexpr int kDeconvCases = 120;
constexpr double kDeconvTol = 1e-9;
constexpr double kDeconvRuntimeS = 30.0;
constexpr int kBwnSlices = 60;
constexpr int kBwnGrid = 1000;
constexpr double kBwnClosedFormTol = 1e-9;
constexpr int kOracleTrials = 30;
constexpr double kOracleRatio = 0.6;
constexpr int kOracleCap = 23;
constexpr double kOracleRuntimeS = 300.0;
constexpr int kBruteInstances = 20;
constexpr double kBruteTol = 1e-12;
constexpr double kInferenceRatio = 0.51515;
constexpr double kInferenceRatioTol = 1e-5;
constexpr double kReferenceInferenceSpeedup = 1.96;
constexpr double kReferenceTrainingSpeedup = 1.32;
constexpr double kSpeedupRelTol = 0.05;
constexpr double kReferenceMemorySaving = 25.81;
constexpr double kMemoryRelTol = 0.25;
constexpr double kSavingsRuntimeS = 1.0;
constexpr double kMockRuntimeS = 1.0;
constexpr int kOrderingSeeds = 10;
constexpr int kOrderingRequired = 8;
constexpr double kSwdTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// 1 ------------------------------------------------------------------------
Outcome dor_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dors = [](const char* file) {
    std::vector<std::int64_t> out;
    for (const auto& e : analyze(load_network(testing::fixture(file))).entries) out.push_back(e.dor);
    return out;
  };
  const auto g = dors("dcgan_g.json");
  const auto d = dors("dcgan_d.json");
  const double t = seconds_since(t0);
  const bool ok = g == std::vector<std::int64_t>{496, 192, -128, -960} &&
                  d == std::vector<std::int64_t>{11, 1472, 2944, 5888} && t < kDorRuntimeS;
  std::ostringstream os;
  os << "generator";
  for (auto v : g) os << ' ' << v;
  os << "; discriminator";
  for (auto v : d) os << ' ' << v;
  os << "; " << num(t, 3) << " s";
  return {ok, os.str()};
}

// 2 ------------------------------------------------------------------------
Outcome deconv_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  using testing::pick;
  double worst = 0.0;
  int cases = 0;
  while (cases < kDeconvCases) {
    const Index ci = pick(rng, 1, 32), co = pick(rng, 1, 32), h = pick(rng, 1, 16), w = pick(rng, 1, 16);
    const Index kh = pick(rng, 1, 7), kw = pick(rng, 1, 7), stride = pick(rng, 1, 2), pad = pick(rng, 0, 2);
    const Index op = stride > 1 ? pick(rng, 0, 1) : 0;
    const DeconvGeometry g{ci, co, h, w, kh, kw, stride, pad, op};
    if (g.out_h() < 1 || g.out_w() < 1) continue;
    const TensorXd x = testing::random_tensor({ci, h, w}, rng);
    const TensorXd k = testing::random_tensor({ci, co, kh, kw}, rng);
    const TensorXd a = deconv_direct(x, k, stride, pad, op);
    const TensorXd b = deconv_matrix(x, k, stride, pad, op);
    worst = std::max(worst, (a.flat() - b.flat()).cwiseAbs().maxCoeff());
    ++cases;
  }
  const double t = seconds_since(t0);
  return {worst <= kDeconvTol && t < kDeconvRuntimeS,
          std::to_string(cases) + " geometries, max |diff| " + num(worst, 3) + " (tol " + num(kDeconvTol) + "), " +
              num(t, 3) + " s"};
}

// 3 ------------------------------------------------------------------------
Outcome bwn_optimality() {
  std::mt19937_64 rng(77);
  bool ok = true;
  double worst_closed = 0.0;
  int beaten = 0;
  for (int rep = 0; rep < kBwnSlices; ++rep) {
    const Index n = testing::pick(rng, 1, 200);
    const TensorXd w = testing::random_tensor({n, 1, 1, 1}, rng, -3.0, 3.0);
    const BinarizedWeights bw = binarize_weights(w);
    const double alpha = bw.scales[0];
    const VectorXd& b = bw.signs.flat();
    const double err = (w.flat() - alpha * b).norm();
    const double hi = 2.0 * w.flat().cwiseAbs().maxCoeff();
    for (int g = 0; g < kBwnGrid; ++g) {
      const double a = hi * g / (kBwnGrid - 1);
      if ((w.flat() - a * b).norm() < err - 1e-15) ++beaten;
    }
    const double closed = w.flat().squaredNorm() - static_cast<double>(n) * alpha * alpha;
    worst_closed = std::max(worst_closed, std::abs(err * err - closed));
    worst_closed = std::max(worst_closed, std::abs(channel_error_sq(w, bw)[0] - closed));
  }
  ok = beaten == 0 && worst_closed <= kBwnClosedFormTol;
  return {ok, std::to_string(kBwnSlices) + " slices, grid points beating mean|w|: " + std::to_string(beaten) +
                  ", closed-form max diff " + num(worst_closed, 3)};
}

// 4 ------------------------------------------------------------------------
Outcome oracle_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  OracleConfig cfg;
  cfg.s_i = 20;
  cfg.c_i_values = {15, 17, 19, 21, 23};
  cfg.trials = kOracleTrials;
  cfg.seed = 2018;
  cfg.cap = kOracleCap;
  const OracleResult r = run_oracle(cfg);
  const double t = seconds_since(t0);
  bool decreasing = true;
  std::ostringstream os;
  os << "mean error";
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    os << " [dor " << r.rows[k].dor << "] " << num(r.rows[k].mean_error, 4);
    if (k > 0 && !(r.rows[k].mean_error < r.rows[k - 1].mean_error)) decreasing = false;
  }
  const double ratio = r.rows.back().mean_error / r.rows.front().mean_error;
  const double sq_ratio = ratio * ratio;
  os << "; strictly decreasing: " << (decreasing ? "yes" : "no") << "; err(+3)/err(-5) = " << num(ratio, 4)
     << " (need < " << kOracleRatio << "); squared-error ratio " << num(sq_ratio, 4) << " (diagnostic); "
     << num(t, 3) << " s";
  return {decreasing && ratio < kOracleRatio && t < kOracleRuntimeS, os.str()};
}

// 5 ------------------------------------------------------------------------
double naive_min_error(const MatrixXd& d, const VectorXd& t) {
  const Index c = d.cols();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = (std::uint64_t{1} << c); mask-- > 0;) {
    VectorXd y = VectorXd::Zero(d.rows());
    for (Index k = c; k-- > 0;) y += ((mask >> k) & 1 ? -1.0 : 1.0) * d.col(k);
    const double q = y.squaredNorm();
    const double a = q > 0.0 ? std::max(0.0, t.dot(y) / q) : 0.0;
    best = std::min(best, (t - a * y).norm());
  }
  return best;
}

Outcome brute_force_cross_check() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int rep = 0; rep < kBruteInstances; ++rep) {
    const Index s = testing::pick(rng, 1, 24), c = testing::pick(rng, 1, 12);
    const MatrixXd d = gaussian(s, c, rng);
    const VectorXd t = gaussian(s, 1, rng).col(0);
    worst = std::max(worst, std::abs(min_binarization_error(d, t) - naive_min_error(d, t)));
  }
  return {worst <= kBruteTol,
          std::to_string(kBruteInstances) + " instances, max |diff| " + num(worst, 3) + " (tol " + num(kBruteTol) + ")"};
}

// 6 ------------------------------------------------------------------------
Outcome savings_figures() {
  const auto t0 = std::chrono::steady_clock::now();
  const bool endpoints = memory_cost(4305600, 0) == 1.0 && memory_cost(4305600, 4305600) == 0.03125;
  const NetworkSpec net = load_network(testing::fixture("dcgan_g.json"));
  const SavingsReport r = estimate_plan(net, {1, 2, 3}, false);
  const SavingsReport dense = estimate_plan(net, {1, 2, 3}, true);
  const double t = seconds_since(t0);
  const bool inference = std::abs(r.inference_cost_ratio - kInferenceRatio) <= kInferenceRatioTol &&
                         std::abs(r.inference_speedup() - kReferenceInferenceSpeedup) <=
                             kSpeedupRelTol * kReferenceInferenceSpeedup;
  const bool training =
      std::abs(r.training_speedup() - kReferenceTrainingSpeedup) <= kSpeedupRelTol * kReferenceTrainingSpeedup;
  const bool memory = std::abs(r.memory_saving() - kReferenceMemorySaving) <= kMemoryRelTol * kReferenceMemorySaving;
  bool reported = !r.notes.empty() && !dense.notes.empty();
  reported = reported && r.notes.front().find("excluded") != std::string::npos;
  std::ostringstream os;
  os << "endpoints " << (endpoints ? "exact" : "WRONG") << "; inference ratio " << num(r.inference_cost_ratio, 6)
     << " (" << num(r.inference_speedup(), 4) << "x vs " << kReferenceInferenceSpeedup << "x); training "
     << num(r.training_speedup(), 4) << "x vs " << kReferenceTrainingSpeedup << "x; memory saving "
     << num(r.memory_saving(), 4) << "x vs " << kReferenceMemorySaving << "x ("
     << num(100.0 * std::abs(r.memory_saving() / kReferenceMemorySaving - 1.0), 3) << "% off; with projection "
     << num(dense.memory_saving(), 4) << "x, reported side by side); " << num(t, 3) << " s";
  return {endpoints && inference && training && memory && reported && t < kSavingsRuntimeS, os.str()};
}

// 7 ------------------------------------------------------------------------
class CountingEvaluator : public Evaluator {
 public:
  explicit CountingEvaluator(Evaluator& inner) : inner_(inner) {}
  double degradation(const NetworkSpec& net, std::span<const TensorXd> w, const LayerSet& plan) override {
    ++calls;
    return inner_.degradation(net, w, plan);
  }
  std::string name() const override { return inner_.name(); }
  int calls = 0;

 private:
  Evaluator& inner_;
};

Outcome algorithm_control_flow() {
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkSpec net = load_network(testing::fixture("dcgan_g.json"));
  const int bound = net.layer_count() + 1;
  MockEvaluator mock = MockEvaluator::from_list({0.01, 0.02, 0.05, 0.9});
  CountingEvaluator counted(mock);
  const BinarizationPlan p = plan_binarization(net, {}, counted, 0.1);
  const bool prefix = p.accepted == std::vector<int>{1, 2, 3};
  bool bound_ok = counted.calls <= bound;

  CountingEvaluator zero(mock);
  const BinarizationPlan empty = plan_binarization(net, {}, zero, 0.0);
  const bool empty_ok = empty.accepted.empty();

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int worst_calls = 0;
  for (int rep = 0; rep < 500; ++rep) {
    MockEvaluator m = MockEvaluator::from_list({u(rng), u(rng), u(rng), u(rng)});
    CountingEvaluator c(m);
    plan_binarization(net, {}, c, u(rng));
    worst_calls = std::max(worst_calls, c.calls);
  }
  bound_ok = bound_ok && worst_calls <= bound;
  const double t = seconds_since(t0);
  std::ostringstream os;
  os << "T=0.1 plan {";
  for (std::size_t k = 0; k < p.accepted.size(); ++k) os << (k ? "," : "") << p.accepted[k];
  os << "} with " << counted.calls << " calls; max calls over 500 random mocks " << worst_calls << " (bound " << bound
     << "); T=0 plan size " << empty.accepted.size() << "; " << num(t, 3) << " s";
  return {prefix && bound_ok && empty_ok && t < kMockRuntimeS, os.str()};
}

// 8 ------------------------------------------------------------------------
Outcome ordering_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkSpec net = load_network(testing::fixture("dcgan_g.json"));
  int consistent = 0;
  std::ostringstream seeds;
  for (int seed = 0; seed < kOrderingSeeds; ++seed) {
    ForwardProbeOptions o;
    o.seed = static_cast<std::uint64_t>(seed);
    o.draws = 1;
    ProxyDistortionEvaluator proxy(o);
    std::vector<double> d;
    for (int n = 1; n <= net.layer_count(); ++n) d.push_back(proxy.degradation(net, {}, {n}));
    const bool mono = std::is_sorted(d.begin(), d.end());
    consistent += mono ? 1 : 0;
    seeds << (seed ? " " : "") << (mono ? '+' : '-');
    if (seed == 0) {
      seeds << "(";
      for (std::size_t k = 0; k < d.size(); ++k) seeds << (k ? "/" : "") << num(d[k], 3);
      seeds << ")";
    }
  }
  const double t = seconds_since(t0);
  return {consistent >= kOrderingRequired,
          std::to_string(consistent) + "/" + std::to_string(kOrderingSeeds) + " seeds non-decreasing 1->4 (need " +
              std::to_string(kOrderingRequired) + "); " + seeds.str() + "; " + num(t, 3) + " s"};
}

// 9 ------------------------------------------------------------------------
Outcome swd_properties() {
  std::mt19937_64 rng(31);
  const SampleSet a(gaussian(40, 5, rng));
  const SampleSet b(gaussian(33, 5, rng).array() + 0.4);
  SwdConfig cfg;
  cfg.seed = 17;
  const bool identity = swd(a, a, cfg) == 0.0;
  const bool symmetric = swd(a, b, cfg) == swd(b, a, cfg);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = testing::pick(rng, 1, 60);
    const MatrixXd x = gaussian(n, 1, rng), y = gaussian(n, 1, rng).array() * 2.0 + 1.0;
    std::vector<double> xs(x.data(), x.data() + n), ys(y.data(), y.data() + n);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double exact = 0.0;
    for (Index i = 0; i < n; ++i) exact += std::abs(xs[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(i)]);
    exact /= static_cast<double>(n);
    cfg.projections = static_cast<int>(testing::pick(rng, 1, 32));
    worst = std::max(worst, std::abs(swd(SampleSet(x), SampleSet(y), cfg) - exact));
  }
  const SampleSet img(gaussian(4, 3 * 32 * 32, rng));
  const bool image_identity = multiscale_swd(img, img, {}).average == 0.0;
  std::ostringstream os;
  os << "identity " << (identity && image_identity ? "0" : "NONZERO") << "; symmetric "
     << (symmetric ? "yes" : "no") << "; 1-D max |diff| " << num(worst, 3) << " (tol " << num(kSwdTol) << ")";
  return {identity && image_identity && symmetric && worst <= kSwdTol, os.str()};
}

// 10 -----------------------------------------------------------------------
std::string capture(const std::string& command, int& status) {
  std::string out;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  status = ::pclose(pipe);
  return out;
}

Outcome cli_determinism() {
  const std::string cli = BINPLAN_CLI_PATH;
  const std::string g = testing::fixture("dcgan_g.json");
  const std::string d = testing::fixture("dcgan_d.json");
  const std::string mock = testing::fixture("mock_degradations.json");
  const std::vector<std::string> commands = {
      "analyze " + g,
      "analyze " + d + " --format json",
      "analyze " + d + " --format csv",
      "plan " + g + " --threshold 0.1 --evaluator mock --mock-file " + mock,
      "plan " + g + " --threshold 0.5 --draws 1 --batch 2 --seed 3",
      "plan " + g + " --threshold 0.5 --draws 1 --batch 2 --evaluator swd --projections 8 --format table",
      "oracle --ci 8,10,12 --trials 3 --seed 4 --out -",
      "oracle --ci 6 --trials 2 --scaling shared",
      "estimate " + g + " --plan 1,2,3",
      "estimate " + g + " --plan 1,2 --format table",
      "forward " + g + " --binarize 1,2,3 --seed 7",
      "forward " + g + " --binarize 4 --seed 7 --binarization fitted --batch 2",
      "swd " + testing::data_file("samples_a.raw") + " " + testing::data_file("samples_b.raw") + " --seed 1",
      "swd " + testing::data_file("images_a.raw") + " " + testing::data_file("images_b.raw") + " --seed 1",
  };
  int identical = 0;
  std::string first_bad;
  for (const auto& args : commands) {
    int s1 = 0, s2 = 0;
    const std::string a = capture(cli + " " + args, s1);
    const std::string b = capture(cli + " " + args, s2);
    if (a == b && s1 == 0 && s2 == 0 && !a.empty())
      ++identical;
    else if (first_bad.empty())
      first_bad = args + " (status " + std::to_string(s1) + "/" + std::to_string(s2) + ")";
  }
  const bool ok = identical == static_cast<int>(commands.size());
  return {ok, std::to_string(identical) + "/" + std::to_string(commands.size()) +
                  " commands byte-identical across two runs" + (ok ? "" : "; first mismatch: " + first_bad)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"DOR reproduction", dor_reproduction},
      {"deconvolution equivalence", deconv_equivalence},
      {"BWN scale optimality", bwn_optimality},
      {"binarization error vs redundancy trend", oracle_trend},
      {"brute-force cross-check", brute_force_cross_check},
      {"memory and compute savings", savings_figures},
      {"greedy planner control flow", algorithm_control_flow},
      {"single-layer degradation ordering", ordering_consistency},
      {"SWD properties", swd_properties},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << k + 1 << "  " << criteria[k].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed;
}
