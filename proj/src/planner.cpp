#include "binplan/planner.hpp"

#include <fstream>

#include "binplan/redundancy.hpp"
#include "binplan/rng.hpp"
#include "json.hpp"

namespace binplan {

MockEvaluator::MockEvaluator(std::map<int, double> per_layer) : per_layer_(std::move(per_layer)) {
  for (const auto& [layer, d] : per_layer_)
    if (!(d >= 0.0)) throw ContractViolation("mock degradation for layer " + std::to_string(layer) + " is negative");
}

MockEvaluator MockEvaluator::from_list(const std::vector<double>& degradations) {
  std::map<int, double> table;
  for (std::size_t k = 0; k < degradations.size(); ++k) table[static_cast<int>(k) + 1] = degradations[k];
  return MockEvaluator(std::move(table));
}

MockEvaluator MockEvaluator::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open mock evaluator file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation("bad mock evaluator file '" + path + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("degradations") || !doc["degradations"].is_array())
    throw ContractViolation("mock evaluator file '" + path + "' needs a \"degradations\" array");
  std::vector<double> values;
  for (const auto& v : doc["degradations"]) {
    if (!v.is_number()) throw ContractViolation("mock degradations must be numbers");
    values.push_back(v.get<double>());
  }
  return from_list(values);
}

double MockEvaluator::degradation(const NetworkSpec&, std::span<const TensorXd>, const LayerSet& plan) {
  double worst = 0.0;
  for (int n : plan) {
    const auto it = per_layer_.find(n);
    if (it == per_layer_.end()) throw ContractViolation("mock evaluator has no entry for layer " + std::to_string(n));
    worst = std::max(worst, it->second);
  }
  return worst;
}

std::string to_string(BinarizationMode mode) { return mode == BinarizationMode::bwn ? "bwn" : "fitted"; }

BinarizationMode parse_binarization_mode(const std::string& text) {
  if (text == "bwn") return BinarizationMode::bwn;
  if (text == "fitted") return BinarizationMode::fitted;
  throw ContractViolation("unknown binarization mode '" + text + "' (expected bwn or fitted)");
}

namespace {

constexpr std::uint64_t kTagInput = 0x696e;
constexpr std::uint64_t kTagWeights = 0x7774;

void check_plan_layers(const NetworkSpec& net, const LayerSet& plan) {
  for (int n : plan) {
    const auto& l = net.layer(n);
    if (l.kind == LayerKind::dense)
      throw ContractViolation("plan binarizes dense layer " + std::to_string(n) + " '" + l.name + "'");
  }
}

}  // namespace

ProbeOutputs probe_outputs(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan,
                           const ForwardProbeOptions& options, int draw) {
  if (options.batch < 1) throw ContractViolation("probe batch must be >= 1");
  check_plan_layers(net, plan);
  const auto d = static_cast<std::uint64_t>(draw);
  std::vector<TensorXd> drawn;
  if (weights.empty()) {
    drawn = random_weights(net, derive_seed(options.seed, {kTagWeights, d}));
    weights = drawn;
  }
  check_weights(net, weights);

  const auto& first = net.layers.front();
  TensorXd input({options.batch, first.c_i, first.h_i, first.w_i});
  auto engine = make_engine(options.seed, {kTagInput, d});
  fill_normal(input.flat(), engine);

  const auto acts = forward_activations(net, weights, input);
  ProbeOutputs out{acts.back(), acts.back()};
  if (plan.empty()) return out;

  TensorXd x = acts[static_cast<std::size_t>(*plan.begin() - 1)];
  for (int n = *plan.begin(); n <= net.layer_count(); ++n) {
    const auto& layer = net.layer(n);
    const auto& w = weights[static_cast<std::size_t>(n - 1)];
    if (!plan.contains(n)) {
      x = layer_forward(layer, w, x);
      continue;
    }
    const BinarizedWeights bw =
        options.mode == BinarizationMode::fitted
            ? fit_binarized(w, lower_input(acts[static_cast<std::size_t>(n - 1)]), options.fit)
            : binarize_weights(w);
    x = layer_forward(layer, reconstruct(bw), x);
  }
  out.planned = std::move(x);
  return out;
}

double ProxyDistortionEvaluator::degradation(const NetworkSpec& net, std::span<const TensorXd> weights,
                                             const LayerSet& plan) {
  check_plan_layers(net, plan);
  if (plan.empty()) return 0.0;
  if (options_.draws < 1) throw ContractViolation("proxy evaluator needs at least one draw");
  double total = 0.0;
  for (int draw = 0; draw < options_.draws; ++draw) {
    const ProbeOutputs out = probe_outputs(net, weights, plan, options_, draw);
    const Index n = out.reference.dim(0);
    const Index per = out.reference.size() / n;
    Eigen::Map<const RowMatrix<double>> ref(out.reference.data(), n, per);
    Eigen::Map<const RowMatrix<double>> got(out.planned.data(), n, per);
    double batch_total = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double denom = ref.row(i).norm();
      batch_total += denom > 0.0 ? (got.row(i) - ref.row(i)).norm() / denom : (got.row(i) - ref.row(i)).norm();
    }
    total += batch_total / static_cast<double>(n);
  }
  return total / options_.draws;
}

double SwdEvaluator::degradation(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan) {
  check_plan_layers(net, plan);
  if (plan.empty()) return 0.0;
  if (options_.draws < 1) throw ContractViolation("swd evaluator needs at least one draw");
  double total = 0.0;
  for (int draw = 0; draw < options_.draws; ++draw) {
    const ProbeOutputs out = probe_outputs(net, weights, plan, options_, draw);
    const Index n = out.reference.dim(0);
    const Index per = out.reference.size() / n;
    const SampleSet ref(Eigen::Map<const RowMatrix<double>>(out.reference.data(), n, per));
    const SampleSet got(Eigen::Map<const RowMatrix<double>>(out.planned.data(), n, per));
    total += multiscale_swd(ref, got, swd_).average;
  }
  return total / options_.draws;
}

namespace {

double evaluate_step(Evaluator& evaluator, const NetworkSpec& net, std::span<const TensorXd> weights,
                     const LayerSet& plan, const std::string& context) {
  try {
    const double d = evaluator.degradation(net, weights, plan);
    if (!(d >= 0.0)) throw Error("evaluator returned " + std::to_string(d));
    return d;
  } catch (const std::exception& e) {
    throw Error(context + " [" + evaluator.name() + " evaluator]: " + e.what());
  }
}

}  // namespace

BinarizationPlan plan_binarization(const NetworkSpec& net, std::span<const TensorXd> weights, Evaluator& evaluator,
                                   double threshold, const PlanOptions& options) {
  if (!(threshold >= 0.0)) throw ContractViolation("degradation threshold must be >= 0");
  if (!weights.empty()) check_weights(net, weights);

  const DorReport report = analyze(net);
  BinarizationPlan result;
  result.threshold = threshold;
  for (int n : report.descending()) {
    if (options.skip_negative_dor && degree_of_redundancy(net.layer(n)) < 0) continue;
    result.candidate_order.push_back(n);
  }

  for (std::size_t i = 0; i < result.candidate_order.size(); ++i) {
    const int n = result.candidate_order[i];
    const double d = evaluate_step(evaluator, net, weights, {n},
                                   "step " + std::to_string(i + 1) + " (layer " + std::to_string(n) + ")");
    result.step_degradations.push_back(d);
    if (d > threshold) break;
    result.accepted.push_back(n);
  }

  if (result.accepted.size() == 1)
    result.joint_degradation = result.step_degradations.front();
  else if (result.accepted.size() > 1)
    result.joint_degradation = evaluate_step(evaluator, net, weights, result.layers(), "joint plan");
  result.savings = estimate_plan(net, result.layers(), false, options.forward_fraction);
  return result;
}

SuperpositionReport superposition_report(const NetworkSpec& net, std::span<const TensorXd> weights,
                                         Evaluator& evaluator, const LayerSet& layers) {
  if (layers.empty()) throw ContractViolation("superposition report needs at least one layer");
  SuperpositionReport report;
  double worst = -1.0;
  std::int64_t least = 0;
  for (int n : layers) {
    const double d = evaluate_step(evaluator, net, weights, {n}, "layer " + std::to_string(n));
    report.single.emplace_back(n, d);
    if (d > worst) {
      worst = d;
      report.bottleneck = n;
    }
    const std::int64_t dor = degree_of_redundancy(net.layer(n));
    if (report.least_dor == 0 || dor < least) {
      least = dor;
      report.least_dor = n;
    }
  }
  report.joint = layers.size() == 1 ? report.single.front().second
                                    : evaluate_step(evaluator, net, weights, layers, "joint plan");
  return report;
}

}  // namespace binplan
