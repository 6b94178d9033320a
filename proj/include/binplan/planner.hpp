#pragma once

// Greedy, redundancy-ordered selection of layers to binarize.
//
// Layers are visited from the highest degree of redundancy down. Each is
// binarized on its own and the evaluator's degradation is compared with the
// threshold; the first layer that exceeds it stops the walk, and the layers
// before it form the plan. The evaluator is therefore called at most once per
// layer, plus once for the joint plan.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "binplan/binarize.hpp"
#include "binplan/metrics.hpp"
#include "binplan/savings.hpp"

namespace binplan {

class Evaluator {
 public:
  virtual ~Evaluator() = default;

  /// Non-negative performance loss of `plan` relative to full precision.
  /// `weights` may be empty, in which case the evaluator draws its own.
  virtual double degradation(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan) = 0;
  virtual std::string name() const = 0;
};

/// Fixed per-layer table; a multi-layer plan degrades by its worst member.
class MockEvaluator : public Evaluator {
 public:
  explicit MockEvaluator(std::map<int, double> per_layer);
  /// Entries in network layer order, layer 1 first.
  static MockEvaluator from_list(const std::vector<double>& degradations);
  static MockEvaluator from_file(const std::string& path);

  double degradation(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan) override;
  std::string name() const override { return "mock"; }

 private:
  std::map<int, double> per_layer_;
};

enum class BinarizationMode {
  bwn,     // sign(w) with mean-|w| scale per output channel
  fitted,  // BWN refined to reproduce each layer's output on its inputs
};

std::string to_string(BinarizationMode mode);
BinarizationMode parse_binarization_mode(const std::string& text);

struct ForwardProbeOptions {
  int batch = 16;
  int draws = 5;
  std::uint64_t seed = 0;
  BinarizationMode mode = BinarizationMode::fitted;
  FitOptions fit;
};

/// Full-precision and plan outputs for one draw of weights and inputs.
struct ProbeOutputs {
  TensorXd reference;
  TensorXd planned;
};

/// Draw `draw` of (weights, input batch), both seeded; `weights` overrides
/// the weight draw when non-empty. Layers upstream of the plan are shared.
ProbeOutputs probe_outputs(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan,
                           const ForwardProbeOptions& options, int draw);

/// Mean relative output error |y_plan - y_fp| / |y_fp| over a seeded batch,
/// averaged over weight draws. Exactly 0 for the empty plan.
class ProxyDistortionEvaluator : public Evaluator {
 public:
  explicit ProxyDistortionEvaluator(ForwardProbeOptions options = {}) : options_(options) {}

  double degradation(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan) override;
  std::string name() const override { return "proxy"; }

 private:
  ForwardProbeOptions options_;
};

/// Multi-scale SWD between full-precision and plan outputs, averaged over draws.
class SwdEvaluator : public Evaluator {
 public:
  SwdEvaluator(ForwardProbeOptions options, SwdConfig swd) : options_(options), swd_(std::move(swd)) {}

  double degradation(const NetworkSpec& net, std::span<const TensorXd> weights, const LayerSet& plan) override;
  std::string name() const override { return "swd"; }

 private:
  ForwardProbeOptions options_;
  SwdConfig swd_;
};

struct PlanOptions {
  bool skip_negative_dor = false;
  double forward_fraction = 0.5;
};

struct BinarizationPlan {
  std::vector<int> candidate_order;        // layer numbers, DOR high to low
  std::vector<double> step_degradations;   // one per evaluated candidate, including the one that stopped the walk
  std::vector<int> accepted;               // prefix of candidate_order
  double joint_degradation = 0.0;          // degradation of `accepted` binarized together
  double threshold = 0.0;
  SavingsReport savings;                   // deconv/conv accounting

  LayerSet layers() const { return {accepted.begin(), accepted.end()}; }
};

BinarizationPlan plan_binarization(const NetworkSpec& net, std::span<const TensorXd> weights, Evaluator& evaluator,
                                   double threshold, const PlanOptions& options = {});

struct SuperpositionReport {
  std::vector<std::pair<int, double>> single;  // (layer, degradation alone)
  double joint = 0.0;
  int bottleneck = 0;  // layer with the largest single degradation
  int least_dor = 0;   // layer with the smallest degree of redundancy
};

SuperpositionReport superposition_report(const NetworkSpec& net, std::span<const TensorXd> weights,
                                         Evaluator& evaluator, const LayerSet& layers);

}  // namespace binplan
