// binplan: command-line front end.
//
//   binplan analyze  NET [--format table|json|csv]
//   binplan plan     NET --threshold T [--evaluator proxy|swd|mock] ...
//   binplan oracle   [--si 20] [--ci 15,17,19,21,23] [--trials 30] ...
//   binplan estimate NET --plan 1,2,3 [--forward-fraction 0.5]
//   binplan forward  NET --binarize 1,2,3 [--seed N] ...
//   binplan swd      A.raw B.raw [--seed N] ...
//
// Exit codes: 0 success, 2 input error, 3 internal error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "binplan/binarize.hpp"
#include "binplan/metrics.hpp"
#include "binplan/netspec.hpp"
#include "binplan/oracle.hpp"
#include "binplan/planner.hpp"
#include "binplan/raw_io.hpp"
#include "binplan/redundancy.hpp"
#include "binplan/savings.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;
using namespace binplan;

constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw ContractViolation("cannot write '" + out + "'");
  file << text;
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

LayerSet parse_layers(const std::string& text, const NetworkSpec& net) {
  LayerSet layers;
  if (text == "none") return layers;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ContractViolation("bad layer number '" + item + "'");
    net.layer(n);
    layers.insert(n);
  }
  return layers;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ContractViolation(std::string("bad ") + what + " value '" + item + "'");
    }
  }
  return values;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

ordered_json savings_json(const SavingsReport& r) {
  return {{"include_dense", r.include_dense},
          {"total_weights", r.total_weights},
          {"binarized_weights", r.binarized_weights},
          {"memory_cost_ratio", r.memory_cost_ratio},
          {"memory_saving", r.memory_saving()},
          {"total_mults", r.total_mults},
          {"binarized_mults", r.binarized_mults},
          {"inference_cost_ratio", r.inference_cost_ratio},
          {"inference_speedup", r.inference_speedup()},
          {"forward_fraction", r.forward_fraction},
          {"training_cost_ratio", r.training_cost_ratio},
          {"training_speedup", r.training_speedup()},
          {"notes", r.notes}};
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string net;
  std::string format = "table";
  std::string out = "-";
};

void run_analyze(const AnalyzeArgs& args) {
  const NetworkSpec net = load_network(args.net);
  const DorReport report = analyze(net);
  std::ostringstream os;
  if (args.format == "json") {
    ordered_json doc = {{"command", "analyze"}, {"network", net.name}};
    doc["layers"] = ordered_json::array();
    for (const auto& e : report.entries)
      doc["layers"].push_back(
          {{"layer", e.layer}, {"name", e.name}, {"kind", to_string(e.kind)}, {"dor", e.dor}, {"rank", e.rank}});
    doc["descending"] = report.descending();
    doc["notes"] = report.notes;
    os << dump(doc);
  } else if (args.format == "csv") {
    os << "layer,name,kind,dor,rank\n";
    for (const auto& e : report.entries)
      os << e.layer << ',' << e.name << ',' << to_string(e.kind) << ',' << e.dor << ',' << e.rank << '\n';
  } else {
    os << "network: " << net.name << "\n";
    os << std::left << std::setw(7) << "layer" << std::setw(14) << "name" << std::setw(8) << "kind" << std::right
       << std::setw(8) << "dor" << std::setw(6) << "rank" << "\n";
    for (const auto& e : report.entries)
      os << std::left << std::setw(7) << e.layer << std::setw(14) << e.name << std::setw(8) << to_string(e.kind)
         << std::right << std::setw(8) << e.dor << std::setw(6) << e.rank << "\n";
    for (const auto& note : report.notes) os << "note: " << note << "\n";
  }
  emit(os.str(), args.out);
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  std::uint64_t seed = 0;
  int batch = 16;
  int draws = 5;
  std::string binarization = "fitted";
  std::string weights;
  int projections = 64;
};

ForwardProbeOptions probe_options(const ProbeArgs& a) {
  ForwardProbeOptions o;
  o.seed = a.seed;
  o.batch = a.batch;
  o.draws = a.draws;
  o.mode = parse_binarization_mode(a.binarization);
  return o;
}

struct PlanArgs {
  std::string net;
  double threshold = -1.0;
  std::string evaluator = "proxy";
  std::string mock_file;
  bool skip_negative_dor = false;
  double forward_fraction = 0.5;
  ProbeArgs probe;
  std::string format = "json";
  std::string out = "-";
};

void run_plan(const PlanArgs& args) {
  const NetworkSpec net = load_network(args.net);
  std::vector<TensorXd> weights;
  if (!args.probe.weights.empty()) weights = read_weight_dir(args.probe.weights, net.layer_count());

  std::unique_ptr<Evaluator> evaluator;
  if (args.evaluator == "mock") {
    if (args.mock_file.empty()) throw ContractViolation("--evaluator mock needs --mock-file");
    evaluator = std::make_unique<MockEvaluator>(MockEvaluator::from_file(args.mock_file));
  } else if (args.evaluator == "proxy") {
    evaluator = std::make_unique<ProxyDistortionEvaluator>(probe_options(args.probe));
  } else if (args.evaluator == "swd") {
    SwdConfig swd;
    swd.seed = args.probe.seed;
    swd.projections = args.probe.projections;
    evaluator = std::make_unique<SwdEvaluator>(probe_options(args.probe), swd);
  } else {
    throw ContractViolation("unknown evaluator '" + args.evaluator + "' (expected proxy, swd or mock)");
  }

  PlanOptions options;
  options.skip_negative_dor = args.skip_negative_dor;
  options.forward_fraction = args.forward_fraction;
  const BinarizationPlan plan = plan_binarization(net, weights, *evaluator, args.threshold, options);

  std::ostringstream os;
  if (args.format == "table") {
    os << "network: " << net.name << "  evaluator: " << evaluator->name() << "  threshold: " << args.threshold
       << "\n";
    for (std::size_t i = 0; i < plan.candidate_order.size(); ++i) {
      const int n = plan.candidate_order[i];
      os << "  step " << i + 1 << "  layer " << n << " (" << net.layer(n).name
         << ", dor " << degree_of_redundancy(net.layer(n)) << ")  ";
      if (i < plan.step_degradations.size())
        os << "degradation " << fixed(plan.step_degradations[i], 6)
           << (plan.step_degradations[i] > plan.threshold ? "  > threshold, stop" : "  accepted");
      else
        os << "not evaluated";
      os << "\n";
    }
    os << "binarize together:";
    for (int n : plan.accepted) os << ' ' << n;
    os << (plan.accepted.empty() ? " (none)" : "") << "\n";
    os << "joint degradation: " << fixed(plan.joint_degradation, 6) << "\n";
    os << "memory saving: " << fixed(plan.savings.memory_saving(), 2)
       << "x  inference speedup: " << fixed(plan.savings.inference_speedup(), 3) << "x\n";
  } else {
    ordered_json params = {{"evaluator", evaluator->name()},
                           {"threshold", args.threshold},
                           {"skip_negative_dor", args.skip_negative_dor},
                           {"forward_fraction", args.forward_fraction}};
    if (args.evaluator == "mock") {
      params["mock_file"] = args.mock_file;
    } else {
      params["seed"] = args.probe.seed;
      params["batch"] = args.probe.batch;
      params["draws"] = args.probe.draws;
      params["binarization"] = args.probe.binarization;
      params["weights"] = args.probe.weights.empty() ? ordered_json("seeded") : ordered_json(args.probe.weights);
      if (args.evaluator == "swd") params["projections"] = args.probe.projections;
    }
    ordered_json doc = {{"command", "plan"},
                        {"network", net.name},
                        {"params", params},
                        {"candidate_order", plan.candidate_order},
                        {"accepted", plan.accepted},
                        {"step_degradations", plan.step_degradations},
                        {"joint_degradation", plan.joint_degradation},
                        {"threshold", plan.threshold},
                        {"savings", savings_json(plan.savings)}};
    os << dump(doc);
  }
  emit(os.str(), args.out);
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  Index s_i = 20;
  std::string c_i = "15,17,19,21,23";
  int trials = 30;
  int columns = 4;
  std::uint64_t seed = 0;
  std::string scaling = "per_column";
  int cap = kDefaultEnumerationCap;
  std::string out = "-";
};

void run_oracle_cmd(const OracleArgs& args) {
  OracleConfig cfg;
  cfg.s_i = args.s_i;
  cfg.c_i_values = parse_list<Index>(args.c_i, "--ci");
  cfg.trials = args.trials;
  cfg.columns = args.columns;
  cfg.seed = args.seed;
  cfg.scaling = parse_scaling(args.scaling);
  cfg.cap = args.cap;
  emit(to_csv(run_oracle(cfg), cfg), args.out);
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string net;
  std::string plan;
  double forward_fraction = 0.5;
  std::string format = "json";
  std::string out = "-";
};

void run_estimate(const EstimateArgs& args) {
  const NetworkSpec net = load_network(args.net);
  const LayerSet plan = parse_layers(args.plan, net);
  const SavingsReport core = estimate_plan(net, plan, false, args.forward_fraction);
  const SavingsReport dense = estimate_plan(net, plan, true, args.forward_fraction);
  std::ostringstream os;
  if (args.format == "table") {
    os << "network: " << net.name << "  plan:";
    for (int n : plan) os << ' ' << n;
    os << (plan.empty() ? " (none)" : "") << "\n";
    os << std::left << std::setw(22) << "" << std::right << std::setw(18) << "deconv/conv only" << std::setw(18)
       << "with dense" << "\n";
    const auto row = [&](const std::string& label, const std::string& a, const std::string& b) {
      os << std::left << std::setw(22) << label << std::right << std::setw(18) << a << std::setw(18) << b << "\n";
    };
    row("weights N", std::to_string(core.total_weights), std::to_string(dense.total_weights));
    row("binarized K", std::to_string(core.binarized_weights), std::to_string(dense.binarized_weights));
    row("memory cost", fixed(core.memory_cost_ratio, 6), fixed(dense.memory_cost_ratio, 6));
    row("memory saving", fixed(core.memory_saving(), 2) + "x", fixed(dense.memory_saving(), 2) + "x");
    row("inference cost", fixed(core.inference_cost_ratio, 6), fixed(dense.inference_cost_ratio, 6));
    row("inference speedup", fixed(core.inference_speedup(), 3) + "x", fixed(dense.inference_speedup(), 3) + "x");
    row("training speedup", fixed(core.training_speedup(), 3) + "x", fixed(dense.training_speedup(), 3) + "x");
    for (const auto& n : core.notes) os << "note (deconv/conv only): " << n << "\n";
    for (const auto& n : dense.notes) os << "note (with dense): " << n << "\n";
  } else {
    ordered_json doc = {{"command", "estimate"},
                        {"network", net.name},
                        {"plan", std::vector<int>(plan.begin(), plan.end())},
                        {"forward_fraction", args.forward_fraction},
                        {"accountings", {{"deconv_conv_only", savings_json(core)}, {"with_dense", savings_json(dense)}}}};
    os << dump(doc);
  }
  emit(os.str(), args.out);
}

// ---------------------------------------------------------------------------

struct ForwardArgs {
  std::string net;
  std::string binarize;
  ProbeArgs probe;
  std::string write_weights;
  std::string write_output;
  std::string out = "-";
};

void run_forward(ForwardArgs args) {
  const NetworkSpec net = load_network(args.net);
  const LayerSet plan = parse_layers(args.binarize, net);
  const std::vector<TensorXd> weights = args.probe.weights.empty()
                                            ? random_weights(net, args.probe.seed)
                                            : read_weight_dir(args.probe.weights, net.layer_count());
  if (!args.write_weights.empty()) write_weight_dir(args.write_weights, weights);

  ForwardProbeOptions options = probe_options(args.probe);
  const ProbeOutputs out = probe_outputs(net, weights, plan, options, 0);
  if (!args.write_output.empty()) {
    const Index n = out.planned.dim(0);
    write_raw(args.write_output, out.planned.reshaped({n, out.planned.size() / n}));
  }

  const Index n = out.reference.dim(0);
  const Index per = out.reference.size() / n;
  Eigen::Map<const RowMatrix<double>> ref(out.reference.data(), n, per);
  Eigen::Map<const RowMatrix<double>> got(out.planned.data(), n, per);
  double distortion = 0.0;
  for (Index i = 0; i < n; ++i) distortion += (got.row(i) - ref.row(i)).norm() / ref.row(i).norm();
  distortion /= static_cast<double>(n);

  ordered_json doc = {{"command", "forward"},
                      {"network", net.name},
                      {"params",
                       {{"seed", args.probe.seed},
                        {"batch", args.probe.batch},
                        {"binarization", args.probe.binarization},
                        {"weights", args.probe.weights.empty() ? ordered_json("seeded") : ordered_json(args.probe.weights)}}},
                      {"binarized_layers", std::vector<int>(plan.begin(), plan.end())},
                      {"output_shape", out.planned.shape()},
                      {"output_norm", got.norm()},
                      {"reference_norm", ref.norm()},
                      {"distortion", distortion}};
  emit(dump(doc), args.out);
}

// ---------------------------------------------------------------------------

struct SwdArgs {
  std::string a;
  std::string b;
  std::uint64_t seed = 0;
  int projections = 64;
  std::string resolutions = "1,2,4";
  int patches = 64;
  bool no_normalize = false;
  std::string mode = "auto";
  std::string out = "-";
};

SampleSet as_samples(const TensorXd& t) {
  const Index n = t.dim(0);
  return SampleSet(Eigen::Map<const RowMatrix<double>>(t.data(), n, t.size() / n));
}

void run_swd(const SwdArgs& args) {
  const TensorXd ta = read_raw(args.a);
  const TensorXd tb = read_raw(args.b);
  SwdConfig cfg;
  cfg.seed = args.seed;
  cfg.projections = args.projections;
  cfg.resolutions = parse_list<int>(args.resolutions, "--resolutions");
  cfg.patches_per_image = args.patches;
  cfg.normalize = !args.no_normalize;

  bool multiscale = false;
  if (args.mode == "multiscale")
    multiscale = true;
  else if (args.mode == "auto")
    multiscale = ta.rank() == 4;
  else if (args.mode != "flat")
    throw ContractViolation("--mode must be auto, flat or multiscale");

  ordered_json doc = {{"command", "swd"},
                      {"a", args.a},
                      {"b", args.b},
                      {"params", {{"seed", args.seed}, {"projections", args.projections}}}};
  if (multiscale) {
    doc["params"]["resolutions"] = cfg.resolutions;
    doc["params"]["patches_per_image"] = cfg.patches_per_image;
    doc["params"]["patch_size"] = cfg.patch_size;
    doc["params"]["normalize"] = cfg.normalize;
    const MultiscaleSwd r = multiscale_swd(as_samples(ta), as_samples(tb), cfg);
    doc["scales"] = ordered_json::array();
    for (const auto& s : r.scales)
      doc["scales"].push_back({{"factor", s.factor}, {"resolution", s.resolution}, {"swd", s.swd}});
    doc["swd"] = r.average;
  } else {
    doc["swd"] = swd(as_samples(ta), as_samples(tb), cfg);
  }
  emit(dump(doc), args.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binarization planning for deconvolution/convolution networks"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Degree of redundancy per layer");
  analyze_cmd->add_option("net", analyze_args.net, "Network file (binplan/1 JSON)")->required();
  analyze_cmd->add_option("--format", analyze_args.format)->check(CLI::IsMember({"table", "json", "csv"}));
  analyze_cmd->add_option("--out", analyze_args.out, "Output path, - for stdout");

  const auto add_probe = [](CLI::App* cmd, ProbeArgs& p) {
    cmd->add_option("--seed", p.seed, "Seed for weights and inputs");
    cmd->add_option("--batch", p.batch, "Inputs per draw")->check(CLI::PositiveNumber);
    cmd->add_option("--binarization", p.binarization, "bwn or fitted")->check(CLI::IsMember({"bwn", "fitted"}));
    cmd->add_option("--weights", p.weights, "Directory of layerN.raw weight files")->check(CLI::ExistingDirectory);
  };

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "Greedy redundancy-ordered binarization plan");
  plan_cmd->add_option("net", plan_args.net)->required();
  plan_cmd->add_option("--threshold", plan_args.threshold, "Degradation threshold T >= 0")->required();
  plan_cmd->add_option("--evaluator", plan_args.evaluator)->check(CLI::IsMember({"proxy", "swd", "mock"}));
  plan_cmd->add_option("--mock-file", plan_args.mock_file)->check(CLI::ExistingFile);
  plan_cmd->add_flag("--skip-negative-dor", plan_args.skip_negative_dor, "Never consider layers with DOR < 0");
  plan_cmd->add_option("--forward-fraction", plan_args.forward_fraction)->check(CLI::Range(0.0, 1.0));
  plan_cmd->add_option("--draws", plan_args.probe.draws, "Weight/input draws per evaluation")
      ->check(CLI::PositiveNumber);
  plan_cmd->add_option("--projections", plan_args.probe.projections)->check(CLI::PositiveNumber);
  plan_cmd->add_option("--format", plan_args.format)->check(CLI::IsMember({"json", "table"}));
  plan_cmd->add_option("--out", plan_args.out);
  add_probe(plan_cmd, plan_args.probe);

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive binarization error vs degree of redundancy (CSV)");
  oracle_cmd->add_option("--si", oracle_args.s_i)->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--ci", oracle_args.c_i, "Comma-separated input channel counts");
  oracle_cmd->add_option("--trials", oracle_args.trials)->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--columns", oracle_args.columns, "Target columns per trial")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed", oracle_args.seed);
  oracle_cmd->add_option("--scaling", oracle_args.scaling)->check(CLI::IsMember({"per_column", "shared"}));
  oracle_cmd->add_option("--cap", oracle_args.cap, "Largest c_i to enumerate");
  oracle_cmd->add_option("--out", oracle_args.out);

  EstimateArgs estimate_args;
  auto* estimate_cmd = app.add_subcommand("estimate", "Memory and compute savings of a plan");
  estimate_cmd->add_option("net", estimate_args.net)->required();
  estimate_cmd->add_option("--plan", estimate_args.plan, "Comma-separated layer numbers or none")->required();
  estimate_cmd->add_option("--forward-fraction", estimate_args.forward_fraction)->check(CLI::Range(0.0, 1.0));
  estimate_cmd->add_option("--format", estimate_args.format)->check(CLI::IsMember({"json", "table"}));
  estimate_cmd->add_option("--out", estimate_args.out);

  ForwardArgs forward_args;
  forward_args.probe.batch = 4;
  forward_args.probe.binarization = "bwn";
  auto* forward_cmd = app.add_subcommand("forward", "Forward pass with selected layers binarized");
  forward_cmd->add_option("net", forward_args.net)->required();
  forward_cmd->add_option("--binarize", forward_args.binarize, "Comma-separated layer numbers, \"\" or none for no layers")
      ->required();
  forward_cmd->add_option("--write-weights", forward_args.write_weights, "Save the weights used");
  forward_cmd->add_option("--write-output", forward_args.write_output, "Save the plan output as raw samples");
  forward_cmd->add_option("--out", forward_args.out);
  add_probe(forward_cmd, forward_args.probe);

  SwdArgs swd_args;
  auto* swd_cmd = app.add_subcommand("swd", "Sliced Wasserstein distance between two raw sample files");
  swd_cmd->add_option("a", swd_args.a)->required()->check(CLI::ExistingFile);
  swd_cmd->add_option("b", swd_args.b)->required()->check(CLI::ExistingFile);
  swd_cmd->add_option("--seed", swd_args.seed);
  swd_cmd->add_option("--projections", swd_args.projections)->check(CLI::PositiveNumber);
  swd_cmd->add_option("--resolutions", swd_args.resolutions, "Downsampling factors for image samples");
  swd_cmd->add_option("--patches", swd_args.patches, "Patches per image")->check(CLI::PositiveNumber);
  swd_cmd->add_flag("--no-normalize", swd_args.no_normalize, "Skip per-patch standardization");
  swd_cmd->add_option("--mode", swd_args.mode, "auto (rank-4 files are images), flat or multiscale")
      ->check(CLI::IsMember({"auto", "flat", "multiscale"}));
  swd_cmd->add_option("--out", swd_args.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (analyze_cmd->parsed()) run_analyze(analyze_args);
    if (plan_cmd->parsed()) run_plan(plan_args);
    if (oracle_cmd->parsed()) run_oracle_cmd(oracle_args);
    if (estimate_cmd->parsed()) run_estimate(estimate_args);
    if (forward_cmd->parsed()) run_forward(forward_args);
    if (swd_cmd->parsed()) run_swd(swd_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
