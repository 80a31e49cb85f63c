// SPDX-License-Identifier: Apache-2.0
//
// purikit: sampling, protocol sweeps, variational campaigns and fidelity /
// histogram analyses. Every run writes <out>.manifest.json next to its output.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "purikit/purikit.hpp"

#ifndef PURIKIT_VERSION
#define PURIKIT_VERSION "dev"
#endif

namespace {

using json = nlohmann::ordered_json;
using namespace purikit;

constexpr int kExitIo = 1;
constexpr int kExitFlags = 2;
constexpr int kExitNumerical = 3;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  explicit CsvFile(const std::string& path) : path_(path), f_(path, std::ios::trunc) {
    if (!f_) throw IoError("cannot open '" + path + "' for writing");
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) f_ << (i ? "," : "") << cells[i];
    f_ << '\n';
  }
  void close() {
    f_.close();
    if (!f_) throw IoError("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream f_;
};

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write to '" + path + "' failed");
}

// Shared run context ----------------------------------------------------------

struct Context {
  std::string command_line;
  int threads = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  json manifest(const std::string& command) const {
    json m;
    m["command"] = command;
    m["command_line"] = command_line;
    m["software_version"] = PURIKIT_VERSION;
    m["rng"] = Rng::kName;
    m["threads"] = thread_count();
    return m;
  }
  void finish(json m, const std::string& out) const {
    m["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(out + ".manifest.json", m);
  }
};

struct Input {
  std::string path;
  Dump dump;
  std::vector<DensityMatrix> states;
};

Input load_input(const std::string& path) {
  Input in{path, read_dump(path), {}};
  if (in.dump.records.size() < 2)
    throw IoError("'" + path + "' holds " + std::to_string(in.dump.records.size()) +
                  " states; need at least two");
  in.states = to_states(in.dump.records);
  return in;
}

void describe_input(json& m, const Input& in) {
  m["input"] = in.path;
  m["input_seed"] = in.dump.seed;
  m["n_states"] = in.states.size();
}

const std::vector<std::string> kResultHeader{
    "iteration",         "mean_concurrence", "concurrence_std", "concurrence_stderr",
    "mean_success",      "success_std",      "success_stderr",  "n_nonzero"};

void result_row(CsvFile& csv, const IterationStats& s) {
  csv.row({std::to_string(s.iteration), num(s.concurrence.mean), num(s.concurrence.sample_std),
           num(s.concurrence.std_error), num(s.success.mean), num(s.success.sample_std),
           num(s.success.std_error), std::to_string(s.n_nonzero)});
}

void asymptote_row(CsvFile& csv, const SampleStats& s, std::size_t n) {
  const auto hits = static_cast<std::size_t>(std::llround(s.mean * static_cast<double>(n)));
  csv.row({"inf", num(s.mean), num(s.sample_std), num(s.std_error), "", "", "",
           std::to_string(hits)});
}

std::vector<RoundPlan> load_plans(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  std::vector<RoundPlan> plans;
  try {
    for (const auto& r : j.at("rounds")) {
      const auto policy = MeasurementPolicy::parse(r.at("policy").get<std::string>());
      if (r.at("op") == "projector") {
        plans.push_back(RoundPlan::projector(policy));
      } else {
        EulerAngles a;
        const auto va = r.at("alpha_a").get<std::vector<double>>();
        const auto vb = r.at("alpha_b").get<std::vector<double>>();
        if (va.size() != 15 || vb.size() != 15)
          throw IoError("'" + path + "': alpha_a and alpha_b need 15 entries each");
        std::copy(va.begin(), va.end(), a.alpha.begin());
        std::copy(vb.begin(), vb.end(), a.alpha.begin() + 15);
        if (!a.in_bounds()) throw std::invalid_argument("'" + path + "': angles out of bounds");
        plans.push_back(RoundPlan::unitary(a, policy));
      }
    }
  } catch (const json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return plans;
}

json plan_json(const RoundRecord& r) {
  json j;
  j["round"] = r.round;
  j["op"] = r.plan.op == RoundPlan::Op::SpecialProjector ? "projector" : "unitary";
  j["policy"] = r.plan.policy.to_string();
  j["alpha_a"] = r.plan.angles.a();
  j["alpha_b"] = r.plan.angles.b();
  j["cost"] = r.cost;
  j["optimized"] = r.optimized;
  j["converged"] = r.converged;
  j["message"] = r.message;
  return j;
}

// Subcommands -------------------------------------------------------------------

struct SampleArgs {
  std::size_t n = 100000;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  bool paper_scale = false;
  std::string out;
};

int cmd_sample(const Context& ctx, const SampleArgs& a, bool n_given, bool chains_given) {
  ChainConfig cfg;
  cfg.seed = a.seed;
  cfg.burn_in = a.burn_in;
  cfg.thinning = a.thin;
  cfg.n_samples = a.n;
  std::size_t chains = a.chains;
  if (a.paper_scale) {
    if (!n_given) cfg.n_samples = 1000000;
    if (!chains_given) chains = 10;
  }
  cfg.validate();
  const auto bloch = sample_chains(cfg, chains);
  std::vector<double> conc(bloch.size());
  parallel_for(bloch.size(), [&](std::size_t i) { conc[i] = concurrence(bloch_to_state(bloch[i])); });
  std::size_t separable = 0;
  for (double c : conc) separable += c == 0.0;
  const double frac = static_cast<double>(separable) / static_cast<double>(bloch.size());
  write_dump(a.out, Dump{a.seed, bloch});
  std::cerr << "sampled " << bloch.size() << " states; separable fraction " << num(frac) << '\n';

  auto m = ctx.manifest("sample");
  m["seed"] = a.seed;
  m["chain_seeds"] = json::array();
  for (std::size_t c = 0; c < chains; ++c) m["chain_seeds"].push_back(a.seed + c);
  m["chains"] = chains;
  m["n_per_chain"] = cfg.n_samples;
  m["burn_in"] = cfg.burn_in;
  m["thinning"] = cfg.thinning;
  m["records"] = bloch.size();
  m["separable_fraction"] = frac;
  ctx.finish(m, a.out);
  return 0;
}

struct EvaluateArgs {
  std::string protocol;
  int iters = 15;
  bool mfi_outcome_factor = false;
  std::string in, out;
};

int cmd_evaluate(const Context& ctx, const EvaluateArgs& a) {
  const bool ultimate = a.protocol == "ultimate";
  const ProtocolKind kind = ultimate ? ProtocolKind::Bennett : parse_protocol(a.protocol);
  if (a.iters < 0) throw std::invalid_argument("--iters must be >= 0");
  CsvFile csv(a.out);
  const auto in = load_input(a.in);
  csv.row(kResultHeader);
  const std::size_t n = in.states.size();
  if (ultimate) {
    result_row(csv, run_fixed_protocol(ProtocolKind::Bennett, in.states, 0).stats(0));
    asymptote_row(csv, ultimate_limit(in.states), n);
  } else {
    auto run = run_fixed_protocol(kind, in.states, a.iters);
    if (a.mfi_outcome_factor && kind == ProtocolKind::MFI)
      for (auto& row : run.success)
        for (double& p : row) p *= 0.25;
    for (const auto& s : run.all_stats()) result_row(csv, s);
    asymptote_row(csv, asymptotic_limit(kind, in.states), n);
  }
  csv.close();

  auto m = ctx.manifest("evaluate");
  describe_input(m, in);
  m["protocol"] = a.protocol;
  m["iterations"] = ultimate ? 0 : a.iters;
  m["mfi_outcome_factor"] = a.mfi_outcome_factor;
  ctx.finish(m, a.out);
  return 0;
}

struct OptimizeArgs {
  int rounds = 6;
  std::string policy = "greedy";
  bool projector_first = false;
  std::size_t ns = 1000;
  int restarts = 20;
  int max_iter = 200;
  std::uint64_t seed = 1;
  std::string in, out, angles;
};

int cmd_optimize(const Context& ctx, const OptimizeArgs& a) {
  AdaptiveOptions opt;
  opt.rounds = a.rounds;
  opt.policy = MeasurementPolicy::parse(a.policy);
  opt.projector_first = a.projector_first;
  opt.optimizer.subset_size = a.ns;
  opt.optimizer.restarts = a.restarts;
  opt.optimizer.max_iterations = a.max_iter;
  opt.seed = a.seed;
  if (opt.rounds < 1) throw std::invalid_argument("--rounds must be >= 1");
  opt.optimizer.validate();
  const std::string angles_path = a.angles.empty() ? a.out + ".angles.json" : a.angles;
  CsvFile csv(a.out);
  const auto in = load_input(a.in);

  const auto run = run_adaptive_protocol(in.states, opt);
  csv.row(kResultHeader);
  for (const auto& s : run.stats()) result_row(csv, s);
  csv.close();

  json angles;
  angles["rounds"] = json::array();
  for (const auto& r : run.rounds) {
    angles["rounds"].push_back(plan_json(r));
    if (r.optimized && !r.converged)
      std::cerr << "round " << r.round << ": optimizer did not converge (" << r.message
                << "); using best angles found\n";
  }
  write_json(angles_path, angles);

  auto m = ctx.manifest("optimize");
  describe_input(m, in);
  m["rounds"] = a.rounds;
  m["policy"] = opt.policy.to_string();
  m["projector_first"] = a.projector_first;
  m["subset_size"] = a.ns;
  m["restarts"] = a.restarts;
  m["max_iterations"] = a.max_iter;
  m["seed"] = a.seed;
  m["angles"] = angles_path;
  ctx.finish(m, a.out);
  return 0;
}

struct FidelityArgs {
  std::string protocol;
  int iters = 15;
  std::string in, out;
};

int cmd_fidelity(const Context& ctx, const FidelityArgs& a) {
  const auto kind = parse_protocol(a.protocol);
  if (a.iters < 0) throw std::invalid_argument("--iters must be >= 0");
  CsvFile csv(a.out);
  const auto in = load_input(a.in);
  const auto run = run_fixed_protocol(kind, in.states, a.iters, true);
  const auto slots = attractors(kind);
  csv.row({"iteration", "attractor", "mean_fidelity", "stderr"});
  for (int i = 0; i <= a.iters; ++i)
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto st = aggregate(run.fidelity[s][i]);
      csv.row({std::to_string(i), std::to_string(bell_index(slots[s])), num(st.mean),
               num(st.std_error)});
    }
  csv.close();

  auto m = ctx.manifest("fidelity");
  describe_input(m, in);
  m["protocol"] = a.protocol;
  m["iterations"] = a.iters;
  ctx.finish(m, a.out);
  return 0;
}

struct HistogramArgs {
  std::size_t bins = 50;
  bool exclude_zero = false;
  int iteration = 0;
  std::string protocol = "none";
  std::string angles;
  std::string in, out;
};

int cmd_histogram(const Context& ctx, const HistogramArgs& a) {
  if (a.iteration < 0) throw std::invalid_argument("--iteration must be >= 0");
  if (a.bins < 1) throw std::invalid_argument("--bins must be >= 1");
  std::optional<ProtocolKind> kind;
  std::vector<RoundPlan> plans;
  if (a.protocol == "optimized") {
    if (a.angles.empty()) throw std::invalid_argument("--protocol optimized needs --angles");
    plans = load_plans(a.angles);
    if (static_cast<std::size_t>(a.iteration) > plans.size())
      throw std::invalid_argument("--iteration exceeds the " + std::to_string(plans.size()) +
                                  " rounds in " + a.angles);
    plans.resize(static_cast<std::size_t>(a.iteration));
  } else if (a.protocol != "none") {
    kind = parse_protocol(a.protocol);
  } else if (a.iteration != 0) {
    throw std::invalid_argument("--iteration > 0 needs --protocol");
  }
  CsvFile csv(a.out);
  const auto in = load_input(a.in);

  std::vector<double> values;
  if (kind)
    values = run_fixed_protocol(*kind, in.states, a.iteration).concurrence.back();
  else if (!plans.empty())
    values = replay_protocol(in.states, plans).concurrence.back();
  else
    values = run_fixed_protocol(ProtocolKind::Bennett, in.states, 0).concurrence[0];

  const auto h = histogram(values, a.bins, a.exclude_zero);
  csv.row({"bin_lo", "bin_hi", "count"});
  for (std::size_t b = 0; b < h.bins; ++b)
    csv.row({num(h.lo(b)), num(h.hi(b)), std::to_string(h.counts[b])});
  csv.close();

  auto m = ctx.manifest("histogram");
  describe_input(m, in);
  m["protocol"] = a.protocol;
  if (!a.angles.empty()) m["angles"] = a.angles;
  m["iteration"] = a.iteration;
  m["bins"] = a.bins;
  m["exclude_zero"] = a.exclude_zero;
  m["included"] = h.total();
  ctx.finish(m, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement purification experiments on uniformly sampled two-qubit states"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PURIKIT_VERSION);
  Context ctx;
  for (int i = 0; i < argc; ++i) ctx.command_line += (i ? " " : "") + std::string(argv[i]);
  app.add_option("--threads", ctx.threads, "Worker threads (default: PURIKIT_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  const std::string protocols = "bennett|deutsch|mfi|cnot";

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw states with hit-and-run and write a dump");
  auto* n_opt = sample->add_option("--n", sa.n, "States per chain")->check(CLI::PositiveNumber);
  auto* chains_opt =
      sample->add_option("--chains", sa.chains, "Independent chains")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sa.seed, "Base seed; chain c uses seed + c");
  sample->add_option("--burn-in", sa.burn_in, "Steps discarded per chain");
  sample->add_option("--thin", sa.thin, "Steps between kept states")->check(CLI::PositiveNumber);
  sample->add_flag("--paper-scale", sa.paper_scale, "10 chains of 10^6 unless --n/--chains given");
  sample->add_option("--out", sa.out, "Dump path")->required();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Iterate a fixed protocol over a dump");
  evaluate->add_option("--protocol", ea.protocol, protocols + "|ultimate")->required();
  evaluate->add_option("--iters", ea.iters, "Iterations");
  evaluate->add_flag("--mfi-outcome-factor", ea.mfi_outcome_factor,
                     "Report MFI success including the 1/4 outcome probability");
  evaluate->add_option("--in", ea.in, "Input dump")->required();
  evaluate->add_option("--out", ea.out, "Output CSV")->required();

  OptimizeArgs oa;
  auto* optimize_cmd = app.add_subcommand("optimize", "Run the adaptive variational protocol");
  optimize_cmd->add_option("--rounds", oa.rounds, "Rounds");
  optimize_cmd->add_option("--policy", oa.policy, "greedy | fixed:k");
  optimize_cmd->add_flag("--projector-first", oa.projector_first,
                         "Round 1 applies the entanglement-destroying projector");
  optimize_cmd->add_option("--ns", oa.ns, "Optimization subset size");
  optimize_cmd->add_option("--restarts", oa.restarts, "Optimizer starts per round");
  optimize_cmd->add_option("--max-iter", oa.max_iter, "Optimizer iterations per start (0: none)");
  optimize_cmd->add_option("--seed", oa.seed, "Seed for subsets and starting points");
  optimize_cmd->add_option("--angles", oa.angles, "Angle JSON path (default <out>.angles.json)");
  optimize_cmd->add_option("--in", oa.in, "Input dump")->required();
  optimize_cmd->add_option("--out", oa.out, "Output CSV")->required();

  FidelityArgs fa;
  auto* fidelity = app.add_subcommand("fidelity", "Average conditional fidelities per attractor");
  fidelity->add_option("--protocol", fa.protocol, protocols)->required();
  fidelity->add_option("--iters", fa.iters, "Iterations");
  fidelity->add_option("--in", fa.in, "Input dump")->required();
  fidelity->add_option("--out", fa.out, "Output CSV")->required();

  HistogramArgs ha;
  auto* hist = app.add_subcommand("histogram", "Concurrence histogram after some iterations");
  hist->add_option("--bins", ha.bins, "Bins on [0, 1]");
  hist->add_flag("--exclude-zero", ha.exclude_zero, "Leave out states with C = 0");
  hist->add_option("--iteration", ha.iteration, "Iterations applied before binning");
  hist->add_option("--protocol", ha.protocol, "none|" + protocols + "|optimized");
  hist->add_option("--angles", ha.angles, "Angle JSON from optimize (with --protocol optimized)");
  hist->add_option("--in", ha.in, "Input dump")->required();
  hist->add_option("--out", ha.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitFlags;
  }

  try {
    if (ctx.threads > 0) set_thread_count(ctx.threads);
    if (*sample) return cmd_sample(ctx, sa, n_opt->count() > 0, chains_opt->count() > 0);
    if (*evaluate) return cmd_evaluate(ctx, ea);
    if (*optimize_cmd) return cmd_optimize(ctx, oa);
    if (*fidelity) return cmd_fidelity(ctx, fa);
    if (*hist) return cmd_histogram(ctx, ha);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFlags;
  }
  return kExitFlags;
}
