// Command-line driver: Monte Carlo experiments, single-realization solves and
// subproblem export.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ftbf/baselines.hpp"
#include "ftbf/conic.hpp"
#include "ftbf/errors.hpp"
#include "ftbf/experiment.hpp"
#include "ftbf/rates.hpp"
#include "ftbf/sca.hpp"
#include "ftbf/units.hpp"

namespace {

using ftbf::ExperimentConfig;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::vector<std::string> schemes;
  std::optional<int> threads;
  int iteration = 0;
};

ExperimentConfig load_config(const CommonOptions& opt) {
  ExperimentConfig config;
  if (!opt.config_path.empty()) config = ftbf::load_experiment_config(opt.config_path);
  if (opt.seed) config.base_seed = *opt.seed;
  if (!opt.out.empty()) config.output = opt.out;
  if (opt.format == "csv") config.format = ftbf::OutputFormat::kCsv;
  if (opt.format == "jsonl") config.format = ftbf::OutputFormat::kJsonl;
  if (!opt.schemes.empty()) config.schemes = opt.schemes;
  if (opt.threads) config.threads = *opt.threads;
  return config;
}

/// Writes to `path`, or stdout when it is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

nlohmann::ordered_json solution_json(const std::string& scheme, std::uint64_t seed,
                                     const ftbf::ChannelRealization& channel,
                                     const ftbf::SystemConfig& system, const ftbf::Solution& sol) {
  using ftbf::units::nats_to_bits;
  nlohmann::ordered_json j;
  j["scheme"] = scheme;
  j["seed"] = seed;
  j["status"] = ftbf::to_string(sol.status);
  if (!sol.message.empty()) j["message"] = sol.message;
  j["iterations"] = sol.iterations_used;
  j["init_iterations"] = sol.init_iterations.size();
  j["tau"] = {sol.tau.tau1, sol.tau.tau2};
  j["sum_throughput_bits"] = sol.sum_throughput_bits();
  j["min_throughput_bits"] = sol.min_throughput_bits();
  for (int zone = 0; zone < ftbf::kNumZones; ++zone) {
    std::vector<double> bits;
    for (double r : sol.rates_nats[zone]) bits.push_back(nats_to_bits(r));
    j["rates_bits"]["zone" + std::to_string(zone + 1)] = bits;
  }
  std::vector<double> trace;
  for (double v : sol.objective_trace) trace.push_back(nats_to_bits(v));
  j["objective_trace_bits"] = trace;

  const ftbf::QosTargets targets =
      ftbf::uniform_qos(channel.users_per_zone(), scheme == "maxmin-ft" ? 0.0 : system.rbar_nats());
  const auto report =
      scheme == "conventional-dl"
          ? ftbf::check_conventional_feasibility(channel, sol.beams, targets, system.pmax_watts(),
                                                 system.solver.feas_tol)
          : ftbf::check_feasibility(channel, sol.beams, sol.tau, targets, system.pmax_watts(),
                                    system.solver.feas_tol);
  j["feasible"] = report.feasible;
  j["worst_residual"] = report.worst_residual();
  return j;
}

int run_command(const CommonOptions& opt) {
  ExperimentConfig config = load_config(opt);
  for (const auto& name : config.schemes) ftbf::require_scheme(name);
  config.validate();

  const auto records = ftbf::run_experiment(config);
  Output out(config.output);
  ftbf::write_records(records, config.format, out.stream());

  const auto summary = ftbf::summarize(records);
  if (!config.summary_output.empty()) {
    Output s(config.summary_output);
    ftbf::write_summary_csv(summary, s.stream());
  } else {
    ftbf::write_summary_csv(summary, config.output.empty() ? std::cerr : std::cout);
  }
  return 0;
}

int solve_command(const CommonOptions& opt, const std::string& default_scheme) {
  ExperimentConfig config = load_config(opt);
  const std::string scheme = opt.schemes.empty() ? default_scheme : opt.schemes.front();
  ftbf::require_scheme(scheme);
  config.validate();

  const std::uint64_t seed = opt.seed.value_or(0);
  const auto channel = ftbf::sample_scenario(seed, config.system);
  const auto sol = ftbf::solve_scheme(scheme, channel, config.system);
  Output out(opt.out);
  out.stream() << solution_json(scheme, seed, channel, config.system, sol).dump(2) << '\n';
  return sol.status == ftbf::SolveStatus::kSubproblemFailure ? 3 : 0;
}

int dump_command(const CommonOptions& opt) {
  ExperimentConfig config = load_config(opt);
  const std::string scheme = opt.schemes.empty() ? "ft" : opt.schemes.front();
  ftbf::require_scheme(scheme);
  if (scheme == "maxmin-ft") {
    throw ftbf::InvalidInput("dump-subproblem exports sum-throughput steps: use ft or conventional-dl");
  }
  config.validate();

  const auto mode = scheme == "ft" ? ftbf::RateMode::kFractionalTime : ftbf::RateMode::kConventional;
  const auto channel = ftbf::sample_scenario(opt.seed.value_or(0), config.system);
  const auto sub = ftbf::sum_step_at(channel, config.system, mode, opt.iteration);
  Output out(opt.out);
  ftbf::conic::write_cbf(sub.problem, out.stream());
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_threads) {
  cmd->add_option("--config", opt.config_path, "Config file (flat key: value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opt.seed, "Base seed (run) or scenario seed (single solves)");
  cmd->add_option("--out", opt.out, "Output path, stdout when omitted");
  if (with_threads) {
    cmd->add_option("--format", opt.format, "Record format")->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_option("--scheme", opt.schemes, "Scheme name, repeatable");
    cmd->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
  } else {
    cmd->add_option("--scheme", opt.schemes, "Scheme name")->expected(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-time MISO beamforming solver and Monte Carlo harness"};
  app.require_subcommand(1);

  CommonOptions run_opt, solve_opt, maxmin_opt, baseline_opt, dump_opt;
  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment from a config file");
  add_common(run, run_opt, true);
  run->get_option("--config")->required();

  auto* solve = app.add_subcommand("solve", "Solve one realization and print the solution");
  add_common(solve, solve_opt, false);
  auto* maxmin = app.add_subcommand("maxmin", "Max-min throughput on one realization");
  add_common(maxmin, maxmin_opt, false);
  auto* baseline = app.add_subcommand("baseline", "Conventional downlink on one realization");
  add_common(baseline, baseline_opt, false);
  auto* dump = app.add_subcommand("dump-subproblem", "Write one convex step in CBF format");
  add_common(dump, dump_opt, false);
  dump->add_option("--iteration", dump_opt.iteration, "Main-loop iterate to expand at")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(run_opt);
    if (*solve) return solve_command(solve_opt, "ft");
    if (*maxmin) return solve_command(maxmin_opt, "maxmin-ft");
    if (*baseline) return solve_command(baseline_opt, "conventional-dl");
    if (*dump) return dump_command(dump_opt);
  } catch (const ftbf::UnsupportedScheme& e) {
    std::cerr << "error: unsupported scheme: " << e.what() << '\n';
    return 2;
  } catch (const ftbf::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
