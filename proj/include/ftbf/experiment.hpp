#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ftbf/channel.hpp"
#include "ftbf/sca.hpp"

namespace ftbf {

enum class SweepAxis { kNone, kPmaxDbm, kRbarBits };
enum class OutputFormat { kCsv, kJsonl };

const char* to_string(SweepAxis axis);
const char* to_string(OutputFormat format);

/// Default grids: 10, 14, ..., 38 dBm and 0.2, 0.4, ..., 1.2 bits/s/Hz.
std::vector<double> default_sweep(SweepAxis axis);

struct ExperimentConfig {
  SystemConfig system;
  std::vector<std::string> schemes{"ft"};
  SweepAxis sweep_axis = SweepAxis::kNone;
  std::vector<double> sweep_values;  // empty with an axis set means default_sweep(axis)
  int mc_runs = 100;
  std::uint64_t base_seed = 1;
  std::string output;           // empty writes records to stdout
  std::string summary_output;   // empty prints the summary table only
  OutputFormat format = OutputFormat::kCsv;
  int threads = 1;
  bool record_wall_time = false;  // off keeps the output byte-identical across reruns

  /// Throws InvalidInput on a violated invariant. Unknown scheme names are
  /// rejected; declared but unimplemented ones are accepted here.
  void validate() const;

  /// Sweep values in use, or the single configured value when there is no sweep.
  std::vector<double> sweep_points() const;

  /// System config with the sweep variable set to `value`.
  SystemConfig system_at(double value) const;
};

/// Parses the flat key/value config format. Throws ConfigError with the
/// offending key and line number.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

/// Seed of Monte Carlo draw `run_id`. Every scheme and sweep point with the
/// same run_id sees the same channel.
std::uint64_t child_seed(std::uint64_t base_seed, std::uint64_t run_id);

struct RunRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string scheme;
  double pmax_dbm = 0.0;
  double rbar_bits = 0.0;
  double sum_throughput_bits = 0.0;  // NaN when the scheme did not run
  double min_throughput_bits = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  int iterations = 0;
  std::string status;
  double wall_time = -1.0;  // seconds; negative when timing is disabled
};

/// Runs one implemented scheme by registry name. Throws UnsupportedScheme
/// otherwise.
Solution solve_scheme(const std::string& scheme, const ChannelRealization& channel,
                      const SystemConfig& config);

/// Called once per finished run, serialized under a lock, in completion order.
using RunObserver = std::function<void(const RunRecord&, const Solution&)>;

/// Runs every (sweep point, scheme, draw) combination on config.threads
/// workers. Records come back ordered by sweep point, then scheme in config
/// order, then run_id, whatever the thread count.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const RunObserver& observer = {});

struct SummaryRow {
  std::string scheme;
  double pmax_dbm = 0.0;
  double rbar_bits = 0.0;
  int runs = 0;
  int converged = 0;
  int with_throughput = 0;   // converged or max-iters: runs with a feasible point
  double feasibility_rate = 0.0;  // converged / runs
  double mean_sum_throughput_bits = 0.0;  // over with_throughput runs, NaN if none
  double mean_min_throughput_bits = 0.0;
  double median_iterations = 0.0;  // over converged runs, NaN if none
};

/// Groups by (scheme, pmax_dbm, rbar_bits) in that sort order. Throws
/// InvalidInput on an empty record set.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

/// Column order: run_id, seed, scheme, pmax_dbm, rbar_bits, sum_throughput_bits,
/// min_throughput_bits, tau1, tau2, iterations, status, wall_time.
void write_csv(const std::vector<RunRecord>& records, std::ostream& out);
void write_jsonl(const std::vector<RunRecord>& records, std::ostream& out);
void write_records(const std::vector<RunRecord>& records, OutputFormat format, std::ostream& out);

/// Column order: scheme, pmax_dbm, rbar_bits, runs, converged, feasibility_rate,
/// with_throughput, mean_sum_throughput_bits, mean_min_throughput_bits, median_iterations.
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);

}  // namespace ftbf
