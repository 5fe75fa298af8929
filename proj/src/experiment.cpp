#include "ftbf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "ftbf/baselines.hpp"
#include "ftbf/errors.hpp"

namespace ftbf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool has_feasible_point(const std::string& status) {
  return status == to_string(SolveStatus::kConverged) ||
         status == to_string(SolveStatus::kMaxIters);
}

struct Job {
  int point = 0;
  int scheme = 0;
  int run_id = 0;
};

}  // namespace

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNone:
      return "none";
    case SweepAxis::kPmaxDbm:
      return "pmax_dbm";
    case SweepAxis::kRbarBits:
      return "rbar_bits";
  }
  return "unknown";
}

const char* to_string(OutputFormat format) {
  return format == OutputFormat::kCsv ? "csv" : "jsonl";
}

std::vector<double> default_sweep(SweepAxis axis) {
  std::vector<double> out;
  if (axis == SweepAxis::kPmaxDbm) {
    for (int p = 10; p <= 38; p += 4) out.push_back(p);
  } else if (axis == SweepAxis::kRbarBits) {
    out = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
  }
  return out;
}

void ExperimentConfig::validate() const {
  system.validate();
  if (schemes.empty()) throw InvalidInput("scheme list is empty");
  const auto& registry = scheme_registry();
  for (const std::string& name : schemes) {
    const bool known = std::any_of(registry.begin(), registry.end(),
                                   [&](const SchemeDescriptor& d) { return d.name == name; });
    if (!known) throw InvalidInput("unknown scheme '" + name + "'");
  }
  if (mc_runs < 1) throw InvalidInput("mc_runs must be at least 1");
  if (threads < 1) throw InvalidInput("threads must be at least 1");
  if (sweep_axis == SweepAxis::kNone && !sweep_values.empty()) {
    throw InvalidInput("sweep_values given without a sweep_axis");
  }
  for (std::size_t i = 1; i < sweep_values.size(); ++i) {
    if (!(sweep_values[i] > sweep_values[i - 1])) {
      throw InvalidInput("sweep values must be strictly increasing");
    }
  }
  for (double v : sweep_points()) system_at(v).validate();
}

std::vector<double> ExperimentConfig::sweep_points() const {
  switch (sweep_axis) {
    case SweepAxis::kNone:
      return {0.0};
    case SweepAxis::kPmaxDbm:
    case SweepAxis::kRbarBits:
      return sweep_values.empty() ? default_sweep(sweep_axis) : sweep_values;
  }
  return {};
}

SystemConfig ExperimentConfig::system_at(double value) const {
  SystemConfig out = system;
  if (sweep_axis == SweepAxis::kPmaxDbm) out.pmax_dbm = value;
  if (sweep_axis == SweepAxis::kRbarBits) out.rbar_bits = value;
  return out;
}

std::uint64_t child_seed(std::uint64_t base_seed, std::uint64_t run_id) {
  // splitmix64 finalizer over a Weyl step per run.
  std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL * (run_id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Solution solve_scheme(const std::string& scheme, const ChannelRealization& channel,
                      const SystemConfig& config) {
  require_scheme(scheme);
  if (scheme == "ft") return sca_solve(channel, config);
  if (scheme == "conventional-dl") return conventional_dl_solve(channel, config);
  if (scheme == "maxmin-ft") return maxmin_solve(channel, config);
  throw UnsupportedScheme("scheme '" + scheme + "' has no solver");
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const RunObserver& observer) {
  config.validate();
  const std::vector<double> points = config.sweep_points();
  const int num_schemes = static_cast<int>(config.schemes.size());

  std::vector<Job> jobs;
  for (int p = 0; p < static_cast<int>(points.size()); ++p) {
    for (int s = 0; s < num_schemes; ++s) {
      for (int r = 0; r < config.mc_runs; ++r) jobs.push_back({p, s, r});
    }
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex observer_mutex;
  std::exception_ptr failure;

  auto run_jobs = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const SystemConfig system = config.system_at(points[job.point]);
      RunRecord& rec = records[i];
      rec.run_id = job.run_id;
      rec.seed = child_seed(config.base_seed, static_cast<std::uint64_t>(job.run_id));
      rec.scheme = config.schemes[job.scheme];
      rec.pmax_dbm = system.pmax_dbm;
      rec.rbar_bits = system.rbar_bits;

      const bool implemented = [&] {
        try {
          require_scheme(rec.scheme);
          return true;
        } catch (const UnsupportedScheme&) {
          return false;
        }
      }();
      if (!implemented) {
        rec.sum_throughput_bits = rec.min_throughput_bits = kNaN;
        rec.tau1 = rec.tau2 = kNaN;
        rec.status = "unsupported-scheme";
        if (observer) {
          std::lock_guard<std::mutex> lock(observer_mutex);
          observer(rec, Solution{});
        }
        continue;
      }

      const auto start = std::chrono::steady_clock::now();
      const ChannelRealization channel = sample_scenario(rec.seed, system);
      const Solution sol = solve_scheme(rec.scheme, channel, system);
      const auto stop = std::chrono::steady_clock::now();

      rec.sum_throughput_bits = sol.sum_throughput_bits();
      rec.min_throughput_bits = sol.min_throughput_bits();
      rec.tau1 = sol.tau.tau1;
      rec.tau2 = sol.tau.tau2;
      rec.iterations = sol.iterations_used;
      rec.status = to_string(sol.status);
      if (config.record_wall_time) {
        rec.wall_time = std::chrono::duration<double>(stop - start).count();
      }
      if (observer) {
        std::lock_guard<std::mutex> lock(observer_mutex);
        observer(rec, sol);
      }
    }
  };
  auto worker = [&]() {
    try {
      run_jobs();
    } catch (...) {
      std::lock_guard<std::mutex> lock(observer_mutex);
      if (!failure) failure = std::current_exception();
      next = jobs.size();
    }
  };

  const int num_threads = std::min<int>(config.threads, static_cast<int>(jobs.size()));
  if (num_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < num_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvalidInput("cannot summarize an empty record set");

  struct Acc {
    SummaryRow row;
    double sum_st = 0.0;
    double sum_min = 0.0;
    std::vector<double> iterations;
  };
  std::map<std::tuple<std::string, double, double>, Acc> groups;
  for (const RunRecord& r : records) {
    Acc& acc = groups[{r.scheme, r.pmax_dbm, r.rbar_bits}];
    acc.row.scheme = r.scheme;
    acc.row.pmax_dbm = r.pmax_dbm;
    acc.row.rbar_bits = r.rbar_bits;
    ++acc.row.runs;
    if (r.status == to_string(SolveStatus::kConverged)) {
      ++acc.row.converged;
      acc.iterations.push_back(r.iterations);
    }
    if (has_feasible_point(r.status)) {
      ++acc.row.with_throughput;
      acc.sum_st += r.sum_throughput_bits;
      acc.sum_min += r.min_throughput_bits;
    }
  }

  std::vector<SummaryRow> out;
  for (auto& [key, acc] : groups) {
    SummaryRow row = acc.row;
    row.feasibility_rate = static_cast<double>(row.converged) / row.runs;
    row.mean_sum_throughput_bits = row.with_throughput > 0 ? acc.sum_st / row.with_throughput : kNaN;
    row.mean_min_throughput_bits = row.with_throughput > 0 ? acc.sum_min / row.with_throughput : kNaN;
    row.median_iterations = median(acc.iterations);
    out.push_back(row);
  }
  return out;
}

void write_csv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << "run_id,seed,scheme,pmax_dbm,rbar_bits,sum_throughput_bits,min_throughput_bits,"
         "tau1,tau2,iterations,status,wall_time\n";
  for (const RunRecord& r : records) {
    out << r.run_id << ',' << r.seed << ',' << r.scheme << ',' << format_number(r.pmax_dbm) << ','
        << format_number(r.rbar_bits) << ',' << format_number(r.sum_throughput_bits) << ','
        << format_number(r.min_throughput_bits) << ',' << format_number(r.tau1) << ','
        << format_number(r.tau2) << ',' << r.iterations << ',' << r.status << ','
        << (r.wall_time < 0.0 ? "" : format_number(r.wall_time)) << '\n';
  }
}

void write_jsonl(const std::vector<RunRecord>& records, std::ostream& out) {
  auto number = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  for (const RunRecord& r : records) {
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["seed"] = r.seed;
    j["scheme"] = r.scheme;
    j["pmax_dbm"] = r.pmax_dbm;
    j["rbar_bits"] = r.rbar_bits;
    j["sum_throughput_bits"] = number(r.sum_throughput_bits);
    j["min_throughput_bits"] = number(r.min_throughput_bits);
    j["tau1"] = number(r.tau1);
    j["tau2"] = number(r.tau2);
    j["iterations"] = r.iterations;
    j["status"] = r.status;
    j["wall_time"] = r.wall_time < 0.0 ? nlohmann::json(nullptr) : nlohmann::json(r.wall_time);
    out << j.dump() << '\n';
  }
}

void write_records(const std::vector<RunRecord>& records, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::kCsv) {
    write_csv(records, out);
  } else {
    write_jsonl(records, out);
  }
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "scheme,pmax_dbm,rbar_bits,runs,converged,feasibility_rate,with_throughput,"
         "mean_sum_throughput_bits,mean_min_throughput_bits,median_iterations\n";
  for (const SummaryRow& r : rows) {
    out << r.scheme << ',' << format_number(r.pmax_dbm) << ',' << format_number(r.rbar_bits) << ','
        << r.runs << ',' << r.converged << ',' << format_number(r.feasibility_rate) << ','
        << r.with_throughput << ',' << format_number(r.mean_sum_throughput_bits) << ','
        << format_number(r.mean_min_throughput_bits) << ',' << format_number(r.median_iterations)
        << '\n';
  }
}

}  // namespace ftbf
