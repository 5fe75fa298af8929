#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ftbf/channel.hpp"
#include "ftbf/rates.hpp"
#include "ftbf/subproblem.hpp"
#include "ftbf/surrogate.hpp"

namespace ftbf {

enum class SolveStatus { kConverged, kMaxIters, kInfeasibleInit, kSubproblemFailure };

const char* to_string(SolveStatus status);

/// Diagnostics for one convex step from iterate kappa to kappa + 1.
struct IterationRecord {
  double objective_at_expansion = 0.0;  // true objective at iterate kappa
  double surrogate_at_expansion = 0.0;  // minorant objective at iterate kappa
  double surrogate_optimum = 0.0;       // optimal value of the convex step
  double objective = 0.0;               // true objective at iterate kappa + 1
  /// Worst signed residual at iterate kappa + 1 of Re{h^H w} >= 0,
  /// 1/alpha_1 + 1/alpha_2 <= 1 and the time-weighted power budget (relative to P_max).
  double safety_margin = 0.0;
  int conic_iterations = 0;
  /// The convex solve stopped short of its tolerance; the step was kept
  /// because its point passed the true-constraint and ascent checks.
  bool reduced_accuracy = false;
};

struct Solution {
  BeamformerSet beams;
  TimeSplit tau{1.0, 1.0};
  AlphaSplit alpha{1.0, 1.0};
  std::array<Eigen::VectorXd, kNumZones> rates_nats;
  double sum_throughput_nats = 0.0;
  double min_throughput_nats = 0.0;
  double objective = 0.0;  // sum or min throughput, whichever was optimized

  /// Objective at the starting point of the main loop, then after every step.
  std::vector<double> objective_trace;
  std::vector<IterationRecord> iterations;
  /// True min ratio rate/target across feasibility-restoration steps.
  std::vector<double> init_trace;
  std::vector<IterationRecord> init_iterations;

  int iterations_used = 0;
  SolveStatus status = SolveStatus::kInfeasibleInit;
  bool has_feasible_point = false;
  std::string message;

  double sum_throughput_bits() const;
  double min_throughput_bits() const;
};

/// Result of the feasibility-restoration phase.
struct InitialPoint {
  BeamformerSet beams;
  AlphaSplit alpha;
  bool feasible = false;
  std::vector<double> ratio_trace;
  std::vector<IterationRecord> iterations;
  std::string message;
};

/// Starts from alpha = (2, 2) and matched-filter beams at half the power
/// budget, then maximizes the worst minorant-to-target ratio until every user
/// with a positive target meets it.
InitialPoint find_initial_point(const ChannelRealization& channel, const SystemConfig& config);
InitialPoint find_initial_point(const ChannelRealization& channel, const SystemConfig& config,
                                const QosTargets& targets);

/// Sum-throughput maximization over beams and the time split.
Solution sca_solve(const ChannelRealization& channel, const SystemConfig& config);
Solution sca_solve(const ChannelRealization& channel, const SystemConfig& config,
                   const QosTargets& targets);

/// Max-min throughput over beams and the time split, no QoS floors.
Solution maxmin_solve(const ChannelRealization& channel, const SystemConfig& config);

/// Convex step the sum-throughput loop solves at iterate `iteration`, where
/// 0 is the restored starting point. kConventional gives the baseline's step.
/// Throws InvalidInput when restoration fails or the loop stops earlier.
Subproblem sum_step_at(const ChannelRealization& channel, const SystemConfig& config,
                       RateMode mode, int iteration);

}  // namespace ftbf
