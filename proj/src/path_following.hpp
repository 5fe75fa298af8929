#pragma once

// Shared path-following loop behind the fractional-time solvers and the
// conventional downlink baseline.

#include "ftbf/channel.hpp"
#include "ftbf/rates.hpp"
#include "ftbf/sca.hpp"
#include "ftbf/subproblem.hpp"
#include "ftbf/surrogate.hpp"

namespace ftbf::detail {

struct Iterate {
  BeamformerSet beams;
  AlphaSplit alpha;
};

struct Scenario {
  const ChannelRealization& channel;
  RateMode mode;
  double pmax_watts;
  SolverSettings settings;
};

/// Unit-phase matched-filter beams using half the power budget; alpha = (2, 2).
Iterate matched_filter_start(const Scenario& sc);

/// kSum: QoS floors are `targets`. kMinRatio: `targets` are the ratio denominators.
struct Objective {
  ObjectiveMode mode;
  QosTargets targets;
};

double true_objective(const Scenario& sc, const Objective& obj, const Iterate& it);

InitialPoint restore_feasibility(const Scenario& sc, const QosTargets& targets,
                                 const Iterate& start);

/// Runs the main loop from a feasible start and fills every Solution field
/// except the init traces.
Solution follow_path(const Scenario& sc, const Objective& obj, const Iterate& start);

}  // namespace ftbf::detail
