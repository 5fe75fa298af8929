#include "ftbf/sca.hpp"

#include "ftbf/errors.hpp"
#include "ftbf/units.hpp"
#include "path_following.hpp"

namespace ftbf {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIters: return "max-iters";
    case SolveStatus::kInfeasibleInit: return "infeasible-init";
    case SolveStatus::kSubproblemFailure: return "subproblem-failure";
  }
  return "unknown";
}

double Solution::sum_throughput_bits() const { return units::nats_to_bits(sum_throughput_nats); }

double Solution::min_throughput_bits() const { return units::nats_to_bits(min_throughput_nats); }

namespace {

detail::Scenario ft_scenario(const ChannelRealization& channel, const SystemConfig& config) {
  config.validate();
  return {channel, RateMode::kFractionalTime, config.pmax_watts(), config.solver};
}

Solution infeasible_solution(const ChannelRealization& channel, InitialPoint init,
                             RateMode mode) {
  Solution sol;
  sol.status = SolveStatus::kInfeasibleInit;
  sol.beams = std::move(init.beams);
  sol.alpha = init.alpha;
  sol.tau = mode == RateMode::kFractionalTime ? from_alpha(init.alpha) : TimeSplit{1.0, 1.0};
  sol.rates_nats = user_rates(channel, sol.beams, sol.tau, mode);
  sol.sum_throughput_nats = sol.rates_nats[0].sum() + sol.rates_nats[1].sum();
  sol.min_throughput_nats = std::min(sol.rates_nats[0].minCoeff(), sol.rates_nats[1].minCoeff());
  sol.init_trace = std::move(init.ratio_trace);
  sol.init_iterations = std::move(init.iterations);
  sol.message = std::move(init.message);
  return sol;
}

}  // namespace

InitialPoint find_initial_point(const ChannelRealization& channel, const SystemConfig& config,
                                const QosTargets& targets) {
  const auto sc = ft_scenario(channel, config);
  return detail::restore_feasibility(sc, targets, detail::matched_filter_start(sc));
}

InitialPoint find_initial_point(const ChannelRealization& channel, const SystemConfig& config) {
  return find_initial_point(channel, config,
                            uniform_qos(channel.users_per_zone(), config.rbar_nats()));
}

Solution sca_solve(const ChannelRealization& channel, const SystemConfig& config,
                   const QosTargets& targets) {
  const auto sc = ft_scenario(channel, config);
  InitialPoint init = detail::restore_feasibility(sc, targets, detail::matched_filter_start(sc));
  if (!init.feasible) return infeasible_solution(channel, std::move(init), sc.mode);
  Solution sol = detail::follow_path(sc, {ObjectiveMode::kSum, targets},
                                     {init.beams, init.alpha});
  sol.init_trace = std::move(init.ratio_trace);
  sol.init_iterations = std::move(init.iterations);
  return sol;
}

Solution sca_solve(const ChannelRealization& channel, const SystemConfig& config) {
  return sca_solve(channel, config, uniform_qos(channel.users_per_zone(), config.rbar_nats()));
}

Solution maxmin_solve(const ChannelRealization& channel, const SystemConfig& config) {
  const auto sc = ft_scenario(channel, config);
  const QosTargets ones = uniform_qos(channel.users_per_zone(), 1.0);
  return detail::follow_path(sc, {ObjectiveMode::kMinRatio, ones},
                             detail::matched_filter_start(sc));
}

Subproblem sum_step_at(const ChannelRealization& channel, const SystemConfig& config,
                       RateMode mode, int iteration) {
  if (iteration < 0) throw InvalidInput("iteration must be >= 0");
  config.validate();
  detail::Scenario sc{channel, mode, config.pmax_watts(), config.solver};
  const QosTargets targets = uniform_qos(channel.users_per_zone(), config.rbar_nats());
  const InitialPoint init =
      detail::restore_feasibility(sc, targets, detail::matched_filter_start(sc));
  if (!init.feasible) throw InvalidInput("no feasible starting point: " + init.message);

  detail::Iterate at{init.beams, init.alpha};
  if (iteration > 0) {
    sc.settings.max_iters = iteration;
    sc.settings.conv_tol = 0.0;
    const Solution sol = detail::follow_path(sc, {ObjectiveMode::kSum, targets}, at);
    if (sol.iterations_used != iteration) {
      throw InvalidInput("loop stopped after " + std::to_string(sol.iterations_used) +
                         " iterations");
    }
    at = {sol.beams, sol.alpha};
  }
  const SurrogateCoeffs coeffs =
      surrogate_coeffs(channel, at.beams, at.alpha, mode, config.solver.coeff_floor);
  return build_subproblem(coeffs, channel, at.beams, at.alpha, targets, config.pmax_watts(),
                          config.solver, ObjectiveMode::kSum);
}

}  // namespace ftbf
