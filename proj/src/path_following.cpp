#include "path_following.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ftbf/conic.hpp"
#include "ftbf/errors.hpp"

namespace ftbf::detail {
namespace {

constexpr double kAscentTol = 1e-6;

TimeSplit time_split(const Scenario& sc, const AlphaSplit& alpha) {
  return sc.mode == RateMode::kFractionalTime ? from_alpha(alpha) : TimeSplit{1.0, 1.0};
}

std::array<Eigen::VectorXd, kNumZones> rates(const Scenario& sc, const Iterate& it) {
  return user_rates(sc.channel, it.beams, time_split(sc, it.alpha), sc.mode);
}

/// Sum, or min over positive targets of value / target.
template <typename ValueFn>
double aggregate(const Scenario& sc, const Objective& obj, ValueFn value) {
  const int kz = sc.channel.users_per_zone();
  if (obj.mode == ObjectiveMode::kSum) {
    double total = 0.0;
    for (int zone = 0; zone < kNumZones; ++zone) {
      for (int k = 0; k < kz; ++k) total += value(UserIndex{zone, k});
    }
    return total;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < kz; ++k) {
      if (obj.targets[zone](k) > 0.0) {
        worst = std::min(worst, value(UserIndex{zone, k}) / obj.targets[zone](k));
      }
    }
  }
  return worst;
}

double safety_margin(const Scenario& sc, const Iterate& it) {
  const double sigma = std::sqrt(sc.channel.sigma2);
  double worst = std::numeric_limits<double>::infinity();
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < sc.channel.users_per_zone(); ++k) {
      const UserIndex u{zone, k};
      worst = std::min(worst, sc.channel.channel(u).dot(it.beams.beam(u)).real() / sigma);
    }
  }
  if (sc.mode == RateMode::kFractionalTime) {
    worst = std::min(worst, 1.0 - 1.0 / it.alpha.alpha1 - 1.0 / it.alpha.alpha2);
    worst = std::min(worst,
                     (sc.pmax_watts - time_weighted_power(it.beams, it.alpha)) / sc.pmax_watts);
  } else {
    worst = std::min(worst, (sc.pmax_watts - it.beams.zone_power(0) - it.beams.zone_power(1)) /
                                sc.pmax_watts);
  }
  return worst;
}

bool within_reduced_accuracy(const conic::SolveStats& stats, double tol) {
  return stats.primal_residual <= tol && stats.dual_residual <= tol &&
         std::min(stats.gap, stats.relative_gap) <= tol;
}

/// QoS floors of the sum objective hold for the true rates.
bool meets_floors(const Scenario& sc, const Objective& obj, const Iterate& it) {
  if (obj.mode != ObjectiveMode::kSum) return true;
  const auto r = rates(sc, it);
  for (int zone = 0; zone < kNumZones; ++zone) {
    if ((r[zone] - obj.targets[zone]).minCoeff() < -sc.settings.feas_tol) return false;
  }
  return true;
}

struct StepResult {
  bool ok = false;
  Iterate next;
  IterationRecord record;
  std::string message;
};

StepResult step(const Scenario& sc, const Objective& obj, const Iterate& cur) {
  StepResult out;
  const SurrogateCoeffs coeffs =
      surrogate_coeffs(sc.channel, cur.beams, cur.alpha, sc.mode, sc.settings.coeff_floor);
  const Subproblem sub = build_subproblem(coeffs, sc.channel, cur.beams, cur.alpha, obj.targets,
                                          sc.pmax_watts, sc.settings, obj.mode);
  conic::SolverOptions options;
  options.feastol = options.abstol = options.reltol = sc.settings.conic_tol;
  options.max_iters = sc.settings.conic_max_iters;
  const conic::ConicSolution sol = conic::solve(sub.problem, options);
  out.record.conic_iterations = sol.stats.iterations;
  const std::string failure =
      std::string("convex step ended with status ") + conic::to_string(sol.status);
  const bool optimal = sol.status == conic::ConicStatus::kOptimal;
  if (!optimal && !(sol.status == conic::ConicStatus::kNumericalFailure &&
                    within_reduced_accuracy(sol.stats, sc.settings.feas_tol))) {
    out.message = failure;
    return out;
  }
  out.next.beams = extract_beams(sub.layout, sol.x);
  out.next.alpha = extract_alpha(sub.layout, sol.x);

  out.record.objective_at_expansion = true_objective(sc, obj, cur);
  out.record.surrogate_at_expansion = aggregate(sc, obj, [&](UserIndex u) {
    return eval_surrogate(coeffs, sc.channel, cur.beams, cur.alpha, u);
  });
  out.record.surrogate_optimum = -sol.objective;
  out.record.objective = true_objective(sc, obj, out.next);
  out.record.safety_margin = safety_margin(sc, out.next);
  out.record.reduced_accuracy = !optimal;

  // A reduced-accuracy step is only taken if it is verifiably safe.
  if (!optimal && !(out.record.safety_margin >= -sc.settings.feas_tol &&
                    out.record.objective >= out.record.objective_at_expansion - kAscentTol &&
                    meets_floors(sc, obj, out.next))) {
    out.message = failure;
    return out;
  }
  out.ok = true;
  return out;
}

}  // namespace

Iterate matched_filter_start(const Scenario& sc) {
  const int nt = sc.channel.num_antennas();
  const int kz = sc.channel.users_per_zone();
  // (1 - 1/2)||w_1||^2 + ||w_2||^2 / 2 = K theta^2 for FT; 2K theta^2 otherwise.
  const double users = sc.mode == RateMode::kFractionalTime ? kz : 2.0 * kz;
  const double theta = std::sqrt(0.5 * sc.pmax_watts / users);
  Iterate it;
  it.beams = BeamformerSet::zeros(nt, kz);
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < kz; ++k) {
      const auto h = sc.channel.h[zone].col(k);
      const double norm = h.norm();
      if (!(norm > 0.0)) throw InvalidInput("zero channel vector");
      it.beams.w[zone].col(k) = theta * h / norm;  // h^H w = theta ||h||, real positive
    }
  }
  it.alpha = sc.mode == RateMode::kFractionalTime ? AlphaSplit{2.0, 2.0} : AlphaSplit{1.0, 1.0};
  return it;
}

double true_objective(const Scenario& sc, const Objective& obj, const Iterate& it) {
  const auto r = rates(sc, it);
  return aggregate(sc, obj, [&](UserIndex u) { return r[u.zone](u.user); });
}

InitialPoint restore_feasibility(const Scenario& sc, const QosTargets& targets,
                                 const Iterate& start) {
  InitialPoint out;
  out.beams = start.beams;
  out.alpha = start.alpha;
  bool any = false;
  for (const auto& t : targets) any = any || (t.array() > 0.0).any();
  if (!any) {
    out.feasible = true;
    return out;
  }
  const Objective obj{ObjectiveMode::kMinRatio, targets};
  Iterate cur = start;
  out.ratio_trace.push_back(true_objective(sc, obj, cur));
  const int window = sc.settings.init_stall_window;
  for (int iter = 0; iter < sc.settings.init_max_iters; ++iter) {
    if (out.ratio_trace.back() >= 1.0) break;
    StepResult st = step(sc, obj, cur);
    if (!st.ok) {
      out.message = "feasibility restoration: " + st.message;
      return out;
    }
    cur = std::move(st.next);
    out.beams = cur.beams;
    out.alpha = cur.alpha;
    out.iterations.push_back(st.record);
    out.ratio_trace.push_back(st.record.objective);
    const int n = static_cast<int>(out.ratio_trace.size()) - 1;
    if (out.ratio_trace.back() < 1.0 && n >= window) {
      const double before = out.ratio_trace[n - window];
      if (out.ratio_trace[n] - before <
          sc.settings.init_stall_tol * std::max(1.0, std::abs(before))) {
        out.message = "QoS targets look infeasible: worst rate/target ratio stalled at " +
                      std::to_string(out.ratio_trace[n]);
        return out;
      }
    }
  }
  out.feasible = out.ratio_trace.back() >= 1.0;
  if (!out.feasible) out.message = "feasibility restoration hit its iteration cap";
  return out;
}

Solution follow_path(const Scenario& sc, const Objective& obj, const Iterate& start) {
  Solution sol;
  Iterate cur = start;
  sol.has_feasible_point = true;
  sol.objective_trace.push_back(true_objective(sc, obj, cur));
  sol.status = SolveStatus::kMaxIters;
  for (int iter = 0; iter < sc.settings.max_iters; ++iter) {
    StepResult st = step(sc, obj, cur);
    if (!st.ok) {
      sol.status = SolveStatus::kSubproblemFailure;
      sol.message = st.message;
      break;
    }
    const double before = sol.objective_trace.back();
    cur = std::move(st.next);
    sol.iterations.push_back(st.record);
    sol.objective_trace.push_back(st.record.objective);
    ++sol.iterations_used;
    if (std::abs(st.record.objective - before) <=
        sc.settings.conv_tol * std::max(1.0, std::abs(before))) {
      sol.status = SolveStatus::kConverged;
      break;
    }
  }

  sol.beams = cur.beams;
  sol.alpha = cur.alpha;
  sol.tau = time_split(sc, cur.alpha);
  sol.rates_nats = rates(sc, cur);
  sol.sum_throughput_nats = sol.rates_nats[0].sum() + sol.rates_nats[1].sum();
  sol.min_throughput_nats = std::min(sol.rates_nats[0].minCoeff(), sol.rates_nats[1].minCoeff());
  sol.objective = sol.objective_trace.back();
  return sol;
}

}  // namespace ftbf::detail
