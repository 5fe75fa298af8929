#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "ftbf/channel.hpp"
#include "ftbf/conic.hpp"
#include "ftbf/rates.hpp"
#include "ftbf/surrogate.hpp"

namespace ftbf {

/// kSum maximizes the sum of the per-user minorants under the QoS floors.
/// kMinRatio maximizes t subject to minorant_{i,k} >= t * target_{i,k} over
/// users with a positive target; no QoS floors are imposed.
enum class ObjectiveMode { kSum, kMinRatio };

/// Where each quantity lives in the decision vector. The solver works on
/// normalized quantities: beams divided by sqrt(P_max) and channels multiplied
/// by sqrt(P_max) / sigma, so every SINR and power ratio is unchanged. Time
/// variables are measured relative to the expansion point: alpha_i is stored
/// as alpha_i / alpha_i^prev, u_i as u_i alpha_i^prev and p as p alpha_2^prev,
/// which keeps every cone balanced near the expansion point.
struct SubproblemLayout {
  RateMode mode = RateMode::kFractionalTime;
  ObjectiveMode objective = ObjectiveMode::kSum;
  int num_antennas = 0;
  int users_per_zone = 0;
  double beam_scale = 1.0;  // physical beam = beam_scale * normalized beam
  std::array<double, kNumZones> alpha_scale{1.0, 1.0};  // alpha_i^prev

  /// First index of user (i,k)'s beam; entries [0, Nt) are real parts and
  /// [Nt, 2 Nt) imaginary parts.
  std::array<std::vector<int>, kNumZones> beam;
  std::array<int, kNumZones> alpha{-1, -1};
  std::array<int, kNumZones> inv_alpha{-1, -1};  // u_i >= 1 / alpha_i
  std::array<std::vector<int>, kNumZones> rate;   // -1 when the user has no epigraph
  std::array<std::vector<int>, kNumZones> quad;   // normalized quadratic-over-linear term
  int zone1_power = -1;  // t_1 >= ||w_1||^2
  int zone2_power = -1;  // p >= ||w_2||^2 / alpha_2 (stored as p alpha_2^prev)
  int min_ratio = -1;

  // Counts of constraints in problem terms, not conic rows.
  int qos_constraints = 0;
  int sign_constraints = 0;
  int trust_constraints = 0;
  int time_constraints = 0;
  int power_constraints = 0;

  int core_constraint_count() const {
    return qos_constraints + sign_constraints + trust_constraints + time_constraints +
           power_constraints;
  }
  /// Complex beam entries plus time variables.
  int core_variable_count() const {
    return kNumZones * users_per_zone * num_antennas + (alpha[0] >= 0 ? kNumZones : 0);
  }
};

struct Subproblem {
  conic::ConicProblem problem;
  SubproblemLayout layout;
};

/// Assembles the convex program solved at one path-following step around the
/// expansion point (w_prev, alpha_prev). The rate mode is taken from coeffs;
/// in kConventional mode there are no time variables and the power budget is
/// ||w_1||^2 + ||w_2||^2 <= P_max.
Subproblem build_subproblem(const SurrogateCoeffs& coeffs, const ChannelRealization& channel,
                            const BeamformerSet& w_prev, const AlphaSplit& alpha_prev,
                            const QosTargets& targets, double pmax_watts,
                            const SolverSettings& settings, ObjectiveMode objective);

Subproblem build_subproblem(const SurrogateCoeffs& coeffs, const ChannelRealization& channel,
                            const BeamformerSet& w_prev, const AlphaSplit& alpha_prev,
                            const SystemConfig& config, ObjectiveMode objective);

BeamformerSet extract_beams(const SubproblemLayout& layout, const Eigen::VectorXd& x);

/// Time variables of a solution; (1, 1) for the conventional layout.
AlphaSplit extract_alpha(const SubproblemLayout& layout, const Eigen::VectorXd& x);

/// Decision vector for (w, alpha) with every auxiliary set to its tightest
/// value. Requires (w, alpha) inside the trust region of coeffs.
Eigen::VectorXd pack_point(const Subproblem& sub, const SurrogateCoeffs& coeffs,
                           const ChannelRealization& channel, const BeamformerSet& w,
                           const AlphaSplit& alpha, const QosTargets& targets);

/// Left side of the inner-approximated power constraint, in watts:
/// ||w_1||^2 + ||w_2||^2/alpha_2 - 2Re<w_1^prev, w_1>/alpha_2^prev
///   + ||w_1^prev||^2 alpha_2 / (alpha_2^prev)^2.
double inner_power(const BeamformerSet& w, const AlphaSplit& alpha,
                   const BeamformerSet& w_prev, const AlphaSplit& alpha_prev);

/// (1 - 1/alpha_2) ||w_1||^2 + ||w_2||^2 / alpha_2, in watts.
double time_weighted_power(const BeamformerSet& w, const AlphaSplit& alpha);

}  // namespace ftbf
