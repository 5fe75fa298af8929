#pragma once

#include <array>

#include <Eigen/Dense>

#include "ftbf/channel.hpp"

namespace ftbf {

/// Column k of w[i] is the beamformer w_{i,k}.
struct BeamformerSet {
  std::array<Eigen::MatrixXcd, kNumZones> w;

  static BeamformerSet zeros(int num_antennas, int users_per_zone);

  auto beam(UserIndex u) const { return w[u.zone].col(u.user); }
  auto beam(UserIndex u) { return w[u.zone].col(u.user); }
  double zone_power(int zone) const { return w[zone].squaredNorm(); }
};

struct TimeSplit {
  double tau1 = 0.5;
  double tau2 = 0.5;

  double operator[](int zone) const { return zone == 0 ? tau1 : tau2; }
};

/// Per-user minimum throughput, nats/s/Hz, indexed like the channel.
using QosTargets = std::array<Eigen::VectorXd, kNumZones>;

QosTargets uniform_qos(int users_per_zone, double nats);

/// kFractionalTime: interference only from the same zone (each zone has its own slot).
/// kConventional: all 2K users share the slot.
enum class RateMode { kFractionalTime, kConventional };

double sinr(const ChannelRealization& channel, const BeamformerSet& beams, UserIndex u,
            RateMode mode);

/// tau_i ln(1 + SINR); zero when tau_i is zero.
double ft_rate(const ChannelRealization& channel, const BeamformerSet& beams, double tau,
               UserIndex u);

double conventional_rate(const ChannelRealization& channel, const BeamformerSet& beams,
                         UserIndex u);

double sum_throughput(const ChannelRealization& channel, const BeamformerSet& beams,
                      const TimeSplit& tau);

double conventional_sum_throughput(const ChannelRealization& channel,
                                   const BeamformerSet& beams);

/// Rates for all users in nats, indexed like the channel.
std::array<Eigen::VectorXd, kNumZones> user_rates(const ChannelRealization& channel,
                                                  const BeamformerSet& beams,
                                                  const TimeSplit& tau, RateMode mode);

/// Signed residuals; each must be >= 0 for the point to be feasible. The
/// power residual is divided by P_max.
struct FeasibilityReport {
  std::array<Eigen::VectorXd, kNumZones> sign;  // Re{h^H w_{i,k}}
  std::array<Eigen::VectorXd, kNumZones> qos;   // rate - target
  double power = 0.0;
  double tau_nonneg = 0.0;  // min(tau1, tau2)
  double tau_sum = 0.0;     // 1 - tau1 - tau2
  double tolerance = 1e-6;
  bool feasible = false;

  double worst_residual() const;
};

FeasibilityReport check_feasibility(const ChannelRealization& channel,
                                    const BeamformerSet& beams, const TimeSplit& tau,
                                    const QosTargets& qos, double pmax_watts,
                                    double tolerance = 1e-6);

FeasibilityReport check_feasibility(const ChannelRealization& channel,
                                    const BeamformerSet& beams, const TimeSplit& tau,
                                    const SystemConfig& config);

/// Same checks for the conventional scheme: conventional rates, total power
/// ||w_1||^2 + ||w_2||^2 <= P_max, and no time split (reported as tau = (1, 0)).
FeasibilityReport check_conventional_feasibility(const ChannelRealization& channel,
                                                 const BeamformerSet& beams,
                                                 const QosTargets& qos, double pmax_watts,
                                                 double tolerance = 1e-6);

}  // namespace ftbf
