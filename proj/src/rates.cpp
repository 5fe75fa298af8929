#include "ftbf/rates.hpp"

#include <algorithm>
#include <cmath>

namespace ftbf {

BeamformerSet BeamformerSet::zeros(int num_antennas, int users_per_zone) {
  BeamformerSet out;
  for (auto& w : out.w) w = Eigen::MatrixXcd::Zero(num_antennas, users_per_zone);
  return out;
}

QosTargets uniform_qos(int users_per_zone, double nats) {
  return {Eigen::VectorXd::Constant(users_per_zone, nats),
          Eigen::VectorXd::Constant(users_per_zone, nats)};
}

double sinr(const ChannelRealization& channel, const BeamformerSet& beams, UserIndex u,
            RateMode mode) {
  const auto h = channel.channel(u);
  const double signal = h.dot(beams.beam(u)).real();  // dot() conjugates h
  double interference = channel.sigma2;
  for (int zone = 0; zone < kNumZones; ++zone) {
    if (mode == RateMode::kFractionalTime && zone != u.zone) continue;
    for (int j = 0; j < channel.users_per_zone(); ++j) {
      if (zone == u.zone && j == u.user) continue;
      interference += std::norm(h.dot(beams.w[zone].col(j)));
    }
  }
  return signal * signal / interference;
}

double ft_rate(const ChannelRealization& channel, const BeamformerSet& beams, double tau,
               UserIndex u) {
  if (tau == 0.0) return 0.0;
  return tau * std::log1p(sinr(channel, beams, u, RateMode::kFractionalTime));
}

double conventional_rate(const ChannelRealization& channel, const BeamformerSet& beams,
                         UserIndex u) {
  return std::log1p(sinr(channel, beams, u, RateMode::kConventional));
}

std::array<Eigen::VectorXd, kNumZones> user_rates(const ChannelRealization& channel,
                                                  const BeamformerSet& beams,
                                                  const TimeSplit& tau, RateMode mode) {
  std::array<Eigen::VectorXd, kNumZones> out;
  for (int zone = 0; zone < kNumZones; ++zone) {
    out[zone].resize(channel.users_per_zone());
    for (int k = 0; k < channel.users_per_zone(); ++k) {
      out[zone](k) = mode == RateMode::kFractionalTime
                         ? ft_rate(channel, beams, tau[zone], {zone, k})
                         : conventional_rate(channel, beams, {zone, k});
    }
  }
  return out;
}

double sum_throughput(const ChannelRealization& channel, const BeamformerSet& beams,
                      const TimeSplit& tau) {
  const auto r = user_rates(channel, beams, tau, RateMode::kFractionalTime);
  return r[0].sum() + r[1].sum();
}

double conventional_sum_throughput(const ChannelRealization& channel,
                                   const BeamformerSet& beams) {
  const auto r = user_rates(channel, beams, {1.0, 1.0}, RateMode::kConventional);
  return r[0].sum() + r[1].sum();
}

double FeasibilityReport::worst_residual() const {
  double worst = std::min({power, tau_nonneg, tau_sum});
  for (int zone = 0; zone < kNumZones; ++zone) {
    if (sign[zone].size() > 0) worst = std::min(worst, sign[zone].minCoeff());
    if (qos[zone].size() > 0) worst = std::min(worst, qos[zone].minCoeff());
  }
  return worst;
}

namespace {

FeasibilityReport fill_report(const ChannelRealization& channel, const BeamformerSet& beams,
                              const std::array<Eigen::VectorXd, kNumZones>& rates,
                              const QosTargets& qos, double tolerance) {
  FeasibilityReport report;
  report.tolerance = tolerance;
  for (int zone = 0; zone < kNumZones; ++zone) {
    const int k_count = channel.users_per_zone();
    report.sign[zone].resize(k_count);
    for (int k = 0; k < k_count; ++k) {
      report.sign[zone](k) =
          channel.h[zone].col(k).dot(beams.w[zone].col(k)).real();
    }
    report.qos[zone] = rates[zone] - qos[zone];
  }
  return report;
}

}  // namespace

FeasibilityReport check_feasibility(const ChannelRealization& channel,
                                    const BeamformerSet& beams, const TimeSplit& tau,
                                    const QosTargets& qos, double pmax_watts,
                                    double tolerance) {
  auto report = fill_report(channel, beams,
                            user_rates(channel, beams, tau, RateMode::kFractionalTime), qos,
                            tolerance);
  const double used = tau.tau1 * beams.zone_power(0) + tau.tau2 * beams.zone_power(1);
  report.power = (pmax_watts - used) / pmax_watts;
  report.tau_nonneg = std::min(tau.tau1, tau.tau2);
  report.tau_sum = 1.0 - tau.tau1 - tau.tau2;
  report.feasible = report.worst_residual() >= -tolerance;
  return report;
}

FeasibilityReport check_feasibility(const ChannelRealization& channel,
                                    const BeamformerSet& beams, const TimeSplit& tau,
                                    const SystemConfig& config) {
  return check_feasibility(channel, beams, tau,
                           uniform_qos(channel.users_per_zone(), config.rbar_nats()),
                           config.pmax_watts(), config.solver.feas_tol);
}

FeasibilityReport check_conventional_feasibility(const ChannelRealization& channel,
                                                 const BeamformerSet& beams,
                                                 const QosTargets& qos, double pmax_watts,
                                                 double tolerance) {
  auto report = fill_report(channel, beams,
                            user_rates(channel, beams, {1.0, 1.0}, RateMode::kConventional),
                            qos, tolerance);
  report.power = (pmax_watts - beams.zone_power(0) - beams.zone_power(1)) / pmax_watts;
  report.tau_nonneg = 0.0;
  report.tau_sum = 0.0;
  report.feasible = report.worst_residual() >= -tolerance;
  return report;
}

}  // namespace ftbf
