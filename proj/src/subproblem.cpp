#include "ftbf/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "ftbf/errors.hpp"

namespace ftbf {
namespace {

using conic::AffineExpr;

// Lower bound on the trust-row scale, relative to the channel norm.
constexpr double kGainRowFloor = 1e-2;

std::string user_tag(int zone, int k) {
  return "(" + std::to_string(zone + 1) + "," + std::to_string(k + 1) + ")";
}

/// Re{g^H w} and Im{g^H w} as affine functions of the stacked beam at `base`.
AffineExpr re_gain(const Eigen::VectorXcd& g, int base) {
  AffineExpr e;
  const int nt = static_cast<int>(g.size());
  for (int n = 0; n < nt; ++n) {
    e.terms.emplace_back(base + n, g(n).real());
    e.terms.emplace_back(base + nt + n, g(n).imag());
  }
  return e;
}

AffineExpr im_gain(const Eigen::VectorXcd& g, int base) {
  AffineExpr e;
  const int nt = static_cast<int>(g.size());
  for (int n = 0; n < nt; ++n) {
    e.terms.emplace_back(base + n, -g(n).imag());
    e.terms.emplace_back(base + nt + n, g(n).real());
  }
  return e;
}

std::vector<AffineExpr> beam_entries(const SubproblemLayout& layout, int zone) {
  std::vector<AffineExpr> out;
  for (int k = 0; k < layout.users_per_zone; ++k) {
    for (int n = 0; n < 2 * layout.num_antennas; ++n) {
      out.push_back(AffineExpr::variable(layout.beam[zone][k] + n));
    }
  }
  return out;
}

bool interferes(RateMode mode, UserIndex victim, UserIndex other) {
  if (victim.zone == other.zone && victim.user == other.user) return false;
  return mode == RateMode::kConventional || victim.zone == other.zone;
}

}  // namespace

Subproblem build_subproblem(const SurrogateCoeffs& coeffs, const ChannelRealization& channel,
                            const BeamformerSet& w_prev, const AlphaSplit& alpha_prev,
                            const QosTargets& targets, double pmax_watts,
                            const SolverSettings& settings, ObjectiveMode objective) {
  const int nt = channel.num_antennas();
  const int kz = channel.users_per_zone();
  const bool ft = coeffs.mode == RateMode::kFractionalTime;
  if (!(pmax_watts > 0.0)) throw InvalidInput("power budget must be positive");

  const double sigma = std::sqrt(channel.sigma2);
  const double beam_scale = std::sqrt(pmax_watts);
  const double channel_scale = beam_scale / sigma;

  bool any_target = false;
  for (int zone = 0; zone < kNumZones; ++zone) {
    if (targets[zone].size() != kz) throw InvalidInput("QoS targets do not match the channel");
    any_target = any_target || (targets[zone].array() > 0.0).any();
  }
  if (objective == ObjectiveMode::kMinRatio && !any_target) {
    throw InvalidInput("min-ratio objective needs at least one positive target");
  }

  Subproblem sub;
  SubproblemLayout& L = sub.layout;
  L.mode = coeffs.mode;
  L.objective = objective;
  L.num_antennas = nt;
  L.users_per_zone = kz;
  L.beam_scale = beam_scale;
  if (ft) {
    if (!(alpha_prev.alpha1 > 0.0 && alpha_prev.alpha2 > 0.0)) {
      throw InvalidInput("expansion point needs positive alpha");
    }
    L.alpha_scale = {alpha_prev.alpha1, alpha_prev.alpha2};
  }

  conic::ConicBuilder b;
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < kz; ++k) {
      const std::string tag = user_tag(zone, k);
      L.beam[zone].push_back(b.add_variable("w" + tag + ".re0"));
      for (int n = 1; n < nt; ++n) b.add_variable("w" + tag + ".re" + std::to_string(n));
      for (int n = 0; n < nt; ++n) b.add_variable("w" + tag + ".im" + std::to_string(n));
    }
  }
  if (ft) {
    for (int zone = 0; zone < kNumZones; ++zone) {
      L.alpha[zone] = b.add_variable("alpha" + std::to_string(zone + 1));
    }
    for (int zone = 0; zone < kNumZones; ++zone) {
      L.inv_alpha[zone] = b.add_variable("u" + std::to_string(zone + 1));
    }
  }
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < kz; ++k) {
      const bool has_rate = objective == ObjectiveMode::kSum || targets[zone](k) > 0.0;
      L.rate[zone].push_back(has_rate ? b.add_variable("r" + user_tag(zone, k)) : -1);
    }
  }
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < kz; ++k) {
      L.quad[zone].push_back(L.rate[zone][k] >= 0 ? b.add_variable("q" + user_tag(zone, k)) : -1);
    }
  }
  if (ft) {
    L.zone1_power = b.add_variable("t1");
    L.zone2_power = b.add_variable("p");
  }
  if (objective == ObjectiveMode::kMinRatio) L.min_ratio = b.add_variable("t");

  // Per-user minorant, trust region and sign condition.
  AffineExpr rate_sum;
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < kz; ++k) {
      const UserIndex u{zone, k};
      const UserCoeffs& uc = coeffs[u];
      const Eigen::VectorXcd g = channel.channel(u) * channel_scale;
      const double x_bar = uc.x / sigma;
      const double y_bar = uc.y / channel.sigma2;
      if (!(x_bar > 0.0)) throw TrustRegionViolation("expansion point has Re{h^H w} <= 0");

      const AffineExpr gain = re_gain(g, L.beam[zone][k]);
      // (2 Re{g^H w} - x_bar) / kappa: equals x_bar / kappa at the expansion
      // point. kappa is floored relative to ||g|| so that a user switched
      // almost off does not blow up the row.
      const double kappa = std::max(x_bar, kGainRowFloor * g.norm());
      const AffineExpr s_norm = (2.0 / kappa) * gain - x_bar / kappa;

      b.add_nonnegative(s_norm - settings.trust_margin * x_bar / kappa);
      ++L.trust_constraints;
      b.add_nonnegative((1.0 / kappa) * gain);
      ++L.sign_constraints;

      if (L.rate[zone][k] < 0) continue;

      // q s >= (x_bar / kappa) (interference + noise) / y_bar, so q = 1 at
      // the expansion point.
      const double inv_sqrt_y = std::sqrt(x_bar / kappa / y_bar);
      std::vector<AffineExpr> u_rows;
      for (int oz = 0; oz < kNumZones; ++oz) {
        for (int j = 0; j < kz; ++j) {
          if (!interferes(coeffs.mode, u, {oz, j})) continue;
          u_rows.push_back(inv_sqrt_y * re_gain(g, L.beam[oz][j]));
          u_rows.push_back(inv_sqrt_y * im_gain(g, L.beam[oz][j]));
        }
      }
      u_rows.emplace_back(inv_sqrt_y);
      const AffineExpr q = AffineExpr::variable(L.quad[zone][k]);
      b.add_rotated(q, s_norm, u_rows);

      // r <= a - (b / d) q - c t, with d the unfloored expansion-point SINR.
      const double d_true = x_bar * x_bar / y_bar;
      const AffineExpr r = AffineExpr::variable(L.rate[zone][k]);
      AffineExpr minorant = AffineExpr(uc.a) - (uc.b / d_true) * q;
      minorant -= ft ? AffineExpr::variable(L.alpha[zone], uc.c * L.alpha_scale[zone])
                     : AffineExpr(uc.c);
      b.add_nonnegative(minorant - r);
      rate_sum += r;

      if (targets[zone](k) > 0.0) {
        if (objective == ObjectiveMode::kSum) {
          b.add_nonnegative(r - targets[zone](k));
        } else {
          b.add_nonnegative(r - AffineExpr::variable(L.min_ratio, targets[zone](k)));
        }
        ++L.qos_constraints;
      }
    }
  }

  if (ft) {
    // alpha_i = alpha_scale_i * ahat_i, u_i = uhat_i / alpha_scale_i, so
    // u_i alpha_i >= 1 is uhat_i ahat_i >= 1.
    for (int zone = 0; zone < kNumZones; ++zone) {
      const double scale = L.alpha_scale[zone];
      const AffineExpr alpha_hat = AffineExpr::variable(L.alpha[zone]);
      b.add_nonnegative(alpha_hat - settings.alpha_min / scale);
      b.add_nonnegative(AffineExpr(settings.alpha_max / scale) - alpha_hat);
      const std::vector<AffineExpr> one{AffineExpr(1.0)};
      b.add_rotated(AffineExpr::variable(L.inv_alpha[zone]), alpha_hat, one);
    }
    b.add_nonnegative(AffineExpr(1.0) -
                      AffineExpr::variable(L.inv_alpha[0], 1.0 / L.alpha_scale[0]) -
                      AffineExpr::variable(L.inv_alpha[1], 1.0 / L.alpha_scale[1]));
    ++L.time_constraints;

    // Inner approximation of (1 - 1/alpha_2)||w_1||^2 + ||w_2||^2/alpha_2 <= P,
    // everything divided by P. With p = phat / a2 the zone-2 cone is
    // phat ahat_2 >= ||w_2||^2.
    const double a2 = alpha_prev.alpha2;
    const AffineExpr t1 = AffineExpr::variable(L.zone1_power);
    const AffineExpr p_hat = AffineExpr::variable(L.zone2_power);
    b.add_rotated(t1, AffineExpr(1.0), beam_entries(L, 0));
    b.add_rotated(p_hat, AffineExpr::variable(L.alpha[1]), beam_entries(L, 1));
    const Eigen::MatrixXcd w1_prev = w_prev.w[0] / beam_scale;
    AffineExpr linear;
    for (int k = 0; k < kz; ++k) {
      for (int n = 0; n < nt; ++n) {
        linear.terms.emplace_back(L.beam[0][k] + n, w1_prev(n, k).real());
        linear.terms.emplace_back(L.beam[0][k] + nt + n, w1_prev(n, k).imag());
      }
    }
    b.add_nonnegative(AffineExpr(1.0) - t1 - (1.0 / a2) * p_hat + (2.0 / a2) * linear -
                      AffineExpr::variable(L.alpha[1], w1_prev.squaredNorm() / a2));
    ++L.power_constraints;
  } else {
    std::vector<AffineExpr> all = beam_entries(L, 0);
    const auto zone2 = beam_entries(L, 1);
    all.insert(all.end(), zone2.begin(), zone2.end());
    b.add_second_order(AffineExpr(1.0), all);
    ++L.power_constraints;
  }

  if (objective == ObjectiveMode::kSum) {
    b.minimize(-rate_sum);
  } else {
    b.minimize(-AffineExpr::variable(L.min_ratio));
  }
  sub.problem = b.build();
  return sub;
}

Subproblem build_subproblem(const SurrogateCoeffs& coeffs, const ChannelRealization& channel,
                            const BeamformerSet& w_prev, const AlphaSplit& alpha_prev,
                            const SystemConfig& config, ObjectiveMode objective) {
  const QosTargets targets = uniform_qos(channel.users_per_zone(), config.rbar_nats());
  return build_subproblem(coeffs, channel, w_prev, alpha_prev, targets, config.pmax_watts(),
                          config.solver, objective);
}

BeamformerSet extract_beams(const SubproblemLayout& layout, const Eigen::VectorXd& x) {
  const int nt = layout.num_antennas;
  BeamformerSet out = BeamformerSet::zeros(nt, layout.users_per_zone);
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < layout.users_per_zone; ++k) {
      const int base = layout.beam[zone][k];
      for (int n = 0; n < nt; ++n) {
        out.w[zone](n, k) =
            layout.beam_scale * std::complex<double>(x(base + n), x(base + nt + n));
      }
    }
  }
  return out;
}

AlphaSplit extract_alpha(const SubproblemLayout& layout, const Eigen::VectorXd& x) {
  if (layout.alpha[0] < 0) return {1.0, 1.0};
  return {layout.alpha_scale[0] * x(layout.alpha[0]), layout.alpha_scale[1] * x(layout.alpha[1])};
}

Eigen::VectorXd pack_point(const Subproblem& sub, const SurrogateCoeffs& coeffs,
                           const ChannelRealization& channel, const BeamformerSet& w,
                           const AlphaSplit& alpha, const QosTargets& targets) {
  const SubproblemLayout& L = sub.layout;
  const int nt = L.num_antennas;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sub.problem.num_variables());
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < L.users_per_zone; ++k) {
      for (int n = 0; n < nt; ++n) {
        const std::complex<double> v = w.w[zone](n, k) / L.beam_scale;
        x(L.beam[zone][k] + n) = v.real();
        x(L.beam[zone][k] + nt + n) = v.imag();
      }
    }
  }
  if (L.alpha[0] >= 0) {
    for (int zone = 0; zone < kNumZones; ++zone) {
      x(L.alpha[zone]) = alpha[zone] / L.alpha_scale[zone];
      x(L.inv_alpha[zone]) = L.alpha_scale[zone] / alpha[zone];
    }
    x(L.zone1_power) = w.w[0].squaredNorm() / (L.beam_scale * L.beam_scale);
    x(L.zone2_power) = w.w[1].squaredNorm() / (L.beam_scale * L.beam_scale) *
                       (L.alpha_scale[1] / alpha.alpha2);
  }
  double ratio = std::numeric_limits<double>::infinity();
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < L.users_per_zone; ++k) {
      if (L.rate[zone][k] < 0) continue;
      const UserIndex u{zone, k};
      const UserCoeffs& uc = coeffs[u];
      const double gain = channel.channel(u).dot(w.beam(u)).real();
      const double y = interference_plus_noise(channel, w, u, coeffs.mode);
      x(L.quad[zone][k]) = (y / uc.y) / ((2.0 * gain - uc.x) / uc.x);
      const double r = eval_surrogate(coeffs, channel, w, alpha, u);
      x(L.rate[zone][k]) = r;
      if (targets[zone](k) > 0.0) ratio = std::min(ratio, r / targets[zone](k));
    }
  }
  if (L.min_ratio >= 0) x(L.min_ratio) = ratio;
  return x;
}

double inner_power(const BeamformerSet& w, const AlphaSplit& alpha,
                   const BeamformerSet& w_prev, const AlphaSplit& alpha_prev) {
  const double a2 = alpha_prev.alpha2;
  const double cross = (w_prev.w[0].array().conjugate() * w.w[0].array()).sum().real();
  return w.w[0].squaredNorm() + w.w[1].squaredNorm() / alpha.alpha2 - 2.0 * cross / a2 +
         w_prev.w[0].squaredNorm() / (a2 * a2) * alpha.alpha2;
}

double time_weighted_power(const BeamformerSet& w, const AlphaSplit& alpha) {
  return (1.0 - 1.0 / alpha.alpha2) * w.w[0].squaredNorm() + w.w[1].squaredNorm() / alpha.alpha2;
}

}  // namespace ftbf
