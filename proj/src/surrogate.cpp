#include "ftbf/surrogate.hpp"

#include <cmath>
#include <string>

#include "ftbf/errors.hpp"

namespace ftbf {

AlphaSplit to_alpha(const TimeSplit& tau) {
  if (!(tau.tau1 > 0.0 && tau.tau2 > 0.0)) {
    throw InvalidInput("time fractions must be strictly positive to invert");
  }
  return {1.0 / tau.tau1, 1.0 / tau.tau2};
}

TimeSplit from_alpha(const AlphaSplit& alpha) {
  if (!(alpha.alpha1 > 0.0 && alpha.alpha2 > 0.0)) {
    throw InvalidInput("inverse time fractions must be strictly positive");
  }
  return {1.0 / alpha.alpha1, 1.0 / alpha.alpha2};
}

MinorantCoeffs minorant_coeffs(double x_bar, double y_bar, double t_bar) {
  if (!(x_bar > 0.0 && y_bar > 0.0 && t_bar > 0.0)) {
    throw InvalidInput("minorant expansion point must be strictly positive");
  }
  MinorantCoeffs m;
  m.d = x_bar * x_bar / y_bar;
  const double log_term = std::log1p(m.d);
  m.a = 2.0 * log_term / t_bar + m.d / (t_bar * (m.d + 1.0));
  m.b = m.d * m.d / (t_bar * (m.d + 1.0));
  m.c = log_term / (t_bar * t_bar);
  return m;
}

double minorant_value(const MinorantCoeffs& m, double x, double y, double t) {
  return m.a - m.b * y / (x * x) - m.c * t;
}

double trust_minorant_value(const MinorantCoeffs& m, double x_bar, double x, double y,
                            double t) {
  const double s = 2.0 * x - x_bar;
  if (!(s > 0.0)) throw TrustRegionViolation("2x - x_bar must be positive");
  return m.a - m.b * y / (x_bar * s) - m.c * t;
}

double interference_plus_noise(const ChannelRealization& channel, const BeamformerSet& w,
                               UserIndex u, RateMode mode) {
  const auto h = channel.channel(u);
  double y = channel.sigma2;
  for (int zone = 0; zone < kNumZones; ++zone) {
    if (mode == RateMode::kFractionalTime && zone != u.zone) continue;
    for (int j = 0; j < channel.users_per_zone(); ++j) {
      if (zone == u.zone && j == u.user) continue;
      y += std::norm(h.dot(w.w[zone].col(j)));
    }
  }
  return y;
}

SurrogateCoeffs surrogate_coeffs(const ChannelRealization& channel,
                                 const BeamformerSet& w_prev, const AlphaSplit& alpha_prev,
                                 RateMode mode, double d_floor) {
  SurrogateCoeffs out;
  out.mode = mode;
  for (int zone = 0; zone < kNumZones; ++zone) {
    const double t_bar = mode == RateMode::kFractionalTime ? alpha_prev[zone] : 1.0;
    for (int k = 0; k < channel.users_per_zone(); ++k) {
      const UserIndex u{zone, k};
      UserCoeffs uc;
      uc.x = channel.channel(u).dot(w_prev.beam(u)).real();
      if (!(uc.x > 0.0)) {
        throw TrustRegionViolation("Re{h^H w} is not positive for user (" +
                                   std::to_string(zone + 1) + "," + std::to_string(k + 1) + ")");
      }
      uc.y = interference_plus_noise(channel, w_prev, u, mode);
      // Same formulas as minorant_coeffs, with d floored so that degenerate
      // expansion points still give finite, positive constants.
      uc.d = std::max(uc.x * uc.x / uc.y, d_floor);
      const double log_term = std::log1p(uc.d);
      uc.a = 2.0 * log_term / t_bar + uc.d / (t_bar * (uc.d + 1.0));
      uc.b = uc.d * uc.d / (t_bar * (uc.d + 1.0));
      uc.c = log_term / (t_bar * t_bar);
      out.users[zone].push_back(uc);
    }
  }
  return out;
}

double eval_surrogate(const SurrogateCoeffs& coeffs, const ChannelRealization& channel,
                      const BeamformerSet& w, const AlphaSplit& alpha, UserIndex u) {
  const UserCoeffs& uc = coeffs[u];
  const double gain = channel.channel(u).dot(w.beam(u)).real();
  const double s = 2.0 * gain - uc.x;
  if (!(s > 0.0)) throw TrustRegionViolation("point is outside the trust region 2Re{h^H w} > x");
  const double y = interference_plus_noise(channel, w, u, coeffs.mode);
  const double t = coeffs.mode == RateMode::kFractionalTime ? alpha[u.zone] : 1.0;
  return uc.a - uc.b * y / (uc.x * s) - uc.c * t;
}

}  // namespace ftbf
