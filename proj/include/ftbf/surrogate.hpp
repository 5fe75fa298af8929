#pragma once

#include <array>
#include <vector>

#include "ftbf/channel.hpp"
#include "ftbf/rates.hpp"

namespace ftbf {

/// Inverse time fractions alpha_i = 1 / tau_i.
struct AlphaSplit {
  double alpha1 = 2.0;
  double alpha2 = 2.0;

  double operator[](int zone) const { return zone == 0 ? alpha1 : alpha2; }
  double& operator[](int zone) { return zone == 0 ? alpha1 : alpha2; }
};

/// Throws InvalidInput unless both fractions are strictly positive.
AlphaSplit to_alpha(const TimeSplit& tau);
TimeSplit from_alpha(const AlphaSplit& alpha);

/// Constants of the lower bound
///   ln(1 + x^2/y) / t >= a - b y / x^2 - c t >= a - b y / (xb (2x - xb)) - c t
/// expanded at (xb, yb, tb), valid for x, y, t > 0 and 2x - xb > 0.
struct MinorantCoeffs {
  double d = 0.0;  // xb^2 / yb
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

MinorantCoeffs minorant_coeffs(double x_bar, double y_bar, double t_bar);

/// Middle term of the chain: a - b y / x^2 - c t.
double minorant_value(const MinorantCoeffs& m, double x, double y, double t);

/// Right term of the chain: a - b y / (xb (2x - xb)) - c t. Requires 2x - xb > 0.
double trust_minorant_value(const MinorantCoeffs& m, double x_bar, double x, double y,
                            double t);

/// Expansion-point constants for one user, in physical units (y in watts).
struct UserCoeffs {
  double x = 0.0;  // Re{h^H w} at the expansion point
  double y = 0.0;  // interference plus noise at the expansion point
  double d = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct SurrogateCoeffs {
  RateMode mode = RateMode::kFractionalTime;
  std::array<std::vector<UserCoeffs>, kNumZones> users;

  const UserCoeffs& operator[](UserIndex u) const { return users[u.zone][u.user]; }
};

/// Builds the concave minorant of every user's rate at (w_prev, alpha_prev).
/// In kConventional mode, alpha_prev is ignored and t = 1 throughout.
/// Throws TrustRegionViolation if some Re{h^H w_{i,k}} <= 0.
SurrogateCoeffs surrogate_coeffs(const ChannelRealization& channel,
                                 const BeamformerSet& w_prev, const AlphaSplit& alpha_prev,
                                 RateMode mode = RateMode::kFractionalTime,
                                 double d_floor = 1e-12);

/// Value of the minorant for user u at (w, alpha). Throws TrustRegionViolation
/// outside 2Re{h^H w_{i,k}} - x > 0.
double eval_surrogate(const SurrogateCoeffs& coeffs, const ChannelRealization& channel,
                      const BeamformerSet& w, const AlphaSplit& alpha, UserIndex u);

/// Interference plus noise seen by user u under the given rate mode.
double interference_plus_noise(const ChannelRealization& channel, const BeamformerSet& w,
                               UserIndex u, RateMode mode);

}  // namespace ftbf
