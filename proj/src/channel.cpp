#include "ftbf/channel.hpp"

#include <cmath>
#include <random>

#include "ftbf/errors.hpp"
#include "ftbf/units.hpp"

namespace ftbf {

double SystemConfig::pmax_watts() const { return units::dbm_to_watts(pmax_dbm); }

double SystemConfig::rbar_nats() const { return units::bits_to_nats(rbar_bits); }

double SystemConfig::noise_watts() const {
  return noise_power(noise_density_dbm_hz, bandwidth_hz);
}

void SystemConfig::validate() const {
  if (num_antennas < 1) throw InvalidInput("num_antennas must be >= 1");
  if (users_per_zone < 1) throw InvalidInput("users_per_zone must be >= 1");
  if (!std::isfinite(pmax_dbm)) throw InvalidInput("pmax_dbm must be finite");
  if (!(rbar_bits >= 0.0)) throw InvalidInput("rbar_bits must be >= 0");
  if (!(bandwidth_hz > 0.0)) throw InvalidInput("bandwidth_hz must be > 0");
  if (!(min_distance_m > 0.0 && min_distance_m < zone1_radius_m &&
        zone1_radius_m < cell_radius_m)) {
    throw InvalidInput("need 0 < min_distance_m < zone1_radius_m < cell_radius_m");
  }
  if (!(solver.conv_tol > 0.0) || solver.max_iters < 1 || solver.init_max_iters < 1) {
    throw InvalidInput("solver tolerances and iteration caps must be positive");
  }
  if (!(solver.alpha_min > 1.0 && solver.alpha_max > solver.alpha_min)) {
    throw InvalidInput("need 1 < alpha_min < alpha_max");
  }
}

double pathloss_db(double distance_km) {
  if (!(distance_km > 0.0)) throw InvalidInput("path loss needs a positive distance");
  return 128.1 + 37.6 * std::log10(distance_km);
}

double noise_power(double density_dbm_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw InvalidInput("bandwidth must be positive");
  return std::pow(10.0, (density_dbm_hz + 10.0 * std::log10(bandwidth_hz) - 30.0) / 10.0);
}

ChannelRealization sample_scenario(std::uint64_t seed, const SystemConfig& config) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

  const int nt = config.num_antennas;
  const int k = config.users_per_zone;
  const std::array<double, kNumZones> inner{config.min_distance_m, config.zone1_radius_m};
  const std::array<double, kNumZones> outer{config.zone1_radius_m, config.cell_radius_m};

  ChannelRealization out;
  out.sigma2 = config.noise_watts();
  for (int zone = 0; zone < kNumZones; ++zone) {
    // Uniform over the annulus area: r^2 is uniform.
    std::uniform_real_distribution<double> r2(inner[zone] * inner[zone],
                                              outer[zone] * outer[zone]);
    out.h[zone].resize(nt, k);
    out.distance_km[zone].resize(k);
    for (int user = 0; user < k; ++user) {
      double r = std::sqrt(r2(rng));
      // Zone 1 excludes its inner boundary.
      if (zone == 1 && r <= inner[zone]) r = std::nextafter(inner[zone], outer[zone]);
      const double d_km = r / 1000.0;
      out.distance_km[zone](user) = d_km;
      const double gain = std::sqrt(units::db_to_linear(-pathloss_db(d_km)));
      for (int n = 0; n < nt; ++n) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        out.h[zone](n, user) = gain * std::complex<double>(re, im);
      }
    }
  }
  return out;
}

}  // namespace ftbf
