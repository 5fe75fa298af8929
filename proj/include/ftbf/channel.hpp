#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace ftbf {

/// Zone 0 is the inner (near) zone, zone 1 the outer (far) zone.
inline constexpr int kNumZones = 2;

struct UserIndex {
  int zone = 0;
  int user = 0;
};

/// Tolerances and iteration caps shared by every solver in the library.
struct SolverSettings {
  double conv_tol = 1e-4;        // relative objective change that ends the main loop
  int max_iters = 50;
  int init_max_iters = 50;       // cap on feasibility-restoration iterations
  int init_stall_window = 5;
  double init_stall_tol = 1e-4;
  double conic_tol = 1e-8;
  int conic_max_iters = 100;
  double feas_tol = 1e-6;
  double trust_margin = 1e-9;    // closes 2Re{h^H w} - x > 0, relative to x
  double alpha_min = 1.0 + 1e-6;
  double alpha_max = 1e6;
  double coeff_floor = 1e-12;    // floor on the expansion-point SINR
};

/// Scenario constants. Distances are configured in meters, power in dBm and
/// QoS in bits/s/Hz; the accessors convert to the units the solvers use.
struct SystemConfig {
  int num_antennas = 5;
  int users_per_zone = 4;
  double pmax_dbm = 30.0;
  double rbar_bits = 0.0;
  double noise_density_dbm_hz = -174.0;
  double bandwidth_hz = 10e6;
  double cell_radius_m = 500.0;
  double zone1_radius_m = 200.0;
  double min_distance_m = 10.0;
  SolverSettings solver;

  double pmax_watts() const;
  double rbar_nats() const;
  double noise_watts() const;

  /// Throws InvalidInput when an invariant does not hold.
  void validate() const;
};

/// Channel vectors for one Monte Carlo draw. Column k of h[i] is h_{i,k}.
struct ChannelRealization {
  std::array<Eigen::MatrixXcd, kNumZones> h;
  std::array<Eigen::VectorXd, kNumZones> distance_km;
  double sigma2 = 1.0;  // identical noise power for all users, watts

  int num_antennas() const { return static_cast<int>(h[0].rows()); }
  int users_per_zone() const { return static_cast<int>(h[0].cols()); }
  auto channel(UserIndex u) const { return h[u.zone].col(u.user); }
};

/// 128.1 + 37.6 log10(d), d in kilometers.
double pathloss_db(double distance_km);

/// Noise power in watts for a density in dBm/Hz over the given bandwidth.
double noise_power(double density_dbm_hz, double bandwidth_hz);

/// Draws user positions and Rayleigh-faded channels. Users are uniform over
/// area: zone 0 in [min_distance, zone1_radius], zone 1 in (zone1_radius, cell_radius].
/// The result is a pure function of (seed, config).
ChannelRealization sample_scenario(std::uint64_t seed, const SystemConfig& config);

}  // namespace ftbf
