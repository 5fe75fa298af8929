#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ftbf/errors.hpp"
#include "ftbf/sca.hpp"
#include "ftbf/subproblem.hpp"
#include "ftbf/units.hpp"
#include "test_util.hpp"

using namespace ftbf;

namespace {

struct Expansion {
  ChannelRealization channel;
  BeamformerSet beams;
  AlphaSplit alpha;
  QosTargets targets;
  double pmax = 0.0;
};

/// A point strictly inside every original constraint, with QoS targets at
/// half of the achieved rates.
Expansion random_expansion(std::mt19937_64& rng, int nt, int kz) {
  Expansion e;
  e.channel = test::random_channel(rng, nt, kz, 0.8, test::log_uniform(rng, 0.05, 2.0));
  e.beams = test::random_beams(rng, nt, kz);
  test::align_phases(e.channel, e.beams);
  const double tau1 = test::uniform(rng, 0.1, 0.8);
  const double tau2 = (1.0 - tau1) * test::uniform(rng, 0.8, 1.0);
  e.alpha = to_alpha({tau1, tau2});
  e.pmax = time_weighted_power(e.beams, e.alpha) * test::uniform(rng, 1.0, 1.5);
  const auto rates = user_rates(e.channel, e.beams, from_alpha(e.alpha), RateMode::kFractionalTime);
  for (int zone = 0; zone < kNumZones; ++zone) e.targets[zone] = 0.5 * rates[zone];
  return e;
}

SystemConfig small_config(int nt, int kz, double rbar_bits) {
  SystemConfig cfg;
  cfg.num_antennas = nt;
  cfg.users_per_zone = kz;
  cfg.rbar_bits = rbar_bits;
  return cfg;
}

/// Best FT sum rate for one user per zone and no QoS floor: matched filters,
/// then a grid over tau_1 and the share of the energy budget spent in slot 1.
double grid_oracle(const ChannelRealization& ch, double pmax) {
  const double g1 = ch.h[0].col(0).squaredNorm() / ch.sigma2;
  const double g2 = ch.h[1].col(0).squaredNorm() / ch.sigma2;
  double best = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double tau1 = i * 1e-3;
    const double tau2 = 1.0 - tau1;
    for (int j = 0; j <= 1000; ++j) {
      const double share = j * 1e-3;
      const double p1 = share * pmax / tau1;
      const double p2 = (1.0 - share) * pmax / tau2;
      best = std::max(best, tau1 * std::log1p(p1 * g1) + tau2 * std::log1p(p2 * g2));
    }
  }
  return best;
}

void check_trace(const std::vector<double>& trace, double tol) {
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - tol);
}

}  // namespace

TEST_CASE("core dimensions for one antenna and one user per zone") {
  std::mt19937_64 rng(21);
  for (const auto& [nt, kz] : {std::pair{1, 1}, std::pair{3, 2}, std::pair{5, 4}}) {
    auto e = random_expansion(rng, nt, kz);
    const auto coeffs = surrogate_coeffs(e.channel, e.beams, e.alpha);
    const auto sub = build_subproblem(coeffs, e.channel, e.beams, e.alpha, e.targets, e.pmax,
                                      SolverSettings{}, ObjectiveMode::kSum);
    CHECK(sub.layout.core_constraint_count() == 2 * (3 * kz + 1));
    CHECK(sub.layout.core_variable_count() == 2 * (kz * nt + 1));
    // Real stacking doubles the beam entries; auxiliaries come on top.
    CHECK(sub.problem.num_variables() >= 2 * kNumZones * kz * nt + 2);
  }
}

TEST_CASE("expansion point is feasible for its own subproblem and the bound is tight") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const int nt = 1 + trial % 4;
    const int kz = 1 + trial % 3;
    auto e = random_expansion(rng, nt, kz);
    for (const auto mode : {ObjectiveMode::kSum, ObjectiveMode::kMinRatio}) {
      const auto coeffs = surrogate_coeffs(e.channel, e.beams, e.alpha);
      const auto sub = build_subproblem(coeffs, e.channel, e.beams, e.alpha, e.targets, e.pmax,
                                        SolverSettings{}, mode);
      const auto x = pack_point(sub, coeffs, e.channel, e.beams, e.alpha, e.targets);
      CHECK(sub.problem.min_cone_margin(x) >= -1e-9);
      if (mode == ObjectiveMode::kSum) {
        const double st = sum_throughput(e.channel, e.beams, from_alpha(e.alpha));
        CHECK(-sub.problem.objective(x) == doctest::Approx(st).epsilon(1e-9));
      }
      const auto w = extract_beams(sub.layout, x);
      const auto a = extract_alpha(sub.layout, x);
      CHECK((w.w[0] - e.beams.w[0]).norm() <= 1e-12 * (1.0 + e.beams.w[0].norm()));
      CHECK((w.w[1] - e.beams.w[1]).norm() <= 1e-12 * (1.0 + e.beams.w[1].norm()));
      CHECK(a.alpha1 == doctest::Approx(e.alpha.alpha1));
      CHECK(a.alpha2 == doctest::Approx(e.alpha.alpha2));
    }
  }
}

TEST_CASE("inner power bound dominates the true time-weighted power") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5000; ++trial) {
    const int nt = 1 + trial % 4;
    const int kz = 1 + trial % 3;
    const auto w_prev = test::random_beams(rng, nt, kz);
    const auto w = test::random_beams(rng, nt, kz, test::log_uniform(rng, 0.1, 10.0));
    const AlphaSplit a_prev{2.0, test::log_uniform(rng, 1.0 + 1e-6, 100.0)};
    const AlphaSplit a{2.0, test::log_uniform(rng, 1.0 + 1e-6, 100.0)};
    const double inner = inner_power(w, a, w_prev, a_prev);
    const double exact = time_weighted_power(w, a);
    CHECK(inner >= exact - 1e-12 * std::max(1.0, exact));
  }
  const auto w = test::random_beams(rng, 3, 2);
  const AlphaSplit a{1.7, 2.4};
  CHECK(inner_power(w, a, w, a) == doctest::Approx(time_weighted_power(w, a)).epsilon(1e-12));
}

TEST_CASE("solved subproblems satisfy the original constraints") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    auto e = random_expansion(rng, 1 + trial % 4, 1 + trial % 3);
    const auto coeffs = surrogate_coeffs(e.channel, e.beams, e.alpha);
    const auto sub = build_subproblem(coeffs, e.channel, e.beams, e.alpha, e.targets, e.pmax,
                                      SolverSettings{}, ObjectiveMode::kSum);
    const auto sol = conic::solve(sub.problem);
    REQUIRE(sol.status == conic::ConicStatus::kOptimal);
    const auto w = extract_beams(sub.layout, sol.x);
    const auto a = extract_alpha(sub.layout, sol.x);
    CHECK(1.0 / a.alpha1 + 1.0 / a.alpha2 <= 1.0 + 1e-6);
    CHECK(time_weighted_power(w, a) <= e.pmax * (1.0 + 1e-6));
    const auto report = check_feasibility(e.channel, w, from_alpha(a), e.targets, e.pmax);
    CHECK(report.feasible);
    // The step does not decrease the true objective.
    CHECK(sum_throughput(e.channel, w, from_alpha(a)) >=
          sum_throughput(e.channel, e.beams, from_alpha(e.alpha)) - 1e-6);
  }
}

TEST_CASE("zero QoS targets skip feasibility restoration") {
  const auto cfg = small_config(3, 2, 0.0);
  const auto ch = sample_scenario(5, cfg);
  const auto init = find_initial_point(ch, cfg);
  CHECK(init.feasible);
  CHECK(init.iterations.empty());
  CHECK(init.alpha.alpha1 == 2.0);
  CHECK(init.alpha.alpha2 == 2.0);
  for (int zone = 0; zone < kNumZones; ++zone) {
    for (int k = 0; k < cfg.users_per_zone; ++k) {
      const UserIndex u{zone, k};
      const auto h = ch.channel(u);
      const auto w = init.beams.beam(u);
      const std::complex<double> g = h.dot(w);
      CHECK(std::abs(g.imag()) <= 1e-12 * std::abs(g));
      CHECK(g.real() == doctest::Approx(h.norm() * w.norm()).epsilon(1e-12));
    }
  }
  // Half of the budget under the time-weighted power expression.
  CHECK(time_weighted_power(init.beams, init.alpha) ==
        doctest::Approx(0.5 * cfg.pmax_watts()).epsilon(1e-12));
}

TEST_CASE("restored starting points meet their QoS targets") {
  const auto cfg = small_config(5, 4, 1.0);
  int restored = 0;
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    const auto ch = sample_scenario(seed, cfg);
    const auto init = find_initial_point(ch, cfg);
    check_trace(init.ratio_trace, 1e-6);
    if (!init.feasible) continue;
    ++restored;
    CHECK(check_feasibility(ch, init.beams, from_alpha(init.alpha), cfg).feasible);
  }
  CHECK(restored > 0);
}

TEST_CASE("sum throughput loop ascends and ends feasible") {
  const auto cfg = small_config(5, 4, 1.0);
  for (std::uint64_t seed = 200; seed < 204; ++seed) {
    const auto ch = sample_scenario(seed, cfg);
    const auto sol = sca_solve(ch, cfg);
    REQUIRE(sol.status == SolveStatus::kConverged);
    check_trace(sol.objective_trace, 1e-6);
    for (const auto& rec : sol.iterations) {
      CHECK(rec.surrogate_at_expansion ==
            doctest::Approx(rec.objective_at_expansion).epsilon(1e-8).scale(1.0));
      CHECK(rec.surrogate_optimum >= rec.surrogate_at_expansion - 1e-6);
      CHECK(rec.objective >= rec.surrogate_optimum - 1e-6);
      CHECK(rec.safety_margin >= -1e-6);
    }
    CHECK(check_feasibility(ch, sol.beams, sol.tau, cfg).feasible);
    CHECK(sol.tau.tau1 + sol.tau.tau2 <= 1.0 + 1e-6);
    CHECK(sol.sum_throughput_nats == doctest::Approx(sum_throughput(ch, sol.beams, sol.tau)));
    CHECK(sol.sum_throughput_bits() == doctest::Approx(units::nats_to_bits(sol.sum_throughput_nats)));
  }
}

TEST_CASE("one user per zone matches the matched-filter grid oracle") {
  const auto cfg = small_config(2, 1, 0.0);
  for (std::uint64_t seed = 300; seed < 304; ++seed) {
    const auto ch = sample_scenario(seed, cfg);
    const auto sol = sca_solve(ch, cfg);
    REQUIRE(sol.status == SolveStatus::kConverged);
    const double oracle = grid_oracle(ch, cfg.pmax_watts());
    CHECK(sol.sum_throughput_nats == doctest::Approx(oracle).epsilon(0.02));
  }
}

TEST_CASE("max-min on a symmetric pair splits time and power evenly") {
  SystemConfig cfg = small_config(2, 1, 0.0);
  ChannelRealization ch;
  ch.sigma2 = 1.0;
  ch.h[0] = Eigen::MatrixXcd(2, 1);
  ch.h[0] << std::complex<double>(0.6, -0.2), std::complex<double>(0.1, 0.9);
  ch.h[1] = ch.h[0];
  for (auto& d : ch.distance_km) d = Eigen::VectorXd::Constant(1, 0.1);
  cfg.pmax_dbm = units::watts_to_dbm(4.0);
  const auto sol = maxmin_solve(ch, cfg);
  REQUIRE(sol.status == SolveStatus::kConverged);
  check_trace(sol.objective_trace, 1e-6);
  const double r1 = sol.rates_nats[0](0);
  const double r2 = sol.rates_nats[1](0);
  CHECK(r1 == doctest::Approx(r2).epsilon(0.01));
  // By symmetry and concavity of the perspective, tau = 1/2 with full power in each slot.
  const double expected = 0.5 * std::log1p(4.0 * ch.h[0].col(0).squaredNorm());
  CHECK(sol.min_throughput_nats == doctest::Approx(expected).epsilon(0.01));
  CHECK(check_feasibility(ch, sol.beams, sol.tau, uniform_qos(1, 0.0), 4.0).feasible);
}

TEST_CASE("max-min loop ascends on Table-style scenarios") {
  const auto cfg = small_config(5, 4, 0.0);
  for (std::uint64_t seed = 400; seed < 403; ++seed) {
    const auto ch = sample_scenario(seed, cfg);
    const auto sol = maxmin_solve(ch, cfg);
    CHECK(sol.status == SolveStatus::kConverged);
    check_trace(sol.objective_trace, 1e-6);
    CHECK(sol.min_throughput_nats ==
          doctest::Approx(std::min(sol.rates_nats[0].minCoeff(), sol.rates_nats[1].minCoeff())));
    CHECK(check_feasibility(ch, sol.beams, sol.tau, uniform_qos(4, 0.0), cfg.pmax_watts())
              .feasible);
  }
}

TEST_CASE("sum step export follows the loop") {
  const auto cfg = small_config(3, 2, 0.5);
  const auto ch = sample_scenario(7, cfg);
  const auto sol = sca_solve(ch, cfg);
  REQUIRE(sol.status == SolveStatus::kConverged);
  const auto first = sum_step_at(ch, cfg, RateMode::kFractionalTime, 0);
  CHECK(first.layout.mode == RateMode::kFractionalTime);
  const auto s = conic::solve(first.problem);
  REQUIRE(s.status == conic::ConicStatus::kOptimal);
  CHECK(-s.objective == doctest::Approx(sol.iterations.front().surrogate_optimum).epsilon(1e-6));
  // Beyond convergence the loop keeps stepping rather than stopping.
  CHECK_NOTHROW(sum_step_at(ch, cfg, RateMode::kFractionalTime, sol.iterations_used + 2));
  CHECK_THROWS_AS(sum_step_at(ch, cfg, RateMode::kFractionalTime, -1), InvalidInput);
  auto hard = cfg;
  hard.rbar_bits = 40.0;
  CHECK_THROWS_AS(sum_step_at(ch, hard, RateMode::kFractionalTime, 0), InvalidInput);
}
