#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "ftbf/rates.hpp"
#include "test_util.hpp"

using namespace ftbf;
using cd = std::complex<double>;

namespace {

/// h^H w written out entry by entry.
cd inner(const Eigen::VectorXcd& h, const Eigen::VectorXcd& w) {
  cd acc = 0.0;
  for (Eigen::Index n = 0; n < h.size(); ++n) acc += std::conj(h(n)) * w(n);
  return acc;
}

double oracle_sinr(const ChannelRealization& ch, const BeamformerSet& w, int zone, int k,
                   bool conventional) {
  const Eigen::VectorXcd h = ch.h[zone].col(k);
  const double signal = std::pow(inner(h, w.w[zone].col(k)).real(), 2);
  double interference = ch.sigma2;
  for (int z = 0; z < 2; ++z) {
    if (!conventional && z != zone) continue;
    for (int j = 0; j < w.w[z].cols(); ++j) {
      if (z == zone && j == k) continue;
      interference += std::norm(inner(h, w.w[z].col(j)));
    }
  }
  return signal / interference;
}

}  // namespace

TEST_CASE("single aligned user has SINR P / sigma2") {
  ChannelRealization ch;
  ch.sigma2 = 1.0;
  ch.h[0] = Eigen::MatrixXcd::Zero(2, 1);
  ch.h[0](0, 0) = 1.0;
  ch.h[1] = Eigen::MatrixXcd::Zero(2, 1);
  ch.h[1](1, 0) = 1.0;
  BeamformerSet w = BeamformerSet::zeros(2, 1);
  const double p = 7.5;
  w.w[0](0, 0) = std::sqrt(p);
  CHECK(sinr(ch, w, {0, 0}, RateMode::kFractionalTime) == doctest::Approx(p));
  // A zone-2 beam orthogonal to h_{1,1} does not change the conventional SINR.
  w.w[1](1, 0) = 3.0;
  CHECK(sinr(ch, w, {0, 0}, RateMode::kConventional) == doctest::Approx(p));
}

TEST_CASE("ft_rate arithmetic") {
  ChannelRealization ch;
  ch.sigma2 = 1.0;
  ch.h[0] = Eigen::MatrixXcd::Ones(1, 1);
  ch.h[1] = Eigen::MatrixXcd::Ones(1, 1);
  BeamformerSet w = BeamformerSet::zeros(1, 1);
  w.w[0](0, 0) = std::sqrt(3.0);  // SINR 3
  CHECK(ft_rate(ch, w, 0.5, {0, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ft_rate(ch, w, 0.0, {0, 0}) == 0.0);
  w.w[0](0, 0) = std::sqrt(std::exp(1.0) - 1.0);
  CHECK(ft_rate(ch, w, 1.0, {0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sinr matches an independent evaluation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int nt = 1 + trial % 4;
    const int k = 1 + trial % 3;
    const auto ch = test::random_channel(rng, nt, k, 0.3);
    const auto w = test::random_beams(rng, nt, k);
    for (int zone = 0; zone < 2; ++zone) {
      for (int u = 0; u < k; ++u) {
        CHECK(sinr(ch, w, {zone, u}, RateMode::kFractionalTime) ==
              doctest::Approx(oracle_sinr(ch, w, zone, u, false)).epsilon(1e-12));
        CHECK(sinr(ch, w, {zone, u}, RateMode::kConventional) ==
              doctest::Approx(oracle_sinr(ch, w, zone, u, true)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("sum throughput is additive") {
  std::mt19937_64 rng(6);
  const auto ch = test::random_channel(rng, 3, 2, 0.5);
  const auto w = test::random_beams(rng, 3, 2);
  const TimeSplit tau{0.3, 0.6};
  double expected = 0.0;
  for (int zone = 0; zone < 2; ++zone) {
    for (int k = 0; k < 2; ++k) {
      expected += tau[zone] * std::log1p(oracle_sinr(ch, w, zone, k, false));
    }
  }
  CHECK(sum_throughput(ch, w, tau) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(sum_throughput(ch, BeamformerSet::zeros(3, 2), tau) == 0.0);

  double conventional = 0.0;
  for (int zone = 0; zone < 2; ++zone) {
    for (int k = 0; k < 2; ++k) conventional += std::log1p(oracle_sinr(ch, w, zone, k, true));
  }
  CHECK(conventional_sum_throughput(ch, w) == doctest::Approx(conventional).epsilon(1e-12));
}

TEST_CASE("symmetric single users per zone give twice the single rate") {
  ChannelRealization ch;
  ch.sigma2 = 0.5;
  ch.h[0] = Eigen::MatrixXcd::Constant(2, 1, cd(0.3, 0.4));
  ch.h[1] = ch.h[0];
  BeamformerSet w = BeamformerSet::zeros(2, 1);
  w.w[0] = ch.h[0];
  w.w[1] = ch.h[1];
  const TimeSplit half{0.5, 0.5};
  CHECK(sum_throughput(ch, w, half) == doctest::Approx(2.0 * ft_rate(ch, w, 0.5, {0, 0})));
}

TEST_CASE("FT SINR dominates conventional SINR") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ch = test::random_channel(rng, 4, 3, 0.2);
    const auto w = test::random_beams(rng, 4, 3);
    for (int zone = 0; zone < 2; ++zone) {
      for (int k = 0; k < 3; ++k) {
        CHECK(sinr(ch, w, {zone, k}, RateMode::kFractionalTime) >=
              sinr(ch, w, {zone, k}, RateMode::kConventional));
      }
    }
  }
}

TEST_CASE("rate is monotone in own gain and interference") {
  std::mt19937_64 rng(8);
  const auto ch = test::random_channel(rng, 3, 2, 0.4);
  auto w = test::random_beams(rng, 3, 2);
  test::align_phases(ch, w);
  const double base = ft_rate(ch, w, 0.7, {0, 0});
  auto stronger = w;
  stronger.w[0].col(0) *= 1.5;
  CHECK(ft_rate(ch, stronger, 0.7, {0, 0}) >= base);
  auto louder = w;
  louder.w[0].col(1) *= 2.0;
  CHECK(ft_rate(ch, louder, 0.7, {0, 0}) <= base);
}

TEST_CASE("phase rotation makes Re{h^H w} equal |h^H w| without touching interference") {
  std::mt19937_64 rng(9);
  const auto ch = test::random_channel(rng, 3, 3, 0.4);
  const auto w = test::random_beams(rng, 3, 3);
  auto rotated = w;
  test::align_phases(ch, rotated);
  for (int zone = 0; zone < 2; ++zone) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXcd h = ch.h[zone].col(k);
      const cd g = inner(h, rotated.w[zone].col(k));
      CHECK(g.real() == doctest::Approx(std::abs(inner(h, w.w[zone].col(k)))));
      CHECK(std::abs(g.imag()) < 1e-12);
      // |.|^2-form rate of the unrotated beams equals the Re-form rate after rotation.
      double interference = ch.sigma2;
      for (int j = 0; j < 3; ++j) {
        if (j != k) interference += std::norm(inner(h, w.w[zone].col(j)));
      }
      const double abs_form = std::log1p(std::norm(inner(h, w.w[zone].col(k))) / interference);
      CHECK(ft_rate(ch, rotated, 1.0, {zone, k}) == doctest::Approx(abs_form).epsilon(1e-12));
    }
  }
}

TEST_CASE("feasibility report") {
  std::mt19937_64 rng(10);
  const auto ch = test::random_channel(rng, 2, 2, 0.5);
  const auto zero = BeamformerSet::zeros(2, 2);
  const TimeSplit half{0.5, 0.5};

  const auto ok = check_feasibility(ch, zero, half, uniform_qos(2, 0.0), 1.0);
  CHECK(ok.feasible);

  const double target = 0.4;
  const auto bad = check_feasibility(ch, zero, half, uniform_qos(2, target), 1.0);
  CHECK_FALSE(bad.feasible);
  CHECK(bad.qos[0](0) == doctest::Approx(-target));
  CHECK(bad.worst_residual() == doctest::Approx(-target));

  auto loud = test::random_beams(rng, 2, 2);
  test::align_phases(ch, loud);
  const double p = 0.5 * loud.zone_power(0) + 0.5 * loud.zone_power(1);
  CHECK(check_feasibility(ch, loud, half, uniform_qos(2, 0.0), 1.01 * p).feasible);
  const auto over = check_feasibility(ch, loud, half, uniform_qos(2, 0.0), 0.9 * p);
  CHECK_FALSE(over.feasible);
  CHECK(over.power == doctest::Approx((0.9 * p - p) / (0.9 * p)));

  const auto long_slot = check_feasibility(ch, zero, TimeSplit{0.7, 0.5}, uniform_qos(2, 0.0), 1.0);
  CHECK_FALSE(long_slot.feasible);
  CHECK(long_slot.tau_sum == doctest::Approx(-0.2));

  auto negative = loud;
  negative.w[1].col(1) *= -1.0;
  CHECK_FALSE(check_feasibility(ch, negative, half, uniform_qos(2, 0.0), 10.0 * p).feasible);

  // Conventional: total power, conventional rates.
  const double total = loud.zone_power(0) + loud.zone_power(1);
  CHECK(check_conventional_feasibility(ch, loud, uniform_qos(2, 0.0), 1.01 * total).feasible);
  CHECK_FALSE(check_conventional_feasibility(ch, loud, uniform_qos(2, 0.0), 0.99 * total).feasible);
}
