#include <cmath>
#include <random>

#include "doctest.h"
#include "ftbf/errors.hpp"
#include "ftbf/surrogate.hpp"
#include "test_util.hpp"

using namespace ftbf;

namespace {

double true_rate(double x, double y, double t) { return std::log1p(x * x / y) / t; }

struct Tuple {
  double x_bar, y_bar, t_bar, x, y, t;
};

/// Random expansion point and a second point inside 2x - x_bar > 0.
Tuple random_tuple(std::mt19937_64& rng) {
  Tuple p;
  p.x_bar = test::log_uniform(rng, 1e-3, 1e3);
  p.y_bar = test::log_uniform(rng, 1e-2, 1e3);
  p.t_bar = test::log_uniform(rng, 1.0, 1e3);
  p.x = p.x_bar * test::uniform(rng, 0.5 + 1e-6, 5.0);
  p.y = p.y_bar * test::log_uniform(rng, 1e-2, 1e2);
  p.t = p.t_bar * test::log_uniform(rng, 0.1, 10.0);
  return p;
}

}  // namespace

TEST_CASE("minorant coefficients at x=2, y=1, t=2") {
  const auto m = minorant_coeffs(2.0, 1.0, 2.0);
  CHECK(m.d == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(m.a == doctest::Approx(std::log(5.0) + 0.4).epsilon(1e-12));
  CHECK(m.b == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(m.c == doctest::Approx(std::log(5.0) / 4.0).epsilon(1e-12));
  CHECK(minorant_value(m, 2.0, 1.0, 2.0) == doctest::Approx(std::log(5.0) / 2.0).epsilon(1e-12));
  CHECK(trust_minorant_value(m, 2.0, 2.0, 1.0, 2.0) ==
        doctest::Approx(std::log(5.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("minorant chain holds and is tight at the expansion point") {
  std::mt19937_64 rng(11);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Tuple p = random_tuple(rng);
    const auto m = minorant_coeffs(p.x_bar, p.y_bar, p.t_bar);
    const double f = true_rate(p.x, p.y, p.t);
    const double g = minorant_value(m, p.x, p.y, p.t);
    const double h = trust_minorant_value(m, p.x_bar, p.x, p.y, p.t);
    const double scale = std::max(1.0, std::abs(f));
    if (g > f + 1e-9 * scale || h > g + 1e-9 * scale) ++violations;

    const double f0 = true_rate(p.x_bar, p.y_bar, p.t_bar);
    CHECK(minorant_value(m, p.x_bar, p.y_bar, p.t_bar) ==
          doctest::Approx(f0).epsilon(1e-9).scale(1.0));
    CHECK(trust_minorant_value(m, p.x_bar, p.x_bar, p.y_bar, p.t_bar) ==
          doctest::Approx(f0).epsilon(1e-9).scale(1.0));
  }
  CHECK(violations == 0);
}

TEST_CASE("minorant is tangent to the rate at the expansion point") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const double xb = test::log_uniform(rng, 0.1, 10.0);
    const double yb = test::log_uniform(rng, 0.1, 10.0);
    const double tb = test::log_uniform(rng, 1.0, 10.0);
    const auto m = minorant_coeffs(xb, yb, tb);
    const double e = 1e-5;
    auto grad = [&](auto fn) {
      return std::array<double, 3>{(fn(xb * (1 + e), yb, tb) - fn(xb * (1 - e), yb, tb)) /
                                       (2 * e * xb),
                                   (fn(xb, yb * (1 + e), tb) - fn(xb, yb * (1 - e), tb)) /
                                       (2 * e * yb),
                                   (fn(xb, yb, tb * (1 + e)) - fn(xb, yb, tb * (1 - e))) /
                                       (2 * e * tb)};
    };
    const auto gf = grad(true_rate);
    const auto gm = grad([&](double x, double y, double t) {
      return trust_minorant_value(m, xb, x, y, t);
    });
    for (int i = 0; i < 3; ++i) {
      CHECK(gm[i] == doctest::Approx(gf[i]).epsilon(1e-5).scale(1e-3));
    }
  }
}

TEST_CASE("trust-region minorant is concave in (x, v, t) with y = v^2 + 1") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5000; ++trial) {
    const double xb = test::log_uniform(rng, 0.01, 100.0);
    const auto m = minorant_coeffs(xb, test::log_uniform(rng, 0.1, 10.0),
                                   test::log_uniform(rng, 1.0, 10.0));
    auto f = [&](double x, double v, double t) {
      return trust_minorant_value(m, xb, x, v * v + 1.0, t);
    };
    const double x1 = xb * test::uniform(rng, 0.51, 4.0), x2 = xb * test::uniform(rng, 0.51, 4.0);
    const double v1 = test::uniform(rng, -5, 5), v2 = test::uniform(rng, -5, 5);
    const double t1 = test::uniform(rng, 1, 10), t2 = test::uniform(rng, 1, 10);
    const double lam = test::uniform(rng, 0, 1);
    const double mid = f(lam * x1 + (1 - lam) * x2, lam * v1 + (1 - lam) * v2,
                         lam * t1 + (1 - lam) * t2);
    const double chord = lam * f(x1, v1, t1) + (1 - lam) * f(x2, v2, t2);
    CHECK(mid >= chord - 1e-9 * std::max(1.0, std::abs(chord)));
  }
}

TEST_CASE("degenerate arguments are rejected") {
  CHECK_THROWS_AS(minorant_coeffs(0.0, 1.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(minorant_coeffs(1.0, -1.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(minorant_coeffs(1.0, 1.0, 0.0), InvalidInput);
  const auto m = minorant_coeffs(2.0, 1.0, 2.0);
  CHECK_THROWS_AS(trust_minorant_value(m, 2.0, 1.0, 1.0, 2.0), TrustRegionViolation);
  CHECK_THROWS_AS(trust_minorant_value(m, 2.0, 0.5, 1.0, 2.0), TrustRegionViolation);
  CHECK_NOTHROW(trust_minorant_value(m, 2.0, 1.0 + 1e-9, 1.0, 2.0));
}

TEST_CASE("time split and inverse fractions round trip") {
  const auto a = to_alpha({0.25, 0.75});
  CHECK(a.alpha1 == doctest::Approx(4.0));
  CHECK(a.alpha2 == doctest::Approx(4.0 / 3.0));
  const auto t = from_alpha(a);
  CHECK(t.tau1 == doctest::Approx(0.25));
  CHECK(t.tau2 == doctest::Approx(0.75));
  CHECK_THROWS_AS(to_alpha({0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(from_alpha({1.0, -2.0}), InvalidInput);
}

TEST_CASE("per-user surrogate is tight at the expansion point and below the rate elsewhere") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const int nt = 2 + trial % 3;
    const int kz = 1 + trial % 3;
    const auto ch = test::random_channel(rng, nt, kz, 0.7, test::log_uniform(rng, 0.1, 2.0));
    auto w0 = test::random_beams(rng, nt, kz);
    test::align_phases(ch, w0);
    const AlphaSplit a0{test::uniform(rng, 1.1, 5.0), test::uniform(rng, 1.1, 5.0)};
    for (const RateMode mode : {RateMode::kFractionalTime, RateMode::kConventional}) {
      const auto coeffs = surrogate_coeffs(ch, w0, a0, mode);
      for (int zone = 0; zone < 2; ++zone) {
        for (int k = 0; k < kz; ++k) {
          const UserIndex u{zone, k};
          const double exact = mode == RateMode::kFractionalTime
                                   ? ft_rate(ch, w0, 1.0 / a0[zone], u)
                                   : conventional_rate(ch, w0, u);
          CHECK(eval_surrogate(coeffs, ch, w0, a0, u) ==
                doctest::Approx(exact).epsilon(1e-10).scale(1.0));
        }
      }
      // Perturbed points inside the trust region stay below the rate.
      for (int rep = 0; rep < 10; ++rep) {
        BeamformerSet w = w0;
        for (int zone = 0; zone < 2; ++zone) w.w[zone] += test::random_matrix(rng, nt, kz, 0.3);
        const AlphaSplit a{a0.alpha1 * test::uniform(rng, 0.5, 2.0),
                           a0.alpha2 * test::uniform(rng, 0.5, 2.0)};
        for (int zone = 0; zone < 2; ++zone) {
          for (int k = 0; k < kz; ++k) {
            const UserIndex u{zone, k};
            const double x = ch.channel(u).dot(w.beam(u)).real();
            if (!(2.0 * x - coeffs[u].x > 0.0)) {
              CHECK_THROWS_AS(eval_surrogate(coeffs, ch, w, a, u), TrustRegionViolation);
              continue;
            }
            const double exact = mode == RateMode::kFractionalTime
                                     ? std::log1p(sinr(ch, w, u, mode)) / a[zone]
                                     : conventional_rate(ch, w, u);
            CHECK(eval_surrogate(coeffs, ch, w, a, u) <= exact + 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("surrogate construction rejects a non-positive gain") {
  std::mt19937_64 rng(15);
  const auto ch = test::random_channel(rng, 3, 2, 0.5);
  auto w = test::random_beams(rng, 3, 2);
  test::align_phases(ch, w);
  w.w[1].col(0) *= -1.0;
  CHECK_THROWS_AS(surrogate_coeffs(ch, w, AlphaSplit{}), TrustRegionViolation);
}

TEST_CASE("interference excludes the other zone only under fractional time") {
  std::mt19937_64 rng(16);
  const auto ch = test::random_channel(rng, 3, 2, 0.5, 0.3);
  const auto w = test::random_beams(rng, 3, 2);
  const UserIndex u{0, 1};
  const auto h = ch.channel(u);
  const double own_zone = std::norm(h.dot(w.w[0].col(0)));
  const double other_zone = std::norm(h.dot(w.w[1].col(0))) + std::norm(h.dot(w.w[1].col(1)));
  CHECK(interference_plus_noise(ch, w, u, RateMode::kFractionalTime) ==
        doctest::Approx(0.3 + own_zone));
  CHECK(interference_plus_noise(ch, w, u, RateMode::kConventional) ==
        doctest::Approx(0.3 + own_zone + other_zone));
}
