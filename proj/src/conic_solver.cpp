// Primal-dual interior-point method for
//
//   minimize c'x  s.t.  G x + s = h,  s in K,
//
// K a product of nonnegative orthants and second-order cones. Rotated cones
// are mapped to standard ones by (q, s, u) -> (q + s, q - s, 2u) before the
// solve and mapped back afterwards. The iteration runs on the homogeneous
// self-dual embedding so that infeasibility and unboundedness come out as
// certificates rather than divergence.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "ftbf/conic.hpp"

namespace ftbf::conic {
namespace {

constexpr double kStepFraction = 0.99;
constexpr double kStaticReg = 1e-13;
constexpr int kMaxRefine = 10;
constexpr int kStallIters = 8;
constexpr double kStallMerit = 1e-5;  // stop stalling solves only once nearly converged
constexpr double kRefineTol = 1e-15;

/// One scalar orthant row or one second-order cone, with the rows of G it
/// owns restricted to the columns they touch.
struct Unit {
  bool soc = false;
  int offset = 0;
  int size = 1;
  std::vector<int> cols;
  Eigen::MatrixXd block;  // size x cols.size()
};

/// Nesterov-Todd scaling of one unit. Orthant: W = d. SOC: W = beta (2 v v' - J).
struct Scaling {
  double d = 1.0;
  double beta = 1.0;
  Eigen::VectorXd v;
};

using Seg = Eigen::Ref<const Eigen::VectorXd>;

double jnorm2(const Seg& a) { return a(0) * a(0) - a.tail(a.size() - 1).squaredNorm(); }

double jdot(const Seg& a, const Seg& b) {
  return a(0) * b(0) - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

Eigen::VectorXd apply_j(Eigen::VectorXd a) {
  a.tail(a.size() - 1) *= -1.0;
  return a;
}

class Cone {
 public:
  Cone(const Eigen::SparseMatrix<double, Eigen::RowMajor>& G,
       const std::vector<ConeBlock>& blocks, int n) {
    int offset = 0;
    for (const auto& block : blocks) {
      if (block.kind == ConeKind::kNonnegative) {
        for (int r = 0; r < block.size; ++r) units_.push_back(make_unit(G, offset + r, 1, false));
        degree_ += block.size;
      } else {
        units_.push_back(make_unit(G, offset, block.size, true));
        degree_ += 1;
      }
      offset += block.size;
    }
    m_ = offset;
    n_ = n;
    scalings_.resize(units_.size());
  }

  int degree() const { return degree_; }
  int rows() const { return m_; }
  const std::vector<Unit>& units() const { return units_; }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
    for (const auto& u : units_) e(u.offset) = 1.0;
    return e;
  }

  /// Smallest t with a + t e in the closed cone (negative when strictly inside).
  double max_violation(const Eigen::VectorXd& a) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& u : units_) {
      const auto seg = a.segment(u.offset, u.size);
      const double viol = u.soc ? seg.tail(u.size - 1).norm() - seg(0) : -seg(0);
      worst = std::max(worst, viol);
    }
    return worst;
  }

  bool interior(const Eigen::VectorXd& a) const {
    for (const auto& u : units_) {
      const auto seg = a.segment(u.offset, u.size);
      if (!(seg(0) > 0.0)) return false;
      if (u.soc && !(jnorm2(seg) > 0.0)) return false;
    }
    return true;
  }

  /// Computes the NT scaling for (s, z) and returns lambda = W z = W^{-1} s.
  bool update_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                      Eigen::VectorXd& lambda) {
    lambda.resize(m_);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      const Unit& u = units_[i];
      Scaling& w = scalings_[i];
      const auto su = s.segment(u.offset, u.size);
      const auto zu = z.segment(u.offset, u.size);
      if (!u.soc) {
        if (!(su(0) > 0.0 && zu(0) > 0.0)) return false;
        w.d = std::sqrt(su(0) / zu(0));
        lambda(u.offset) = std::sqrt(su(0) * zu(0));
        continue;
      }
      const double s_norm2 = jnorm2(su);
      const double z_norm2 = jnorm2(zu);
      if (!(s_norm2 > 0.0 && z_norm2 > 0.0 && su(0) > 0.0 && zu(0) > 0.0)) return false;
      const double s_norm = std::sqrt(s_norm2);
      const double z_norm = std::sqrt(z_norm2);
      const Eigen::VectorXd s_bar = su / s_norm;
      const Eigen::VectorXd z_bar = zu / z_norm;
      const double gamma = std::sqrt(0.5 * (1.0 + s_bar.dot(z_bar)));
      Eigen::VectorXd w_bar = (s_bar + apply_j(z_bar)) / (2.0 * gamma);
      w.beta = std::sqrt(s_norm / z_norm);
      w.v = w_bar;
      w.v(0) += 1.0;
      w.v /= std::sqrt(2.0 * (w_bar(0) + 1.0));
      lambda.segment(u.offset, u.size) = apply_w(i, zu);
    }
    return true;
  }

  Eigen::VectorXd apply_w(std::size_t i, const Seg& a) const {
    const Scaling& w = scalings_[i];
    if (!units_[i].soc) return a * w.d;
    return w.beta * (2.0 * w.v.dot(a) * w.v - apply_j(a));
  }

  Eigen::VectorXd apply_w_inv(std::size_t i, const Seg& a) const {
    const Scaling& w = scalings_[i];
    if (!units_[i].soc) return a / w.d;
    const Eigen::VectorXd jv = apply_j(w.v);
    return (2.0 * jv.dot(a) * jv - apply_j(a)) / w.beta;
  }

  Eigen::VectorXd w(const Eigen::VectorXd& a) const { return map(a, false); }
  Eigen::VectorXd w_inv(const Eigen::VectorXd& a) const { return map(a, true); }

  /// Jordan product a o b.
  Eigen::VectorXd product(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    Eigen::VectorXd out(m_);
    for (const auto& u : units_) {
      const auto au = a.segment(u.offset, u.size);
      const auto bu = b.segment(u.offset, u.size);
      if (!u.soc) {
        out(u.offset) = au(0) * bu(0);
        continue;
      }
      out(u.offset) = au.dot(bu);
      out.segment(u.offset + 1, u.size - 1) =
          au(0) * bu.tail(u.size - 1) + bu(0) * au.tail(u.size - 1);
    }
    return out;
  }

  /// Solves lambda o x = d for x.
  Eigen::VectorXd divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
    Eigen::VectorXd out(m_);
    for (const auto& u : units_) {
      const auto l = lambda.segment(u.offset, u.size);
      const auto du = d.segment(u.offset, u.size);
      if (!u.soc) {
        out(u.offset) = du(0) / l(0);
        continue;
      }
      const double rho = jnorm2(l);
      const double x0 = (l(0) * du(0) - l.tail(u.size - 1).dot(du.tail(u.size - 1))) / rho;
      out(u.offset) = x0;
      out.segment(u.offset + 1, u.size - 1) =
          (du.tail(u.size - 1) - x0 * l.tail(u.size - 1)) / l(0);
    }
    return out;
  }

  /// Largest step t with lambda + t d in the cone (lambda strictly inside).
  double max_step(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
    double step = std::numeric_limits<double>::infinity();
    for (const auto& u : units_) {
      const auto l = lambda.segment(u.offset, u.size);
      const auto du = d.segment(u.offset, u.size);
      if (!u.soc) {
        if (du(0) < 0.0) step = std::min(step, -l(0) / du(0));
        continue;
      }
      const double l_norm = std::sqrt(jnorm2(l));
      const Eigen::VectorXd l_bar = l / l_norm;
      const double ld = jdot(l_bar, du);
      const double factor = (ld + du(0)) / (l_bar(0) + 1.0);
      const double rho0 = ld / l_norm;
      const double rho1 =
          (du.tail(u.size - 1) - factor * l_bar.tail(u.size - 1)).norm() / l_norm;
      const double sigma = rho1 - rho0;
      if (sigma > 0.0) step = std::min(step, 1.0 / sigma);
    }
    return step;
  }

  /// Normal matrix sum_units (W^{-1} G_u)'(W^{-1} G_u).
  Eigen::MatrixXd normal_matrix() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      const Unit& u = units_[i];
      Eigen::MatrixXd scaled(u.size, u.cols.size());
      if (!u.soc) {
        scaled = u.block / scalings_[i].d;
      } else {
        for (Eigen::Index j = 0; j < u.block.cols(); ++j) {
          scaled.col(j) = apply_w_inv(i, u.block.col(j));
        }
      }
      const Eigen::MatrixXd local = scaled.transpose() * scaled;
      for (std::size_t a = 0; a < u.cols.size(); ++a) {
        for (std::size_t b = 0; b < u.cols.size(); ++b) M(u.cols[a], u.cols[b]) += local(a, b);
      }
    }
    return M;
  }

 private:
  static Unit make_unit(const Eigen::SparseMatrix<double, Eigen::RowMajor>& G, int offset,
                        int size, bool soc) {
    Unit u;
    u.soc = soc;
    u.offset = offset;
    u.size = size;
    for (int r = offset; r < offset + size; ++r) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G, r); it; ++it) {
        u.cols.push_back(static_cast<int>(it.col()));
      }
    }
    std::sort(u.cols.begin(), u.cols.end());
    u.cols.erase(std::unique(u.cols.begin(), u.cols.end()), u.cols.end());
    u.block = Eigen::MatrixXd::Zero(size, u.cols.size());
    for (int r = offset; r < offset + size; ++r) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G, r); it; ++it) {
        const auto pos = std::lower_bound(u.cols.begin(), u.cols.end(), it.col()) - u.cols.begin();
        u.block(r - offset, pos) += it.value();
      }
    }
    return u;
  }

  Eigen::VectorXd map(const Eigen::VectorXd& a, bool inverse) const {
    Eigen::VectorXd out(m_);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      const Unit& u = units_[i];
      const auto seg = a.segment(u.offset, u.size);
      out.segment(u.offset, u.size) = inverse ? apply_w_inv(i, seg) : apply_w(i, seg);
    }
    return out;
  }

  std::vector<Unit> units_;
  std::vector<Scaling> scalings_;
  int degree_ = 0;
  int m_ = 0;
  int n_ = 0;
};

/// Solves [0 G'; G -W'W] [dx; dz] = [bx; bz] via the normal equations.
class KktSolver {
 public:
  KktSolver(const Eigen::SparseMatrix<double>& G, const Cone& cone) : G_(G), cone_(cone) {}

  bool factor() {
    Eigen::MatrixXd M = cone_.normal_matrix();
    llt_.compute(M);
    if (llt_.info() == Eigen::Success) return true;
    const double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    double reg = kStaticReg * scale;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd R = M;
      R.diagonal().array() += reg;
      llt_.compute(R);
      if (llt_.info() == Eigen::Success) return true;
      reg *= 100.0;
    }
    return false;
  }

  void solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& dx,
             Eigen::VectorXd& dz) const {
    solve_once(bx, bz, dx, dz);
    Eigen::VectorXd rx = bx - G_.transpose() * dz;
    Eigen::VectorXd rz = bz - (G_ * dx - cone_.w(cone_.w(dz)));
    double err = std::sqrt(rx.squaredNorm() + rz.squaredNorm());
    const double target = kRefineTol * (1.0 + std::sqrt(bx.squaredNorm() + bz.squaredNorm()));
    for (int refine = 0; refine < kMaxRefine && err > target; ++refine) {
      Eigen::VectorXd cx, cz;
      solve_once(rx, rz, cx, cz);
      const Eigen::VectorXd nx = dx + cx;
      const Eigen::VectorXd nz = dz + cz;
      Eigen::VectorXd nrx = bx - G_.transpose() * nz;
      Eigen::VectorXd nrz = bz - (G_ * nx - cone_.w(cone_.w(nz)));
      const double nerr = std::sqrt(nrx.squaredNorm() + nrz.squaredNorm());
      if (!(nerr < err)) break;
      dx = nx;
      dz = nz;
      rx = std::move(nrx);
      rz = std::move(nrz);
      const bool slow = nerr > 0.5 * err;
      err = nerr;
      if (slow) break;
    }
  }

 private:
  void solve_once(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& dx,
                  Eigen::VectorXd& dz) const {
    const Eigen::VectorXd t = cone_.w_inv(cone_.w_inv(bz));
    dx = llt_.solve(bx + G_.transpose() * t);
    dz = cone_.w_inv(cone_.w_inv(G_ * dx - bz));
  }

  const Eigen::SparseMatrix<double>& G_;
  const Cone& cone_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Block-diagonal map taking rotated-cone rows to standard second-order rows.
Eigen::SparseMatrix<double> rotated_to_standard(const std::vector<ConeBlock>& cones, int m) {
  std::vector<Eigen::Triplet<double>> t;
  int offset = 0;
  for (const auto& cone : cones) {
    if (cone.kind == ConeKind::kRotatedSecondOrder) {
      t.emplace_back(offset, offset, 1.0);
      t.emplace_back(offset, offset + 1, 1.0);
      t.emplace_back(offset + 1, offset, 1.0);
      t.emplace_back(offset + 1, offset + 1, -1.0);
      for (int r = 2; r < cone.size; ++r) t.emplace_back(offset + r, offset + r, 2.0);
    } else {
      for (int r = 0; r < cone.size; ++r) t.emplace_back(offset + r, offset + r, 1.0);
    }
    offset += cone.size;
  }
  Eigen::SparseMatrix<double> T(m, m);
  T.setFromTriplets(t.begin(), t.end());
  return T;
}

Eigen::VectorXd standard_to_rotated_slack(const std::vector<ConeBlock>& cones,
                                          Eigen::VectorXd s) {
  int offset = 0;
  for (const auto& cone : cones) {
    if (cone.kind == ConeKind::kRotatedSecondOrder) {
      const double a = s(offset);
      const double b = s(offset + 1);
      s(offset) = 0.5 * (a + b);
      s(offset + 1) = 0.5 * (a - b);
      s.segment(offset + 2, cone.size - 2) *= 0.5;
    }
    offset += cone.size;
  }
  return s;
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverOptions& options) {
  problem.validate();
  const int n = problem.num_variables();
  const int m = problem.num_rows();

  const Eigen::SparseMatrix<double> T = rotated_to_standard(problem.cones, m);
  Eigen::SparseMatrix<double> G = T * problem.G;
  G.makeCompressed();
  const Eigen::VectorXd h = T * problem.h;
  const Eigen::VectorXd& c = problem.c;
  std::vector<ConeBlock> blocks = problem.cones;
  for (auto& b : blocks) {
    if (b.kind == ConeKind::kRotatedSecondOrder) b.kind = ConeKind::kSecondOrder;
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> G_rows = G;
  Cone cone(G_rows, blocks, n);
  const Eigen::VectorXd e = cone.identity();

  const double h_norm = std::max(1.0, h.norm());
  const double c_norm = std::max(1.0, c.norm());

  ConicSolution out;
  auto finish = [&](ConicStatus status, const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                    const Eigen::VectorXd& z, double scale) {
    out.status = status;
    out.x = x / scale;
    out.s = standard_to_rotated_slack(problem.cones, s / scale);
    out.z = T.transpose() * (z / scale);
    out.objective = problem.objective(out.x);
    return out;
  };

  // Starting point: least-squares primal and least-norm dual, shifted into the cone.
  Eigen::VectorXd x, s, z;
  {
    Eigen::MatrixXd GtG = Eigen::MatrixXd(G.transpose() * G);
    const double scale = std::max(1.0, GtG.diagonal().maxCoeff());
    GtG.diagonal().array() += kStaticReg * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(GtG);
    x = llt.solve(G.transpose() * h);
    s = h - G * x;
    z = -(G * llt.solve(c));
    const double ts = cone.max_violation(s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    const double tz = cone.max_violation(z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  KktSolver kkt(G, cone);
  Eigen::VectorXd lambda;
  const double degree = cone.degree() + 1.0;

  // Best iterate by worst of (pres, dres, gap measure); returned on failure.
  struct Snapshot {
    Eigen::VectorXd x, s, z;
    double tau = 1.0;
    SolveStats stats;
    double merit = std::numeric_limits<double>::infinity();
  } best;
  int since_best = 0;

  for (int iter = 0; iter <= options.max_iters; ++iter) {
    const Eigen::VectorXd rx = G.transpose() * z + tau * c;
    const Eigen::VectorXd rz = s + G * x - tau * h;
    const double cx = c.dot(x);
    const double hz = h.dot(z);
    const double rtau = kappa + cx + hz;
    const double gap = s.dot(z);
    const double mu = (gap + tau * kappa) / degree;

    const double pcost = cx / tau;
    const double dcost = -hz / tau;
    const double pres = rz.norm() / tau / h_norm;
    const double dres = rx.norm() / tau / c_norm;
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / (tau * tau) / -pcost;
    else if (dcost > 0.0) relgap = gap / (tau * tau) / dcost;

    out.stats = {iter, pres, dres, gap / (tau * tau), relgap};
    if (options.verbose) {
      std::fprintf(stderr, "%3d pcost % .9e dcost % .9e gap %.2e pres %.2e dres %.2e k/t %.2e\n",
                   iter, pcost, dcost, gap / (tau * tau), pres, dres, kappa / tau);
    }

    if (pres <= options.feastol && dres <= options.feastol &&
        (gap / (tau * tau) <= options.abstol || relgap <= options.reltol)) {
      return finish(ConicStatus::kOptimal, x, s, z, tau);
    }
    if (hz < 0.0) {
      const double pinf = (G.transpose() * z).norm() / c_norm / -hz;
      if (pinf <= options.feastol) {
        return finish(ConicStatus::kInfeasible, Eigen::VectorXd::Zero(n),
                      Eigen::VectorXd::Zero(m), z, -hz);
      }
    }
    if (cx < 0.0) {
      const double dinf = (G * x + s).norm() / h_norm / -cx;
      if (dinf <= options.feastol) {
        return finish(ConicStatus::kUnbounded, x, s, Eigen::VectorXd::Zero(m), -cx);
      }
    }
    const double merit = std::max({pres, dres, std::min(gap / (tau * tau), relgap)});
    if (merit < best.merit) {
      best = {x, s, z, tau, out.stats, merit};
      since_best = 0;
    } else if (++since_best >= kStallIters && best.merit <= kStallMerit) {
      break;
    }
    if (iter == options.max_iters) break;

    if (!cone.update_scaling(s, z, lambda) || !kkt.factor()) break;

    // Direction for the tau-dependent part of the right-hand side.
    Eigen::VectorXd x1, z1;
    kkt.solve(-c, h, x1, z1);
    const double denom = c.dot(x1) + h.dot(z1) - kappa / tau;

    struct Direction {
      Eigen::VectorXd dx, dz, ds_scaled, dz_scaled, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double residual_scale, const Eigen::VectorXd& d_s, double d_kappa) {
      Direction d;
      const Eigen::VectorXd l_div = cone.divide(lambda, d_s);
      Eigen::VectorXd x2, z2;
      kkt.solve(-residual_scale * rx, -residual_scale * rz + cone.w(l_div), x2, z2);
      d.dtau = (-residual_scale * rtau + d_kappa / tau - c.dot(x2) - h.dot(z2)) / denom;
      d.dx = x2 + d.dtau * x1;
      d.dz = z2 + d.dtau * z1;
      d.dkappa = (-d_kappa - kappa * d.dtau) / tau;
      d.dz_scaled = cone.w(d.dz);
      d.ds_scaled = -(l_div + d.dz_scaled);
      d.ds = cone.w(d.ds_scaled);
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double step = std::min(cone.max_step(lambda, d.ds_scaled), cone.max_step(lambda, d.dz_scaled));
      if (d.dtau < 0.0) step = std::min(step, -tau / d.dtau);
      if (d.dkappa < 0.0) step = std::min(step, -kappa / d.dkappa);
      return step;
    };

    const Eigen::VectorXd ll = cone.product(lambda, lambda);
    const Direction affine = direction(1.0, ll, tau * kappa);
    const double step_aff = std::min(1.0, step_length(affine));
    const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), 0.0, 1.0);

    const Eigen::VectorXd d_s =
        ll + cone.product(affine.ds_scaled, affine.dz_scaled) - sigma * mu * e;
    const double d_kappa = tau * kappa + affine.dtau * affine.dkappa - sigma * mu;
    const Direction combined = direction(1.0 - sigma, d_s, d_kappa);
    const double step = std::min(1.0, kStepFraction * step_length(combined));
    if (!(step > 1e-12)) break;

    x += step * combined.dx;
    z += step * combined.dz;
    s += step * combined.ds;
    tau += step * combined.dtau;
    kappa += step * combined.dkappa;
    if (!cone.interior(s) || !cone.interior(z) || !(tau > 0.0) || !(kappa > 0.0)) break;
  }
  if (!std::isfinite(best.merit)) return finish(ConicStatus::kNumericalFailure, x, s, z, tau);
  const int iterations = out.stats.iterations;
  out.stats = best.stats;
  out.stats.iterations = iterations;
  return finish(ConicStatus::kNumericalFailure, best.x, best.s, best.z, best.tau);
}

}  // namespace ftbf::conic
