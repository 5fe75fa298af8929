#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace ftbf::conic {

/// Sparse affine function of the decision vector: sum_j coef_j x_j + constant.
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  AffineExpr() = default;
  AffineExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  static AffineExpr variable(int index, double coef = 1.0);

  double evaluate(const Eigen::VectorXd& x) const;

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double s);
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator*(double s, AffineExpr a);
AffineExpr operator-(AffineExpr a);

enum class ConeKind {
  kNonnegative,
  kSecondOrder,         // (t, u): t >= ||u||
  kRotatedSecondOrder,  // (q, s, u): q s >= ||u||^2, q >= 0, s >= 0
};

struct ConeBlock {
  ConeKind kind = ConeKind::kNonnegative;
  int size = 0;
};

/// A cone block together with the affine rows that must lie in it.
struct ConeRows {
  ConeBlock block;
  std::vector<AffineExpr> rows;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
};

/// Rows whose membership in the rotated cone is q s >= ||u||^2 with q, s >= 0.
ConeRows rotated_soc_rows(const AffineExpr& s, const AffineExpr& q,
                          std::span<const AffineExpr> u);

/// Signed distance-like membership margin of a point in a cone: >= 0 iff member.
/// Orthant: min entry. SOC: t - ||u||. Rotated: min(q, s, q s - ||u||^2).
double cone_margin(ConeKind kind, const Eigen::Ref<const Eigen::VectorXd>& v);

/// minimize c'x + offset  s.t.  h - G x in K = K_1 x ... x K_p.
/// Rows of G and h are laid out block by block in the order of `cones`.
struct ConicProblem {
  Eigen::VectorXd c;
  double objective_offset = 0.0;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  std::vector<ConeBlock> cones;
  std::vector<std::string> variable_names;

  int num_variables() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(h.size()); }

  /// Throws InvalidInput when dimensions or cone sizes are inconsistent.
  void validate() const;

  /// Smallest cone margin of h - G x over all blocks (>= 0 iff feasible).
  double min_cone_margin(const Eigen::VectorXd& x) const;
  double objective(const Eigen::VectorXd& x) const { return c.dot(x) + objective_offset; }
};

/// Incremental assembly of a ConicProblem from affine expressions.
class ConicBuilder {
 public:
  int add_variable(std::string name);
  int num_variables() const { return static_cast<int>(names_.size()); }

  void add_nonnegative(const AffineExpr& e);  // e >= 0
  void add_cone(const ConeRows& rows);
  void add_second_order(const AffineExpr& t, std::span<const AffineExpr> u);
  void add_rotated(const AffineExpr& q, const AffineExpr& s, std::span<const AffineExpr> u);
  void minimize(const AffineExpr& objective) { objective_ = objective; }

  ConicProblem build() const;

 private:
  std::vector<std::string> names_;
  std::vector<ConeBlock> cones_;
  std::vector<AffineExpr> rows_;
  AffineExpr objective_;
};

enum class ConicStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

const char* to_string(ConicStatus status);

struct SolverOptions {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iters = 100;
  bool verbose = false;  // per-iteration trace on stderr
};

struct SolveStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
};

/// Primal x, slack s = h - G x, dual z (in the dual cone, G'z + c = 0).
/// For kInfeasible, z is a certificate (G'z = 0, h'z = -1); for kUnbounded,
/// x is a ray (G x in -K, c'x = -1). For kNumericalFailure, x, s, z are the
/// iterate with the smallest residuals and stats describe that iterate.
struct ConicSolution {
  ConicStatus status = ConicStatus::kNumericalFailure;
  Eigen::VectorXd x;
  Eigen::VectorXd s;
  Eigen::VectorXd z;
  double objective = 0.0;
  SolveStats stats;
};

/// Homogeneous self-dual primal-dual interior-point method with
/// Nesterov-Todd scaling and Mehrotra correction.
ConicSolution solve(const ConicProblem& problem, const SolverOptions& options = {});

/// Writes the problem in Conic Benchmark Format (CBF version 3).
void write_cbf(const ConicProblem& problem, std::ostream& out);

}  // namespace ftbf::conic
