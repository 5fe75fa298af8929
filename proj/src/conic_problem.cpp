#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ftbf/conic.hpp"
#include "ftbf/errors.hpp"

namespace ftbf::conic {

AffineExpr AffineExpr::variable(int index, double coef) {
  AffineExpr e;
  e.terms.emplace_back(index, coef);
  return e;
}

double AffineExpr::evaluate(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const auto& [j, a] : terms) v += a * x(j);
  return v;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  for (const auto& [j, a] : other.terms) terms.emplace_back(j, -a);
  constant -= other.constant;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
AffineExpr operator-(AffineExpr a) { return a *= -1.0; }

Eigen::VectorXd ConeRows::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) v(r) = rows[r].evaluate(x);
  return v;
}

ConeRows rotated_soc_rows(const AffineExpr& s, const AffineExpr& q,
                          std::span<const AffineExpr> u) {
  ConeRows out;
  out.block = {ConeKind::kRotatedSecondOrder, static_cast<int>(u.size()) + 2};
  out.rows.reserve(u.size() + 2);
  out.rows.push_back(q);
  out.rows.push_back(s);
  out.rows.insert(out.rows.end(), u.begin(), u.end());
  return out;
}

double cone_margin(ConeKind kind, const Eigen::Ref<const Eigen::VectorXd>& v) {
  switch (kind) {
    case ConeKind::kNonnegative:
      return v.size() == 0 ? std::numeric_limits<double>::infinity() : v.minCoeff();
    case ConeKind::kSecondOrder:
      return v(0) - v.tail(v.size() - 1).norm();
    case ConeKind::kRotatedSecondOrder:
      return std::min({v(0), v(1), v(0) * v(1) - v.tail(v.size() - 2).squaredNorm()});
  }
  return -std::numeric_limits<double>::infinity();
}

void ConicProblem::validate() const {
  const int n = num_variables();
  const int m = num_rows();
  if (G.rows() != m || G.cols() != n) throw InvalidInput("G does not match c and h");
  if (!variable_names.empty() && static_cast<int>(variable_names.size()) != n) {
    throw InvalidInput("variable name map does not match the variable count");
  }
  int total = 0;
  for (const auto& cone : cones) {
    const int min_size = cone.kind == ConeKind::kNonnegative     ? 1
                         : cone.kind == ConeKind::kSecondOrder ? 1
                                                                 : 2;
    if (cone.size < min_size) throw InvalidInput("cone block below its minimum size");
    total += cone.size;
  }
  if (total != m) throw InvalidInput("cone sizes do not sum to the row count");
}

double ConicProblem::min_cone_margin(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd slack = h - G * x;
  double worst = std::numeric_limits<double>::infinity();
  int offset = 0;
  for (const auto& cone : cones) {
    worst = std::min(worst, cone_margin(cone.kind, slack.segment(offset, cone.size)));
    offset += cone.size;
  }
  return worst;
}

int ConicBuilder::add_variable(std::string name) {
  names_.push_back(std::move(name));
  return static_cast<int>(names_.size()) - 1;
}

void ConicBuilder::add_nonnegative(const AffineExpr& e) {
  if (!cones_.empty() && cones_.back().kind == ConeKind::kNonnegative) {
    ++cones_.back().size;
  } else {
    cones_.push_back({ConeKind::kNonnegative, 1});
  }
  rows_.push_back(e);
}

void ConicBuilder::add_cone(const ConeRows& rows) {
  if (static_cast<int>(rows.rows.size()) != rows.block.size) {
    throw InvalidInput("cone block size does not match its row count");
  }
  if (rows.block.kind == ConeKind::kNonnegative) {
    for (const auto& r : rows.rows) add_nonnegative(r);
    return;
  }
  cones_.push_back(rows.block);
  rows_.insert(rows_.end(), rows.rows.begin(), rows.rows.end());
}

void ConicBuilder::add_second_order(const AffineExpr& t, std::span<const AffineExpr> u) {
  ConeRows rows;
  rows.block = {ConeKind::kSecondOrder, static_cast<int>(u.size()) + 1};
  rows.rows.push_back(t);
  rows.rows.insert(rows.rows.end(), u.begin(), u.end());
  add_cone(rows);
}

void ConicBuilder::add_rotated(const AffineExpr& q, const AffineExpr& s,
                               std::span<const AffineExpr> u) {
  add_cone(rotated_soc_rows(s, q, u));
}

ConicProblem ConicBuilder::build() const {
  const int n = num_variables();
  const int m = static_cast<int>(rows_.size());
  ConicProblem p;
  p.variable_names = names_;
  p.cones = cones_;
  p.c = Eigen::VectorXd::Zero(n);
  for (const auto& [j, a] : objective_.terms) {
    if (j < 0 || j >= n) throw InvalidInput("objective references an unknown variable");
    p.c(j) += a;
  }
  p.objective_offset = objective_.constant;
  p.h.resize(m);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < m; ++r) {
    p.h(r) = rows_[r].constant;
    for (const auto& [j, a] : rows_[r].terms) {
      if (j < 0 || j >= n) throw InvalidInput("constraint references an unknown variable");
      if (a != 0.0) triplets.emplace_back(r, j, -a);
    }
  }
  p.G.resize(m, n);
  p.G.setFromTriplets(triplets.begin(), triplets.end());
  p.G.makeCompressed();
  return p;
}

const char* to_string(ConicStatus status) {
  switch (status) {
    case ConicStatus::kOptimal: return "optimal";
    case ConicStatus::kInfeasible: return "infeasible";
    case ConicStatus::kUnbounded: return "unbounded";
    case ConicStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

void write_cbf(const ConicProblem& problem, std::ostream& out) {
  problem.validate();
  const int n = problem.num_variables();
  const int m = problem.num_rows();

  // CBF rows are A x + b in K with A = -G, b = h. CBF's rotated cone is
  // 2 x1 x2 >= ||x3:||^2, so the second row of each rotated block is halved.
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(m);
  int offset = 0;
  for (const auto& cone : problem.cones) {
    if (cone.kind == ConeKind::kRotatedSecondOrder) row_scale(offset + 1) = 0.5;
    offset += cone.size;
  }

  out.precision(17);
  out << "# " << n << " variables, " << m << " rows\n";
  out << "VER\n3\n\nOBJSENSE\nMIN\n\n";
  out << "VAR\n" << n << " 1\nF " << n << "\n\n";
  out << "CON\n" << m << " " << problem.cones.size() << "\n";
  for (const auto& cone : problem.cones) {
    const char* tag = cone.kind == ConeKind::kNonnegative   ? "L+"
                      : cone.kind == ConeKind::kSecondOrder ? "Q"
                                                              : "QR";
    out << tag << " " << cone.size << "\n";
  }
  out << "\n";

  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < n; ++j) {
    if (problem.c(j) != 0.0) obj.emplace_back(j, problem.c(j));
  }
  out << "OBJACOORD\n" << obj.size() << "\n";
  for (const auto& [j, v] : obj) out << j << " " << v << "\n";
  out << "\nOBJBCOORD\n" << problem.objective_offset << "\n\n";

  std::vector<Eigen::Triplet<double>> entries;
  for (int j = 0; j < problem.G.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(problem.G, j); it; ++it) {
      entries.emplace_back(static_cast<int>(it.row()), j, -it.value() * row_scale(it.row()));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
  });
  out << "ACOORD\n" << entries.size() << "\n";
  for (const auto& t : entries) out << t.row() << " " << t.col() << " " << t.value() << "\n";

  std::vector<std::pair<int, double>> rhs;
  for (int r = 0; r < m; ++r) {
    if (problem.h(r) != 0.0) rhs.emplace_back(r, problem.h(r) * row_scale(r));
  }
  out << "\nBCOORD\n" << rhs.size() << "\n";
  for (const auto& [r, v] : rhs) out << r << " " << v << "\n";
}

}  // namespace ftbf::conic
