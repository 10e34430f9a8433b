#include "kvdpc/error.hpp"
#include "kvdpc/optim.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace kvdpc::optim {

std::string to_string(LpStatus s)
{
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;

class Tableau
{
public:
  // Rows 0..d-1 hold [A | I | b]; row d holds reduced costs and -objective.
  Tableau(const Mat & A, const Vec & b) : d_(A.rows()), m_(A.cols()), t_(Mat::Zero(A.rows() + 1, A.cols() + A.rows() + 1))
  {
    t_.topLeftCorner(d_, m_) = A;
    t_.block(0, m_, d_, d_).setIdentity();
    t_.block(0, m_ + d_, d_, 1) = b;
    basis_.resize(static_cast<std::size_t>(d_));
    for (Eigen::Index i = 0; i < d_; ++i) { basis_[static_cast<std::size_t>(i)] = m_ + i; }
  }

  Eigen::Index rows() const { return d_; }
  Eigen::Index structural() const { return m_; }
  Eigen::Index rhs_col() const { return m_ + d_; }
  Mat & data() { return t_; }
  const Mat & data() const { return t_; }
  std::vector<Eigen::Index> & basis() { return basis_; }

  void pivot(Eigen::Index row, Eigen::Index col)
  {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index r = 0; r <= d_; ++r) {
      if (r == row) { continue; }
      const double factor = t_(r, col);
      if (factor != 0.0) { t_.row(r) -= factor * t_.row(row); }
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Bland's rule over columns [0, ncols). Returns false when unbounded.
  enum class Outcome { optimal, unbounded, stalled };
  Outcome run(Eigen::Index ncols)
  {
    const long cap = 50 * static_cast<long>(ncols + d_) + 1000;
    for (long iter = 0; iter < cap; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        if (t_(d_, j) < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) { return Outcome::optimal; }
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < d_; ++r) {
        const double a = t_(r, enter);
        if (a > kPivotTol) {
          const double ratio = t_(r, rhs_col()) / a;
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
               basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) { return Outcome::unbounded; }
      pivot(leave, enter);
    }
    return Outcome::stalled;
  }

private:
  Eigen::Index d_;
  Eigen::Index m_;
  Mat t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

StandardLpResult simplex_standard(const Mat & A_in, const Vec & b_in, const Vec & c)
{
  require_dims(A_in.rows() == b_in.size() && A_in.cols() == c.size(), "simplex: inconsistent dimensions");
  const Eigen::Index d = A_in.rows();
  const Eigen::Index m = A_in.cols();
  Mat A = A_in;
  Vec b = b_in;
  Vec sign = Vec::Ones(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (b(i) < 0.0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
      sign(i) = -1.0;
    }
  }

  StandardLpResult out;
  Tableau tab(A, b);
  Mat & t = tab.data();

  // Phase 1: minimise the sum of artificials.
  for (Eigen::Index j = 0; j < m; ++j) { t(d, j) = -A.col(j).sum(); }
  t(d, tab.rhs_col()) = -b.sum();
  if (tab.run(m) == Tableau::Outcome::stalled) { throw SolverError("simplex: iteration cap reached in phase 1"); }
  const double infeas = -t(d, tab.rhs_col());
  const double bscale = 1.0 + (d > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  if (infeas > 1e-9 * bscale) {
    out.status = LpStatus::infeasible;
    return out;
  }

  // Drive artificials out of the basis; rows that cannot be pivoted are redundant.
  for (Eigen::Index r = 0; r < d; ++r) {
    if (tab.basis()[static_cast<std::size_t>(r)] < m) { continue; }
    Eigen::Index best = -1;
    double mag = kPivotTol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(t(r, j)) > mag) {
        mag = std::abs(t(r, j));
        best = j;
      }
    }
    if (best >= 0) { tab.pivot(r, best); }
  }

  // Phase 2 reduced costs.
  t.row(d).setZero();
  for (Eigen::Index j = 0; j < m; ++j) { t(d, j) = c(j); }
  for (Eigen::Index r = 0; r < d; ++r) {
    const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(r)];
    const double cb = bj < m ? c(bj) : 0.0;
    if (cb != 0.0) { t.row(d) -= cb * t.row(r); }
  }
  const auto outcome = tab.run(m);
  if (outcome == Tableau::Outcome::stalled) { throw SolverError("simplex: iteration cap reached in phase 2"); }
  if (outcome == Tableau::Outcome::unbounded) {
    out.status = LpStatus::unbounded;
    return out;
  }

  out.status = LpStatus::optimal;
  out.x = Vec::Zero(m);
  Vec cb(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(r)];
    if (bj < m) { out.x(bj) = t(r, tab.rhs_col()); }
    cb(r) = bj < m ? c(bj) : 0.0;
  }
  // The artificial block of the tableau holds B^{-1} of the sign-flipped system.
  const Mat binv = t.block(0, m, d, d);
  out.y = (cb.transpose() * binv).transpose().cwiseProduct(sign);
  out.value = c.dot(out.x);
  return out;
}

namespace {

// Solves min c'v s.t. A_in v <= b_in, A_eq v = b_eq through the standard-form
// dual, whose row count equals dim(v). Infeasible dual means the primal is
// unbounded or infeasible; `raw_dual_infeasible` reports that case.
struct DualRoute
{
  LpStatus status;
  Vec v;
  bool dual_infeasible = false;
};

DualRoute via_dual(const Vec & c, const Mat & A_in, const Vec & b_in, const Mat & A_eq, const Vec & b_eq)
{
  const Eigen::Index n = c.size();
  const Eigen::Index mi = A_in.rows();
  const Eigen::Index me = A_eq.rows();
  Mat As(n, mi + 2 * me);
  As.leftCols(mi) = A_in.transpose();
  As.middleCols(mi, me) = A_eq.transpose();
  As.rightCols(me) = -A_eq.transpose();
  Vec cs(mi + 2 * me);
  cs.head(mi) = b_in;
  cs.segment(mi, me) = b_eq;
  cs.tail(me) = -b_eq;
  const StandardLpResult r = simplex_standard(As, -c, cs);
  if (r.status == LpStatus::optimal) { return {LpStatus::optimal, r.y}; }
  if (r.status == LpStatus::unbounded) { return {LpStatus::infeasible, {}}; }
  DualRoute out{LpStatus::infeasible, {}};
  out.dual_infeasible = true;
  return out;
}

bool feasible(const Mat & A_in, const Vec & b_in, const Mat & A_eq, const Vec & b_eq)
{
  const Eigen::Index n = A_in.cols();
  const Eigen::Index mi = A_in.rows();
  Mat Ai(mi + 1, n + 1);
  Ai.topLeftCorner(mi, n) = A_in;
  Ai.topRightCorner(mi, 1).setConstant(-1.0);
  Ai.bottomLeftCorner(1, n).setZero();
  Ai(mi, n) = -1.0;
  Vec bi(mi + 1);
  bi.head(mi) = b_in;
  bi(mi) = 1.0;
  Mat Ae(A_eq.rows(), n + 1);
  Ae.leftCols(n) = A_eq;
  Ae.rightCols(1).setZero();
  Vec c = Vec::Zero(n + 1);
  c(n) = 1.0;
  const DualRoute r = via_dual(c, Ai, bi, Ae, b_eq);
  if (r.status != LpStatus::optimal) { return false; }
  const double scale = 1.0 + (mi > 0 ? b_in.cwiseAbs().maxCoeff() : 0.0);
  return r.v(n) <= 1e-9 * scale;
}

}  // namespace

LpSolution solve_lp(const Vec & c, const Mat & A_in_arg, const Vec & b_in, const Mat & A_eq_arg, const Vec & b_eq)
{
  const Eigen::Index n = c.size();
  Mat A_in = A_in_arg;
  Mat A_eq = A_eq_arg;
  if (A_in.size() == 0) { A_in.resize(b_in.size(), n); }
  if (A_eq.size() == 0) { A_eq.resize(b_eq.size(), n); }
  require_dims(A_in.cols() == n && A_in.rows() == b_in.size(), "solve_lp: inequality block has inconsistent shape");
  require_dims(A_eq.cols() == n && A_eq.rows() == b_eq.size(), "solve_lp: equality block has inconsistent shape");

  LpSolution out;
  const DualRoute r = via_dual(c, A_in, b_in, A_eq, b_eq);
  if (r.status == LpStatus::optimal) {
    out.status = LpStatus::optimal;
    out.v = r.v;
    out.value = c.dot(r.v);
    return out;
  }
  if (r.dual_infeasible && feasible(A_in, b_in, A_eq, b_eq)) {
    out.status = LpStatus::unbounded;
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.status = LpStatus::infeasible;
  out.value = std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace kvdpc::optim
