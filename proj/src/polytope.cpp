#include "kvdpc/polytope.hpp"

#include "kvdpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace kvdpc {

namespace {

constexpr double kZeroNormal = 1e-12;

bool lex_less(const Vec & a, const Vec & b)
{
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) { return true; }
    if (a(i) > b(i)) { return false; }
  }
  return false;
}

}  // namespace

Polytope::Polytope(Mat A, Vec b)
{
  require_dims(A.rows() == b.size(), "polytope: A and b disagree in row count");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm > kZeroNormal) {
      A.row(i) /= nrm;
      b(i) /= nrm;
      keep.push_back(i);
    } else if (b(i) < 0.0) {
      A.row(i).setZero();
      keep.push_back(i);
    }
  }
  A_.resize(static_cast<Eigen::Index>(keep.size()), A.cols());
  b_.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    A_.row(static_cast<Eigen::Index>(r)) = A.row(keep[r]);
    b_(static_cast<Eigen::Index>(r)) = b(keep[r]);
  }
}

Polytope Polytope::box(const Vec & lo, const Vec & hi)
{
  require_dims(lo.size() == hi.size(), "polytope box: bounds disagree in size");
  const Eigen::Index d = lo.size();
  Mat A(2 * d, d);
  A << Mat::Identity(d, d), -Mat::Identity(d, d);
  Vec b(2 * d);
  b << hi, -lo;
  return Polytope(A, b);
}

Polytope Polytope::symmetric_box(const Vec & bound)
{
  return box(-bound, bound);
}

Polytope Polytope::full_space(Eigen::Index dim)
{
  return Polytope(Mat(0, dim), Vec(0));
}

double Polytope::max_violation(const Vec & v) const
{
  require_dims(v.size() == dim(), "polytope: point dimension mismatch");
  if (rows() == 0) { return -std::numeric_limits<double>::infinity(); }
  return (A_ * v - b_).maxCoeff();
}

Polytope Polytope::intersect(const Polytope & other) const
{
  require_dims(dim() == other.dim(), "polytope intersect: dimension mismatch");
  Mat A(rows() + other.rows(), dim());
  A << A_, other.A_;
  Vec b(rows() + other.rows());
  b << b_, other.b_;
  return Polytope(A, b);
}

Polytope Polytope::translated(const Vec & shift) const
{
  return Polytope(A_, b_ - A_ * shift);
}

Polytope Polytope::scaled(double factor) const
{
  return Polytope(A_, factor * b_);
}

std::optional<double> Polytope::support(const Vec & dir) const
{
  const auto lp = optim::solve_lp(-dir, A_, b_);
  if (lp.status == optim::LpStatus::infeasible) { throw SolverError("polytope support: empty set"); }
  if (lp.status == optim::LpStatus::unbounded) { return std::nullopt; }
  return -lp.value;
}

std::pair<Vec, double> Polytope::chebyshev_ball() const
{
  // max r  s.t.  a_i v + r ||a_i|| <= b_i,  r <= 1e6
  const Eigen::Index d = dim();
  Mat A(rows() + 1, d + 1);
  Vec b(rows() + 1);
  A.topLeftCorner(rows(), d) = A_;
  for (Eigen::Index i = 0; i < rows(); ++i) { A(i, d) = A_.row(i).norm(); }
  A.bottomLeftCorner(1, d).setZero();
  A(rows(), d) = 1.0;
  b.head(rows()) = b_;
  b(rows()) = 1e6;
  Vec c = Vec::Zero(d + 1);
  c(d) = -1.0;
  const auto lp = optim::solve_lp(c, A, b);
  if (lp.status != optim::LpStatus::optimal) { return {Vec::Zero(d), -1.0}; }
  return {lp.v.head(d), lp.v(d)};
}

bool Polytope::is_empty() const
{
  const auto lp = optim::solve_lp(Vec::Zero(dim()), A_, b_);
  return lp.status == optim::LpStatus::infeasible;
}

bool Polytope::subset_of(const Polytope & other, double tol) const
{
  for (Eigen::Index i = 0; i < other.rows(); ++i) {
    const auto s = support(other.A_.row(i).transpose());
    if (!s || *s > other.b_(i) + tol) { return false; }
  }
  return true;
}

std::vector<Vec> Polytope::vertices(double tol) const
{
  const Eigen::Index d = dim();
  const Eigen::Index m = rows();
  std::vector<Vec> out;
  if (d == 0 || m < d) { return out; }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  Mat sub(d, d);
  Vec rhs(d);
  while (true) {
    for (Eigen::Index r = 0; r < d; ++r) {
      sub.row(r) = A_.row(idx[static_cast<std::size_t>(r)]);
      rhs(r) = b_(idx[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Mat> lu(sub);
    lu.setThreshold(1e-10);
    if (lu.isInvertible()) {
      const Vec v = lu.solve(rhs);
      if (v.allFinite() && max_violation(v) <= tol * (1.0 + v.cwiseAbs().maxCoeff())) {
        bool dup = false;
        for (const auto & w : out) {
          if ((w - v).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + v.cwiseAbs().maxCoeff())) {
            dup = true;
            break;
          }
        }
        if (!dup) { out.push_back(v); }
      }
    }
    // Next combination.
    Eigen::Index pos = d - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - d + pos) { --pos; }
    if (pos < 0) { break; }
    ++idx[static_cast<std::size_t>(pos)];
    for (Eigen::Index r = pos + 1; r < d; ++r) {
      idx[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(r - 1)] + 1;
    }
  }
  std::sort(out.begin(), out.end(), lex_less);
  return out;
}

Polytope Polytope::sorted() const
{
  std::vector<Vec> rows_ab;
  rows_ab.reserve(static_cast<std::size_t>(rows()));
  for (Eigen::Index i = 0; i < rows(); ++i) {
    Vec r(dim() + 1);
    r << A_.row(i).transpose(), b_(i);
    rows_ab.push_back(r);
  }
  std::sort(rows_ab.begin(), rows_ab.end(), lex_less);
  Polytope out;
  out.A_.resize(rows(), dim());
  out.b_.resize(rows());
  for (Eigen::Index i = 0; i < rows(); ++i) {
    out.A_.row(i) = rows_ab[static_cast<std::size_t>(i)].head(dim()).transpose();
    out.b_(i) = rows_ab[static_cast<std::size_t>(i)](dim());
  }
  return out;
}

Polytope polytope_pre(const Mat & A_cl, const Polytope & p)
{
  require_dims(A_cl.rows() == p.dim() && A_cl.cols() == p.dim(), "polytope_pre: A_cl must be square of the set dimension");
  return Polytope(p.A() * A_cl, p.b());
}

Polytope polytope_reduce(const Polytope & p)
{
  if (p.is_empty()) { throw SolverError("polytope_reduce: empty polytope"); }
  const Eigen::Index d = p.dim();

  // Exact-direction duplicates: keep the tightest offset.
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (p.A().row(i).norm() <= kZeroNormal) { continue; }  // only 0 <= b >= 0 rows can remain here
    bool merged = false;
    for (auto & j : order) {
      if ((p.A().row(i) - p.A().row(j)).cwiseAbs().maxCoeff() <= 1e-12) {
        if (p.b()(i) < p.b()(j)) { j = i; }
        merged = true;
        break;
      }
    }
    if (!merged) { order.push_back(i); }
  }

  std::vector<bool> alive(order.size(), true);
  for (std::size_t r = 0; r < order.size(); ++r) {
    Eigen::Index count = 0;
    for (std::size_t q = 0; q < order.size(); ++q) {
      if (q != r && alive[q]) { ++count; }
    }
    Mat A(count, d);
    Vec b(count);
    Eigen::Index at = 0;
    for (std::size_t q = 0; q < order.size(); ++q) {
      if (q != r && alive[q]) {
        A.row(at) = p.A().row(order[q]);
        b(at) = p.b()(order[q]);
        ++at;
      }
    }
    const Vec a = p.A().row(order[r]).transpose();
    const auto lp = optim::solve_lp(-a, A, b);
    if (lp.status == optim::LpStatus::optimal && -lp.value <= p.b()(order[r]) + 1e-9) { alive[r] = false; }
  }

  Eigen::Index kept = 0;
  for (bool a : alive) { kept += a ? 1 : 0; }
  Mat A(kept, d);
  Vec b(kept);
  Eigen::Index at = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!alive[r]) { continue; }
    A.row(at) = p.A().row(order[r]);
    b(at) = p.b()(order[r]);
    ++at;
  }
  return Polytope(A, b).sorted();
}

InvariantSetResult max_invariant_set(
  const Mat & A_cl, const Mat & K, const Polytope & Z, const Polytope & dU, const InvariantSetOptions & opts)
{
  require_dims(A_cl.rows() == Z.dim() && A_cl.cols() == Z.dim(), "max_invariant_set: A_cl does not match Z");
  require_dims(K.cols() == Z.dim() && K.rows() == dU.dim(), "max_invariant_set: K does not match Z and dU");
  if (spectral_radius(A_cl) >= 1.0) { throw ConfigError("max_invariant_set: A_cl is not Schur stable"); }

  const Polytope input_rows(dU.A() * K, dU.b());
  Polytope omega = Z.intersect(input_rows);
  if (omega.is_empty()) { throw InvariantSetError("max_invariant_set: admissible set is empty", omega); }
  omega = polytope_reduce(omega);

  for (int it = 0; it < opts.max_iters; ++it) {
    const Polytope pre = polytope_pre(A_cl, omega);
    if (omega.subset_of(pre, opts.tol)) { return {omega, it}; }
    Polytope next = omega.intersect(pre);
    if (next.is_empty()) { throw InvariantSetError("max_invariant_set: iterate became empty", omega); }
    omega = polytope_reduce(next);
  }
  throw InvariantSetError("max_invariant_set: iteration cap reached", omega);
}

double distance_to(const Polytope & p, const Vec & v)
{
  if (p.contains(v, 0.0)) { return 0.0; }
  const Eigen::Index d = p.dim();
  const auto qp = optim::QpProblem::make(Mat::Identity(d, d), -v, p.A(), p.b());
  optim::QpOptions opts;
  opts.tol = 1e-12;
  const auto sol = optim::solve_qp(qp, opts);
  if (sol.status != optim::QpStatus::optimal) { throw SolverError("distance_to: projection failed"); }
  return (sol.v - v).norm();
}

double hausdorff_distance(const Polytope & a, const Polytope & b)
{
  double h = 0.0;
  for (const auto & v : a.vertices()) { h = std::max(h, distance_to(b, v)); }
  for (const auto & v : b.vertices()) { h = std::max(h, distance_to(a, v)); }
  return h;
}

double diameter(const Polytope & p)
{
  const auto verts = p.vertices();
  double best = 0.0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    for (std::size_t j = i + 1; j < verts.size(); ++j) { best = std::max(best, (verts[i] - verts[j]).norm()); }
  }
  return best;
}

void write_halfspaces_csv(std::ostream & os, const Polytope & p)
{
  for (Eigen::Index j = 0; j < p.dim(); ++j) { os << 'a' << (j + 1) << ','; }
  os << "b\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.dim(); ++j) { os << p.A()(i, j) << ','; }
    os << p.b()(i) << '\n';
  }
}

void write_vertices_csv(std::ostream & os, const Polytope & p)
{
  for (Eigen::Index j = 0; j < p.dim(); ++j) { os << (j ? "," : "") << 'v' << (j + 1); }
  os << '\n' << std::setprecision(17);
  for (const auto & v : p.vertices()) {
    for (Eigen::Index j = 0; j < v.size(); ++j) { os << (j ? "," : "") << v(j); }
    os << '\n';
  }
}

}  // namespace kvdpc
