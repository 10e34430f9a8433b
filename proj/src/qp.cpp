#include "kvdpc/error.hpp"
#include "kvdpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kvdpc::optim {

std::string to_string(QpStatus s)
{
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iters: return "max_iters";
  }
  return "unknown";
}

QpProblem QpProblem::make(Mat H, Vec f, Mat A_in, Vec b_in, Mat A_eq, Vec b_eq)
{
  const Eigen::Index n = f.size();
  require_dims(H.rows() == n && H.cols() == n, "qp: H must be n x n with n = size(f)");
  if (A_in.size() == 0 && b_in.size() == 0) { A_in.resize(0, n); }
  if (A_eq.size() == 0 && b_eq.size() == 0) { A_eq.resize(0, n); }
  require_dims(A_in.cols() == n && A_in.rows() == b_in.size(), "qp: inequality block has inconsistent shape");
  require_dims(A_eq.cols() == n && A_eq.rows() == b_eq.size(), "qp: equality block has inconsistent shape");
  QpProblem p;
  p.H = 0.5 * (H + H.transpose());
  if (n > 0 && lambda_min_sym(p.H) < -1e-8) { throw ConfigError("qp: H is not positive semidefinite"); }
  p.f = std::move(f);
  p.A_in = std::move(A_in);
  p.b_in = std::move(b_in);
  p.A_eq = std::move(A_eq);
  p.b_eq = std::move(b_eq);
  return p;
}

namespace {

double inf_norm(const Vec & v)
{
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct Residuals
{
  double primal;
  double dual;
  double comp;
  double worst() const { return std::max({primal, dual, comp}); }
};

// Residuals scaled by the magnitude of the data they are compared against.
Residuals scaled_residuals(const QpProblem & p, const Vec & v, const Vec & s, const Vec & lam, const Vec & y)
{
  const Vec hv = p.H * v;
  const Vec atl = p.A_in.transpose() * lam;
  const Vec aty = p.A_eq.transpose() * y;
  const Vec rd = hv + p.f + atl + aty;
  const Vec ri = p.A_in * v + s - p.b_in;
  const Vec re = p.A_eq * v - p.b_eq;
  const double bscale = 1.0 + std::max(inf_norm(p.b_in), inf_norm(p.b_eq));
  const double dscale = 1.0 + std::max({inf_norm(hv), inf_norm(p.f), inf_norm(atl), inf_norm(aty)});
  const double obj = 0.5 * v.dot(hv) + p.f.dot(v);
  double comp = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) { comp = std::max(comp, std::abs(s(i) * lam(i))); }
  return {std::max(inf_norm(ri), inf_norm(re)) / bscale, inf_norm(rd) / dscale, comp / (1.0 + std::abs(obj))};
}

double max_step(const Vec & x, const Vec & dx)
{
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) { alpha = std::min(alpha, -x(i) / dx(i)); }
  }
  return alpha;
}

// Solve the equality-constrained QP on the active set identified by the
// interior point iterate. Returns false when the result is not an improvement.
bool polish(const QpProblem & p, QpSolution & sol, const Vec & s)
{
  const Eigen::Index n = p.num_vars();
  const Eigen::Index me = p.A_eq.rows();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (sol.lambda_in(i) > s(i)) { active.push_back(i); }
  }
  const auto na = static_cast<Eigen::Index>(active.size());
  if (na + me > n) { return false; }
  Mat kkt = Mat::Zero(n + na + me, n + na + me);
  Vec rhs = Vec::Zero(n + na + me);
  kkt.topLeftCorner(n, n) = p.H;
  rhs.head(n) = -p.f;
  for (Eigen::Index j = 0; j < na; ++j) {
    kkt.block(n + j, 0, 1, n) = p.A_in.row(active[j]);
    kkt.block(0, n + j, n, 1) = p.A_in.row(active[j]).transpose();
    rhs(n + j) = p.b_in(active[j]);
  }
  if (me > 0) {
    kkt.block(n + na, 0, me, n) = p.A_eq;
    kkt.block(0, n + na, n, me) = p.A_eq.transpose();
    rhs.tail(me) = p.b_eq;
  }
  Eigen::FullPivLU<Mat> lu(kkt);
  if (!lu.isInvertible()) { return false; }
  const Vec sol_kkt = lu.solve(rhs);
  if (!sol_kkt.allFinite()) { return false; }

  Vec v = sol_kkt.head(n);
  Vec lam = Vec::Zero(p.A_in.rows());
  for (Eigen::Index j = 0; j < na; ++j) {
    if (sol_kkt(n + j) < 0.0) { return false; }
    lam(active[j]) = sol_kkt(n + j);
  }
  const Vec y = sol_kkt.tail(me);
  Vec slack = p.b_in - p.A_in * v;
  const double bscale = 1.0 + inf_norm(p.b_in);
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    if (slack(i) < -1e-12 * bscale) { return false; }
    slack(i) = std::max(slack(i), 0.0);
  }
  const Residuals r = scaled_residuals(p, v, slack, lam, y);
  if (r.worst() > sol.kkt_residual) { return false; }
  sol.v = v;
  sol.lambda_in = lam;
  sol.y_eq = y;
  sol.kkt_residual = r.worst();
  sol.polished = true;
  return true;
}

}  // namespace

double kkt_residual(const QpProblem & p, const Vec & v, const Vec & lambda_in, const Vec & y_eq)
{
  const Vec rd = p.H * v + p.f + p.A_in.transpose() * lambda_in + p.A_eq.transpose() * y_eq;
  double worst = inf_norm(rd);
  const Vec slack = p.b_in - p.A_in * v;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    worst = std::max({worst, -slack(i), -lambda_in(i), std::abs(lambda_in(i) * slack(i))});
  }
  if (p.A_eq.rows() > 0) { worst = std::max(worst, inf_norm(p.A_eq * v - p.b_eq)); }
  return worst;
}

QpSolution solve_qp(const QpProblem & p, const QpOptions & opts)
{
  const Eigen::Index n = p.num_vars();
  const Eigen::Index mi = p.A_in.rows();
  const Eigen::Index me = p.A_eq.rows();
  require_dims(p.H.rows() == n && p.A_in.cols() == n && p.A_eq.cols() == n, "solve_qp: inconsistent dimensions");

  Vec v = Vec::Zero(n);
  Vec s = (p.b_in - p.A_in * v).cwiseMax(1.0);
  Vec lam = Vec::Ones(mi);
  Vec y = Vec::Zero(me);

  const double reg = 1e-13 * (1.0 + (n > 0 ? p.H.cwiseAbs().maxCoeff() : 0.0));
  QpSolution sol;
  bool converged = false;

  for (int it = 0; it <= opts.max_iters; ++it) {
    const Residuals res = scaled_residuals(p, v, s, lam, y);
    sol.iterations = it;
    if (res.worst() <= opts.tol) {
      converged = true;
      sol.kkt_residual = res.worst();
      break;
    }
    if (it == opts.max_iters) {
      sol.kkt_residual = res.worst();
      break;
    }
    if (!v.allFinite() || inf_norm(v) > 1e14 || inf_norm(lam) > 1e14) {
      sol.kkt_residual = res.worst();
      break;
    }

    const Vec rd = p.H * v + p.f + p.A_in.transpose() * lam + p.A_eq.transpose() * y;
    const Vec ri = p.A_in * v + s - p.b_in;
    const Vec re = p.A_eq * v - p.b_eq;
    const Vec w = lam.cwiseQuotient(s);

    Mat kkt = Mat::Zero(n + me, n + me);
    kkt.topLeftCorner(n, n) = p.H + p.A_in.transpose() * w.asDiagonal() * p.A_in;
    kkt.topLeftCorner(n, n).diagonal().array() += reg;
    if (me > 0) {
      kkt.topRightCorner(n, me) = p.A_eq.transpose();
      kkt.bottomLeftCorner(me, n) = p.A_eq;
      kkt.bottomRightCorner(me, me).diagonal().array() -= reg;
    }
    const Eigen::PartialPivLU<Mat> lu(kkt);

    struct Direction
    {
      Vec dv, ds, dl, dy;
    };
    auto direction = [&](const Vec & rc) {
      Vec rhs(n + me);
      rhs.head(n) = -rd - p.A_in.transpose() * (w.cwiseProduct(ri) - rc.cwiseQuotient(s));
      rhs.tail(me) = -re;
      const Vec sol_kkt = lu.solve(rhs);
      Direction d;
      d.dv = sol_kkt.head(n);
      d.dy = sol_kkt.tail(me);
      d.dl = w.cwiseProduct(p.A_in * d.dv + ri) - rc.cwiseQuotient(s);
      d.ds = -ri - p.A_in * d.dv;
      return d;
    };

    const double mu = mi > 0 ? s.dot(lam) / static_cast<double>(mi) : 0.0;
    const Vec sl = s.cwiseProduct(lam);
    const Direction aff = direction(sl);
    double alpha_aff = std::min(max_step(s, aff.ds), max_step(lam, aff.dl));
    Direction step = aff;
    if (mi > 0) {
      const double mu_aff = (s + alpha_aff * aff.ds).dot(lam + alpha_aff * aff.dl) / static_cast<double>(mi);
      const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      const Vec rc = sl + aff.ds.cwiseProduct(aff.dl) - Vec::Constant(mi, sigma * mu);
      step = direction(rc);
    }
    const double alpha_max = std::min(max_step(s, step.ds), max_step(lam, step.dl));
    const double tau = std::max(0.99, 1.0 - mu);
    const double alpha = std::min(1.0, tau * alpha_max);
    v += alpha * step.dv;
    s += alpha * step.ds;
    lam += alpha * step.dl;
    y += alpha * step.dy;
    // Keep the iterate strictly interior.
    s = s.cwiseMax(1e-300);
    lam = lam.cwiseMax(1e-300);
  }

  sol.v = v;
  sol.lambda_in = lam;
  sol.y_eq = y;
  if (converged) {
    sol.status = QpStatus::optimal;
    if (opts.polish && mi > 0) { polish(p, sol, s); }
    return sol;
  }

  // Distinguish an infeasible constraint set from slow convergence.
  const LpSolution feas = solve_lp(Vec::Zero(n), p.A_in, p.b_in, p.A_eq, p.b_eq);
  sol.status = feas.status == LpStatus::infeasible ? QpStatus::infeasible : QpStatus::max_iters;
  return sol;
}

}  // namespace kvdpc::optim
