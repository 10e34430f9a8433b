#include "kvdpc/terminal.hpp"

#include "kvdpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

namespace kvdpc {

CostGain compute_terminal_cost_gain(
  const Mat & A, const Mat & B, const Mat & Q, const Mat & R, const std::string & label)
{
  require_dims(A.rows() == A.cols() && B.rows() == A.rows(), "terminal cost: A and B disagree");
  require_dims(Q.rows() == A.rows() && Q.cols() == A.rows(), "terminal cost: Q has wrong shape");
  require_dims(R.rows() == B.cols() && R.cols() == B.cols(), "terminal cost: R has wrong shape");
  if (lambda_min_sym(Q) <= 0.0 || lambda_min_sym(R) <= 0.0) {
    throw ConfigError("terminal cost: Q and R must be positive definite");
  }
  try {
    const auto sol = optim::solve_dare(A, B, Q, R);
    return {sol.P, sol.K};
  } catch (const SolverError & e) {
    throw SolverError("terminal cost at " + label + ": " + e.what());
  }
}

double lyapunov_slack(const Mat & A_cl, const Mat & P, const Mat & Q, const Mat & R, const Mat & K)
{
  const Mat M = A_cl.transpose() * P * A_cl - P + Q + K.transpose() * R * K;
  return lambda_max_sym(M);
}

TerminalIngredients synthesize_terminal(
  const VelocityModel & model, const Vec & x_r, const Vec & u_r, double y_r, const Mat & Q, const Mat & R,
  const Polytope & Z, const Polytope & dU, const InvariantSetOptions & opts)
{
  const auto dims = model.dims();
  require_dims(x_r.size() == dims.n && u_r.size() == dims.m, "synthesize_terminal: reference point has wrong shape");
  require_dims(Z.dim() == dims.nz() && dU.dim() == dims.m, "synthesize_terminal: constraint sets have wrong dimension");

  TerminalIngredients ti;
  ti.y_r = y_r;
  ti.x_r = x_r;
  ti.u_r = u_r;
  ti.r = Vec::Zero(dims.nz());
  ti.r(0) = y_r;
  const VelocityMatrices mats = model.matrices(x_r, u_r);
  ti.A_ref = mats.A;
  ti.B_ref = mats.B;

  std::ostringstream label;
  label << "y_r = " << y_r;
  const CostGain cg = compute_terminal_cost_gain(ti.A_ref, ti.B_ref, Q, R, label.str());
  ti.P = cg.P;
  ti.K = cg.K;
  ti.A_cl = ti.A_ref + ti.B_ref * ti.K;
  ti.Z_shift = Z.translated(ti.r);
  ti.dU = dU;

  try {
    auto inv = max_invariant_set(ti.A_cl, ti.K, ti.Z_shift, dU, opts);
    ti.Z_T = std::move(inv.set);
    ti.invariant_iterations = inv.iterations;
  } catch (const InvariantSetError & e) {
    throw InvariantSetError("terminal set at " + label.str() + ": " + e.what(), e.last_iterate());
  }
  return ti;
}

std::string CertificateReport::summary() const
{
  std::ostringstream os;
  os << "a=" << slack_a << " b=" << slack_b << " c=" << slack_c << " d=" << slack_d << " points=" << points_checked;
  for (const auto & v : violations) {
    os << "; condition (" << v.condition << ") violated by " << v.slack;
    if (v.witness.size() > 0) { os << " at [" << v.witness.transpose() << "]"; }
  }
  return os.str();
}

CertificateReport check_terminal_conditions(
  const TerminalIngredients & ti, const Mat & Q, const Mat & R, std::size_t sample_count, double tol,
  std::uint64_t seed)
{
  std::vector<Vec> points = ti.Z_T.vertices();

  // Boundary samples along random rays from the Chebyshev center.
  const auto [center, radius] = ti.Z_T.chebyshev_ball();
  if (radius > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < sample_count; ++s) {
      Vec dir(ti.Z_T.dim());
      for (Eigen::Index i = 0; i < dir.size(); ++i) { dir(i) = normal(rng); }
      const Vec ad = ti.Z_T.A() * dir;
      const Vec gap = ti.Z_T.b() - ti.Z_T.A() * center;
      double t = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < ad.size(); ++i) {
        if (ad(i) > 0.0) { t = std::min(t, gap(i) / ad(i)); }
      }
      if (std::isfinite(t)) { points.push_back(center + t * dir); }
    }
  }

  CertificateReport rep;
  rep.points_checked = points.size();
  rep.slack_a = rep.slack_b = rep.slack_c = -std::numeric_limits<double>::infinity();
  Vec wa, wb, wc;
  for (const auto & v : points) {
    const double sa = ti.Z_T.max_violation(ti.A_cl * v);
    const double sb = ti.dU.rows() ? ti.dU.max_violation(ti.K * v) : -std::numeric_limits<double>::infinity();
    const double sc = ti.Z_shift.rows() ? ti.Z_shift.max_violation(v) : -std::numeric_limits<double>::infinity();
    if (sa > rep.slack_a) { rep.slack_a = sa; wa = v; }
    if (sb > rep.slack_b) { rep.slack_b = sb; wb = v; }
    if (sc > rep.slack_c) { rep.slack_c = sc; wc = v; }
  }
  rep.slack_d = lyapunov_slack(ti.A_cl, ti.P, Q, R, ti.K);

  if (rep.slack_a > tol) { rep.violations.push_back({'a', rep.slack_a, wa}); }
  if (rep.slack_b > tol) { rep.violations.push_back({'b', rep.slack_b, wb}); }
  if (rep.slack_c > tol) { rep.violations.push_back({'c', rep.slack_c, wc}); }
  if (rep.slack_d > tol) { rep.violations.push_back({'d', rep.slack_d, Vec()}); }
  return rep;
}

double scheduled_lyapunov_slack(
  const VelocityModel & model, const std::vector<Vec> & rho, const TerminalIngredients & ti, const Mat & Q,
  const Mat & R)
{
  const auto n = model.dims().n;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto & p : rho) {
    const VelocityMatrices mats = model.matrices(p.head(n), p.tail(p.size() - n));
    worst = std::max(worst, lyapunov_slack(mats.A + mats.B * ti.K, ti.P, Q, R, ti.K));
  }
  return worst;
}

std::shared_ptr<const TerminalIngredients> TerminalCache::get(double y_r)
{
  {
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(y_r);
    if (it != entries_.end()) { return it->second; }
  }
  auto fresh = std::make_shared<const TerminalIngredients>(factory_(y_r));
  std::unique_lock lock(mutex_);
  return entries_.emplace(y_r, std::move(fresh)).first->second;
}

std::size_t TerminalCache::size() const
{
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace kvdpc
