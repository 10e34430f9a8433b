#pragma once

#include "kvdpc/optim.hpp"

#include <limits>
#include <vector>

namespace kvdpc::test {

/// Brute-force oracle: solve the equality-constrained QP for every subset of
/// active inequality rows and keep the cheapest primal-feasible candidate.
/// Exact for strictly convex problems, exponential in the row count.
inline double enumerate_active_sets(const optim::QpProblem & p, Vec & best_v)
{
  const Eigen::Index n = p.num_vars();
  const Eigen::Index m = p.A_in.rows();
  double best = std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask & (1L << i)) { act.push_back(i); }
    }
    const auto k = static_cast<Eigen::Index>(act.size());
    Mat KKT = Mat::Zero(n + k, n + k);
    Vec rhs(n + k);
    KKT.topLeftCorner(n, n) = p.H;
    rhs.head(n) = -p.f;
    for (Eigen::Index j = 0; j < k; ++j) {
      KKT.block(n + j, 0, 1, n) = p.A_in.row(act[j]);
      KKT.block(0, n + j, n, 1) = p.A_in.row(act[j]).transpose();
      rhs(n + j) = p.b_in(act[j]);
    }
    Eigen::FullPivLU<Mat> lu(KKT);
    if (!lu.isInvertible()) { continue; }
    const Vec sol = lu.solve(rhs);
    const Vec v = sol.head(n);
    if ((p.A_in * v - p.b_in).maxCoeff() > 1e-9) { continue; }
    const double val = 0.5 * v.dot(p.H * v) + p.f.dot(v);
    if (val < best) {
      best = val;
      best_v = v;
    }
  }
  return best;
}

}  // namespace kvdpc::test
