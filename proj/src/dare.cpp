#include "kvdpc/error.hpp"
#include "kvdpc/optim.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace kvdpc::optim {
namespace {

Mat gain(const Mat & A, const Mat & B, const Mat & R, const Mat & P)
{
  const Mat s = R + B.transpose() * P * B;
  return -s.ldlt().solve(B.transpose() * P * A);
}

Mat riccati_map(const Mat & A, const Mat & B, const Mat & Q, const Mat & R, const Mat & P)
{
  const Mat s = R + B.transpose() * P * B;
  const Mat bpa = B.transpose() * P * A;
  Mat next = Q + A.transpose() * P * A - bpa.transpose() * s.ldlt().solve(bpa);
  return 0.5 * (next + next.transpose());
}

// Solves P = Acl' P Acl + W by vectorisation (dimension is small here).
Mat solve_stein(const Mat & Acl, const Mat & W)
{
  const Eigen::Index n = Acl.rows();
  const Mat I = Mat::Identity(n * n, n * n);
  const Mat lhs = I - Eigen::kroneckerProduct(Acl.transpose(), Acl.transpose()).eval();
  const Vec rhs = Eigen::Map<const Vec>(W.data(), n * n);
  const Vec sol = lhs.partialPivLu().solve(rhs);
  Mat P = Eigen::Map<const Mat>(sol.data(), n, n);
  return 0.5 * (P + P.transpose());
}

}  // namespace

double dare_residual(const Mat & A, const Mat & B, const Mat & Q, const Mat & R, const Mat & P)
{
  return (riccati_map(A, B, Q, R, P) - P).norm() / (1.0 + P.norm());
}

DareSolution solve_dare(const Mat & A, const Mat & B, const Mat & Q, const Mat & R)
{
  const Eigen::Index n = A.rows();
  require_dims(A.cols() == n && B.rows() == n && Q.rows() == n && Q.cols() == n, "solve_dare: inconsistent dimensions");
  require_dims(R.rows() == B.cols() && R.cols() == B.cols(), "solve_dare: R must be m x m");

  DareSolution out;
  const Mat I = Mat::Identity(n, n);

  // Structure-preserving doubling.
  Mat Ak = A;
  Mat Gk = B * R.ldlt().solve(B.transpose());
  Mat Hk = Q;
  bool converged = false;
  for (int it = 1; it <= 200; ++it) {
    const Eigen::PartialPivLU<Mat> w(I + Gk * Hk);
    const Mat wa = w.solve(Ak);
    const Mat wg = w.solve(Gk);
    const Mat h_next = Hk + Ak.transpose() * Hk * wa;
    const Mat g_next = Gk + Ak * wg * Ak.transpose();
    Ak = Ak * wa;
    const double change = (h_next - Hk).norm();
    Hk = 0.5 * (h_next + h_next.transpose());
    Gk = 0.5 * (g_next + g_next.transpose());
    out.iterations = it;
    if (!Hk.allFinite()) { break; }
    if (change <= 1e-15 * (1.0 + Hk.norm())) {
      converged = true;
      break;
    }
  }

  Mat P = Hk;
  if (!converged || !P.allFinite()) {
    out.used_fallback = true;
    P = Q;
    converged = false;
    for (int it = 0; it < 100000; ++it) {
      const Mat next = riccati_map(A, B, Q, R, P);
      const double change = (next - P).norm();
      P = next;
      if (change <= 1e-14 * (1.0 + P.norm())) {
        converged = true;
        break;
      }
    }
    if (!converged) { throw SolverError("solve_dare: no convergence (is (A, B) stabilizable?)"); }
  }

  // Newton (Hewer) refinement while it improves the residual.
  if (n <= 12) {
    double res = dare_residual(A, B, Q, R, P);
    for (int it = 0; it < 3; ++it) {
      const Mat K = gain(A, B, R, P);
      const Mat Acl = A + B * K;
      if (spectral_radius(Acl) >= 1.0) { break; }
      const Mat candidate = solve_stein(Acl, Q + K.transpose() * R * K);
      const double cres = dare_residual(A, B, Q, R, candidate);
      if (!(cres < res)) { break; }
      P = candidate;
      res = cres;
    }
  }

  out.P = P;
  out.K = gain(A, B, R, P);
  out.residual = dare_residual(A, B, Q, R, P);
  if (spectral_radius(A + B * out.K) >= 1.0) {
    throw SolverError("solve_dare: closed loop is not stable (is (A, B) stabilizable?)");
  }
  return out;
}

}  // namespace kvdpc::optim
