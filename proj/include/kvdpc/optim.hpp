#pragma once

#include "kvdpc/linalg.hpp"

#include <string>

namespace kvdpc::optim {

// ---------------------------------------------------------------------------
// Minimum-norm least squares

struct LstsqResult
{
  Mat X;               ///< solution of X * M ~= Y
  Eigen::Index rank;   ///< numerical rank of M
  Vec singular_values;
};

/// X = Y * pinv(M) through an SVD; singular values below
/// max(rows, cols) * eps * sigma_max are treated as zero.
LstsqResult min_norm_lstsq(const Mat & M, const Mat & Y);

/// Tikhonov-regularised variant: argmin ||X M - Y||_F^2 + ridge ||X||_F^2.
Mat ridge_lstsq(const Mat & M, const Mat & Y, double ridge);

Mat pseudo_inverse(const Mat & M);

// ---------------------------------------------------------------------------
// Dense convex QP:  min 1/2 v'Hv + f'v  s.t.  A_in v <= b_in,  A_eq v = b_eq

struct QpProblem
{
  Mat H;
  Vec f;
  Mat A_in;
  Vec b_in;
  Mat A_eq;
  Vec b_eq;

  /// Symmetrises H, fills empty constraint blocks with correctly shaped
  /// zero-row matrices and rejects H with an eigenvalue below -1e-8.
  static QpProblem make(Mat H, Vec f, Mat A_in = {}, Vec b_in = {}, Mat A_eq = {}, Vec b_eq = {});

  Eigen::Index num_vars() const { return f.size(); }
};

enum class QpStatus { optimal, infeasible, max_iters };
std::string to_string(QpStatus s);

struct QpOptions
{
  double tol = 1e-9;
  int max_iters = 100;
  /// Re-solve the KKT system on the identified active set after convergence.
  bool polish = true;
};

struct QpSolution
{
  Vec v;
  Vec lambda_in;  ///< multipliers of the inequality rows (>= 0)
  Vec y_eq;       ///< multipliers of the equality rows
  QpStatus status = QpStatus::max_iters;
  /// Max of the scaled primal, dual and complementarity residuals.
  double kkt_residual = 0.0;
  int iterations = 0;
  bool polished = false;
};

/// Primal-dual interior point with Mehrotra predictor-corrector steps.
QpSolution solve_qp(const QpProblem & p, const QpOptions & opts = {});

/// Unscaled KKT residual of (v, lambda, y) for `p`; used by tests and by the
/// polishing acceptance check.
double kkt_residual(const QpProblem & p, const Vec & v, const Vec & lambda_in, const Vec & y_eq);

// ---------------------------------------------------------------------------
// LP:  min c'v  s.t.  A_in v <= b_in,  A_eq v = b_eq,  v free

enum class LpStatus { optimal, infeasible, unbounded };
std::string to_string(LpStatus s);

struct LpSolution
{
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  Vec v;
};

LpSolution solve_lp(const Vec & c, const Mat & A_in, const Vec & b_in, const Mat & A_eq = {}, const Vec & b_eq = {});

/// Standard form min c'x s.t. Ax = b, x >= 0 (two-phase simplex, Bland's rule).
/// Exposed for testing; `y` holds the simplex multipliers of the rows.
struct StandardLpResult
{
  LpStatus status = LpStatus::infeasible;
  Vec x;
  Vec y;
  double value = 0.0;
};
StandardLpResult simplex_standard(const Mat & A, const Vec & b, const Vec & c);

// ---------------------------------------------------------------------------
// Discrete algebraic Riccati equation
//   P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q,   K = -(R + B'PB)^{-1} B'PA

struct DareSolution
{
  Mat P;
  Mat K;
  int iterations = 0;
  double residual = 0.0;  ///< ||Riccati residual||_F / (1 + ||P||_F)
  bool used_fallback = false;
};

DareSolution solve_dare(const Mat & A, const Mat & B, const Mat & Q, const Mat & R);

/// Relative Frobenius residual of the Riccati equation at P.
double dare_residual(const Mat & A, const Mat & B, const Mat & Q, const Mat & R, const Mat & P);

}  // namespace kvdpc::optim
