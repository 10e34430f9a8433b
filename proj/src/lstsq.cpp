#include "kvdpc/error.hpp"
#include "kvdpc/optim.hpp"

#include <lapacke.h>

#include <algorithm>
#include <limits>

namespace kvdpc::optim {

LstsqResult min_norm_lstsq(const Mat & M, const Mat & Y)
{
  require_dims(M.cols() == Y.cols(), "min_norm_lstsq: M and Y must have the same number of columns");
  const Eigen::Index rows = M.rows();
  const Eigen::Index cols = M.cols();
  LstsqResult out;
  out.X = Mat::Zero(Y.rows(), rows);
  out.rank = 0;
  if (rows == 0 || cols == 0 || Y.rows() == 0) {
    out.singular_values = Vec::Zero(std::min(rows, cols));
    return out;
  }

  // X M = Y  <=>  M' X' = Y'. LAPACK overwrites the right-hand side with X'.
  Mat a = M.transpose();
  const Eigen::Index ldb = std::max(rows, cols);
  Mat rhs = Mat::Zero(ldb, Y.rows());
  rhs.topRows(cols) = Y.transpose();
  Vec sv(std::min(rows, cols));
  const double rcond = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
  lapack_int rank = 0;
  const lapack_int info = LAPACKE_dgelsd(
    LAPACK_COL_MAJOR, static_cast<lapack_int>(cols), static_cast<lapack_int>(rows),
    static_cast<lapack_int>(Y.rows()), a.data(), static_cast<lapack_int>(cols), rhs.data(),
    static_cast<lapack_int>(ldb), sv.data(), rcond, &rank);
  if (info != 0) { throw SolverError("min_norm_lstsq: SVD did not converge (dgelsd info " + std::to_string(info) + ")"); }
  out.X = rhs.topRows(rows).transpose();
  out.rank = rank;
  out.singular_values = sv;
  return out;
}

Mat ridge_lstsq(const Mat & M, const Mat & Y, double ridge)
{
  require_dims(M.cols() == Y.cols(), "ridge_lstsq: M and Y must have the same number of columns");
  if (ridge < 0.0) { throw ConfigError("ridge_lstsq: ridge weight must be non-negative"); }
  if (ridge == 0.0) { return min_norm_lstsq(M, Y).X; }
  if (M.rows() <= M.cols()) {
    Mat gram = M * M.transpose();
    gram.diagonal().array() += ridge;
    const Mat rhs = M * Y.transpose();
    return Eigen::LLT<Mat>(gram).solve(rhs).transpose();
  }
  Mat gram = M.transpose() * M;
  gram.diagonal().array() += ridge;
  const Mat tmp = Eigen::LLT<Mat>(gram).solve(Y.transpose());
  return (M * tmp).transpose();
}

Mat pseudo_inverse(const Mat & M)
{
  return min_norm_lstsq(M, Mat::Identity(M.cols(), M.cols())).X;
}

}  // namespace kvdpc::optim
