#pragma once

#include <Eigen/Dense>

#include <vector>

namespace kvdpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Largest eigenvalue of the symmetric part of `m`.
inline double lambda_max_sym(const Mat & m)
{
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double lambda_min_sym(const Mat & m)
{
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double spectral_radius(const Mat & m)
{
  if (m.size() == 0) { return 0.0; }
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Stack a list of equally sized vectors into one column.
inline Vec stack(const std::vector<Vec> & parts)
{
  Eigen::Index total = 0;
  for (const auto & p : parts) { total += p.size(); }
  Vec out(total);
  Eigen::Index at = 0;
  for (const auto & p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace kvdpc
