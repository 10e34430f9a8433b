#pragma once

#include "kvdpc/error.hpp"
#include "kvdpc/linalg.hpp"

#include <random>

namespace kvdpc::test {

inline Mat random_matrix(std::mt19937_64 & rng, Eigen::Index r, Eigen::Index c, double scale = 1.0)
{
  std::uniform_real_distribution<double> dist(-scale, scale);
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) { m(i, j) = dist(rng); }
  }
  return m;
}

inline Vec random_vector(std::mt19937_64 & rng, Eigen::Index n, double scale = 1.0)
{
  return random_matrix(rng, n, 1, scale);
}

inline double max_abs(const Mat & m)
{
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace kvdpc::test
