#pragma once

#include "kvdpc/linalg.hpp"

#include <string>

namespace kvdpc {

enum class KernelFamily {
  inverse_multiquadric,  ///< k(a,b) = 1 / sqrt(1 + ||a-b||^2 / sigma2)
  gaussian,              ///< k(a,b) = exp(-||a-b||^2 / (2 sigma2))
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string & name);

struct KernelSpec
{
  KernelFamily family = KernelFamily::inverse_multiquadric;
  double sigma2 = 200.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily f, double s2);
};

/// Kernel centers, stored column-major (count x dim) so each coordinate is
/// contiguous across centers. Points must be pairwise distinct.
class CenterSet
{
public:
  CenterSet() = default;
  explicit CenterSet(Mat points);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  Vec point(Eigen::Index i) const { return points_.row(i).transpose(); }
  const Mat & points() const { return points_; }

private:
  Mat points_;
};

double kernel_eval(const KernelSpec & spec, const Eigen::Ref<const Vec> & a, const Eigen::Ref<const Vec> & b);

/// Kernel sections of all centers evaluated at p, in center storage order.
Vec kernel_vector(const KernelSpec & spec, const CenterSet & centers, const Eigen::Ref<const Vec> & p);
void kernel_vector_into(
  const KernelSpec & spec, const CenterSet & centers, const Eigen::Ref<const Vec> & p, Eigen::Ref<Vec> out);

}  // namespace kvdpc
