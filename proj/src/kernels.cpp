#include "kvdpc/kernels.hpp"

#include "kvdpc/error.hpp"
#include "kvdpc/simd.hpp"

#include <cmath>

namespace kvdpc {

std::string to_string(KernelFamily family)
{
  return family == KernelFamily::gaussian ? "gaussian" : "inverse_multiquadric";
}

KernelFamily kernel_family_from_string(const std::string & name)
{
  if (name == "inverse_multiquadric" || name == "imq") { return KernelFamily::inverse_multiquadric; }
  if (name == "gaussian") { return KernelFamily::gaussian; }
  throw ConfigError("unknown kernel family '" + name + "'");
}

KernelSpec::KernelSpec(KernelFamily f, double s2) : family(f), sigma2(s2)
{
  if (!(s2 > 0.0)) { throw ConfigError("kernel: sigma2 must be positive"); }
}

CenterSet::CenterSet(Mat points) : points_(std::move(points))
{
  if (points_.rows() < 1 || points_.cols() < 1) { throw ConfigError("center set: need at least one point"); }
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points_.rows(); ++j) {
      if (points_.row(i) == points_.row(j)) { throw ConfigError("center set: points must be pairwise distinct"); }
    }
  }
}

double kernel_eval(const KernelSpec & spec, const Eigen::Ref<const Vec> & a, const Eigen::Ref<const Vec> & b)
{
  require_dims(a.size() == b.size(), "kernel_eval: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double diff = b(j) - a(j);
    acc = acc + diff * diff;
  }
  if (spec.family == KernelFamily::gaussian) { return std::exp(-acc / (2.0 * spec.sigma2)); }
  return 1.0 / std::sqrt(1.0 + acc / spec.sigma2);
}

void kernel_vector_into(
  const KernelSpec & spec, const CenterSet & centers, const Eigen::Ref<const Vec> & p, Eigen::Ref<Vec> out)
{
  require_dims(p.size() == centers.dim(), "kernel_vector: query dimension does not match centers");
  require_dims(out.size() == centers.size(), "kernel_vector: output size does not match center count");
  const Vec q = p;
  const auto count = static_cast<std::size_t>(centers.size());
  const auto dim = static_cast<std::size_t>(centers.dim());
  if (spec.family == KernelFamily::gaussian) {
    simd::squared_distances(centers.points().data(), count, dim, q.data(), out.data());
    for (Eigen::Index i = 0; i < out.size(); ++i) { out(i) = std::exp(-out(i) / (2.0 * spec.sigma2)); }
    return;
  }
  simd::inverse_multiquadric(centers.points().data(), count, dim, q.data(), spec.sigma2, out.data());
}

Vec kernel_vector(const KernelSpec & spec, const CenterSet & centers, const Eigen::Ref<const Vec> & p)
{
  Vec out(centers.size());
  kernel_vector_into(spec, centers, p, out);
  return out;
}

}  // namespace kvdpc
