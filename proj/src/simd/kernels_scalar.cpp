// Reference kernels. Built with -ffp-contract=off so the per-element results
// match the AVX2 variant bit for bit (same operation order, no fused ops).

#include "kernel_table.hpp"

#include <cmath>

namespace kvdpc::simd::detail {
namespace {

void squared_distances_scalar(const double * c, std::size_t count, std::size_t dim, const double * p, double * out)
{
  for (std::size_t i = 0; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = c[j * count + i] - p[j];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

void inverse_multiquadric_scalar(
  const double * c, std::size_t count, std::size_t dim, const double * p, double sigma2, double * out)
{
  squared_distances_scalar(c, count, dim, p, out);
  for (std::size_t i = 0; i < count; ++i) { out[i] = 1.0 / std::sqrt(1.0 + out[i] / sigma2); }
}

double dot_scalar(const double * a, const double * b, std::size_t n)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) { acc = acc + a[i] * b[i]; }
  return acc;
}

}  // namespace

const KernelTable scalar_table{squared_distances_scalar, inverse_multiquadric_scalar, dot_scalar};

}  // namespace kvdpc::simd::detail
