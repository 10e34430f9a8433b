// AVX2 kernels: four centers per lane group. Distances and the inverse
// multiquadric use the same operation order as the scalar reference, so those
// outputs are bitwise identical; dot() keeps four partial sums and therefore
// rounds differently from the sequential scalar sum.

#include "kernel_table.hpp"

#include <immintrin.h>

#include <cmath>

namespace kvdpc::simd::detail {
namespace {

void squared_distances_avx2(const double * c, std::size_t count, std::size_t dim, const double * p, double * out)
{
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < dim; ++j) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(c + j * count + i), _mm256_set1_pd(p[j]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = c[j * count + i] - p[j];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

void inverse_multiquadric_avx2(
  const double * c, std::size_t count, std::size_t dim, const double * p, double sigma2, double * out)
{
  squared_distances_avx2(c, count, dim, p, out);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s2 = _mm256_set1_pd(sigma2);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d r = _mm256_add_pd(one, _mm256_div_pd(_mm256_loadu_pd(out + i), s2));
    _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_sqrt_pd(r)));
  }
  for (; i < count; ++i) { out[i] = 1.0 / std::sqrt(1.0 + out[i] / sigma2); }
}

double dot_avx2(const double * a, const double * b, std::size_t n)
{
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) { total = total + a[i] * b[i]; }
  return total;
}

}  // namespace

const KernelTable avx2_table{squared_distances_avx2, inverse_multiquadric_avx2, dot_avx2};

}  // namespace kvdpc::simd::detail
