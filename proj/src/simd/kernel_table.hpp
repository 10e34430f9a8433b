#pragma once

#include <cstddef>

namespace kvdpc::simd::detail {

struct KernelTable
{
  void (*squared_distances)(const double *, std::size_t, std::size_t, const double *, double *);
  void (*inverse_multiquadric)(const double *, std::size_t, std::size_t, const double *, double, double *);
  double (*dot)(const double *, const double *, std::size_t);
};

extern const KernelTable scalar_table;
#if defined(KVDPC_BUILD_AVX2)
extern const KernelTable avx2_table;
#endif

}  // namespace kvdpc::simd::detail
