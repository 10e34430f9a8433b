#pragma once

#include <cstddef>
#include <string_view>

namespace kvdpc::simd {

enum class Level { scalar, avx2 };

std::string_view to_string(Level level);

/// Best level supported by both this build and the running CPU.
Level detected_level();

/// Level used by kernel evaluations. Defaults to detected_level(); the
/// environment variable KVDPC_SIMD=scalar|avx2 overrides the default.
Level active_level();

/// Forces a level. Requesting an unavailable level falls back to scalar.
void set_active_level(Level level);

/// Sets a level for the lifetime of the guard (tests, benchmarks).
class ScopedLevel
{
public:
  explicit ScopedLevel(Level level) : previous_(active_level()) { set_active_level(level); }
  ~ScopedLevel() { set_active_level(previous_); }
  ScopedLevel(const ScopedLevel &) = delete;
  ScopedLevel & operator=(const ScopedLevel &) = delete;

private:
  Level previous_;
};

// Raw kernels. `centers` is column-major count x dim (coordinate j of all
// centers is contiguous at centers + j * count). Outputs have `count` entries.

/// out[i] = ||c_i - p||^2
void squared_distances(const double * centers, std::size_t count, std::size_t dim, const double * p, double * out);

/// out[i] = 1 / sqrt(1 + ||c_i - p||^2 / sigma2)
void inverse_multiquadric(
  const double * centers, std::size_t count, std::size_t dim, const double * p, double sigma2, double * out);

/// sum_i a[i] * b[i]
double dot(const double * a, const double * b, std::size_t n);

}  // namespace kvdpc::simd
