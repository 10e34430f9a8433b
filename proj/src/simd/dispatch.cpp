#include "kvdpc/simd.hpp"

#include "kernel_table.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace kvdpc::simd {
namespace {

bool cpu_has_avx2()
{
#if defined(KVDPC_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Level initial_level()
{
  Level level = detected_level();
  if (const char * env = std::getenv("KVDPC_SIMD")) {
    const std::string v(env);
    if (v == "scalar") {
      level = Level::scalar;
    } else if (v == "avx2" && cpu_has_avx2()) {
      level = Level::avx2;
    }
  }
  return level;
}

std::atomic<Level> & level_slot()
{
  static std::atomic<Level> slot{initial_level()};
  return slot;
}

const detail::KernelTable & table()
{
#if defined(KVDPC_BUILD_AVX2)
  if (level_slot().load(std::memory_order_relaxed) == Level::avx2) { return detail::avx2_table; }
#endif
  return detail::scalar_table;
}

}  // namespace

std::string_view to_string(Level level)
{
  return level == Level::avx2 ? "avx2" : "scalar";
}

Level detected_level()
{
  return cpu_has_avx2() ? Level::avx2 : Level::scalar;
}

Level active_level()
{
  return level_slot().load(std::memory_order_relaxed);
}

void set_active_level(Level level)
{
  if (level == Level::avx2 && !cpu_has_avx2()) { level = Level::scalar; }
  level_slot().store(level, std::memory_order_relaxed);
}

void squared_distances(const double * centers, std::size_t count, std::size_t dim, const double * p, double * out)
{
  table().squared_distances(centers, count, dim, p, out);
}

void inverse_multiquadric(
  const double * centers, std::size_t count, std::size_t dim, const double * p, double sigma2, double * out)
{
  table().inverse_multiquadric(centers, count, dim, p, sigma2, out);
}

double dot(const double * a, const double * b, std::size_t n)
{
  return table().dot(a, b, n);
}

}  // namespace kvdpc::simd
