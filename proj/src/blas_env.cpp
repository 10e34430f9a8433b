#include "kvdpc/blas_env.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <cstdlib>
#include <string>

namespace kvdpc {

void ensure_tuned_blas(char ** argv)
{
#if defined(__x86_64__) && defined(__linux__)
  if (std::getenv("OPENBLAS_CORETYPE") || std::getenv("KVDPC_NO_BLAS_TUNING")) { return; }
  using CoreName = char * (*)();
  auto * fn = reinterpret_cast<CoreName>(dlsym(RTLD_DEFAULT, "openblas_get_corename"));
  if (!fn) { return; }
  const std::string core = fn();
  if (core != "Prescott" && core != "Core2" && core != "Unknown") { return; }
  __builtin_cpu_init();
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) { return; }
  const char * target = __builtin_cpu_supports("avx512f") ? "SkylakeX" : "Haswell";
  if (setenv("OPENBLAS_CORETYPE", target, 1) != 0) { return; }
  execv("/proc/self/exe", argv);
  unsetenv("OPENBLAS_CORETYPE");  // exec failed; carry on with the generic kernels
#else
  (void)argv;
#endif
}

}  // namespace kvdpc
