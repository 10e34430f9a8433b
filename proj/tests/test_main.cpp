#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "kvdpc/blas_env.hpp"

int main(int argc, char ** argv)
{
  kvdpc::ensure_tuned_blas(argv);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
