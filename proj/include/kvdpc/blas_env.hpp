#pragma once

namespace kvdpc {

/// OpenBLAS picks its kernels once at load time and falls back to generic SSE3
/// code on CPUs it does not recognise (common under virtualisation). When that
/// happened on an AVX2 machine, re-executes the current program with
/// OPENBLAS_CORETYPE set. Returns normally when nothing needs to change or the
/// re-exec fails. Set KVDPC_NO_BLAS_TUNING to disable.
void ensure_tuned_blas(char ** argv);

}  // namespace kvdpc
