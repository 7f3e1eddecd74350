#pragma once

namespace qinpaint {

/// Sets the worker count used by the GEMM backend and the layer loops.
/// Values < 1 are treated as 1.
void set_num_threads(int n);
int num_threads();

/// Reads QINPAINT_THREADS; returns `fallback` when unset or invalid.
int threads_from_environment(int fallback);

}  // namespace qinpaint
