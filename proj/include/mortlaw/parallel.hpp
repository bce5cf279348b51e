#pragma once

namespace mortlaw {

/// Selects the OpenMP kernel or its serial reference. Both produce
/// bit-identical results; the serial path exists for testing and benchmarking.
enum class Execution { Serial, Parallel };

/// Thread count used by parallel kernels: the OpenMP default, capped by the
/// MORTLAW_THREADS environment variable when it holds a positive integer.
int worker_threads() noexcept;

/// True when the library was built with OpenMP.
bool openmp_enabled() noexcept;

} // namespace mortlaw
