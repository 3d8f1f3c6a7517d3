#pragma once

// Scalar type for every stored tensor value. The default build stores 32-bit
// floats; defining ADVCA_REAL_DOUBLE compiles the same sources with 64-bit
// storage (used by the finite-difference gradient checks). Each precision lives
// in its own inline namespace so both builds can be linked into one binary.

#if defined(ADVCA_REAL_DOUBLE)
#define ADVCA_NS_BEGIN inline namespace f64 {
#define ADVCA_NS_END }
#else
#define ADVCA_NS_BEGIN inline namespace f32 {
#define ADVCA_NS_END }
#endif

namespace advca {
ADVCA_NS_BEGIN

#if defined(ADVCA_REAL_DOUBLE)
using real = double;
#else
using real = float;
#endif

ADVCA_NS_END
}  // namespace advca
