// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scalar width is a build-time choice. The library is compiled once per
// width; each build lives in its own inline namespace so a float32 and a
// float64 build can be linked into the same executable.
#if defined(SENTEMB_DOUBLE)
#define SENTEMB_ABI_NAMESPACE f64
#else
#define SENTEMB_ABI_NAMESPACE f32
#endif

#define SENTEMB_NAMESPACE_BEGIN \
  namespace sentemb {           \
  inline namespace SENTEMB_ABI_NAMESPACE {
#define SENTEMB_NAMESPACE_END \
  }                           \
  }

SENTEMB_NAMESPACE_BEGIN

#if defined(SENTEMB_DOUBLE)
using Real = double;
#else
using Real = float;
#endif

inline constexpr bool kDoublePrecision = sizeof(Real) == sizeof(double);

SENTEMB_NAMESPACE_END
