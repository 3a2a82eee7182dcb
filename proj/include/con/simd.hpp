#pragma once

// Data-parallel kernels used by the perception and map-merge hot loops.
//
// Each kernel has a scalar reference and an AVX2 variant. The active variant
// is picked once at startup from CPUID and can be forced for testing. The
// scalar reference mirrors the AVX2 lane order (four interleaved partial sums
// for reductions, no fused multiply-add), so both paths produce bit-identical
// results and episode outputs do not depend on the host CPU.

#include <cstddef>
#include <span>
#include <string_view>

namespace con::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// Best ISA supported by both this build and the running CPU.
Isa detect_isa();

/// ISA currently used by the dispatching entry points below.
Isa active_isa();

/// Forces the dispatch target. Throws std::invalid_argument if `isa` is not
/// available on this machine.
void set_active_isa(Isa isa);

bool isa_available(Isa isa);

// Dispatching entry points. Spans must have equal sizes (checked).
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// primary[i] = max(primary[i], src_primary[i]); secondary[i] += src_secondary[i].
void max_sum_fold(std::span<double> primary, std::span<double> secondary,
                  std::span<const double> src_primary,
                  std::span<const double> src_secondary);
void scale(double alpha, std::span<double> x);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void max_sum_fold(double* p, double* s, const double* sp, const double* ss,
                  std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void max_sum_fold(double* p, double* s, const double* sp, const double* ss,
                  std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace avx2

}  // namespace con::simd
