#include "con/simd.hpp"

#include <atomic>
#include <stdexcept>

namespace con::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CON_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect_isa()};
  return isa;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("simd: span size mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  return isa == Isa::kScalar || (isa == Isa::kAvx2 && cpu_has_avx2());
}

Isa detect_isa() { return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar; }

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("simd: ISA not available on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return active_isa() == Isa::kAvx2 ? avx2::dot(a.data(), b.data(), a.size())
                                    : scalar::dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size());
  if (active_isa() == Isa::kAvx2) {
    avx2::axpy(alpha, x.data(), y.data(), x.size());
  } else {
    scalar::axpy(alpha, x.data(), y.data(), x.size());
  }
}

void max_sum_fold(std::span<double> primary, std::span<double> secondary,
                  std::span<const double> src_primary,
                  std::span<const double> src_secondary) {
  check_sizes(primary.size(), secondary.size());
  check_sizes(primary.size(), src_primary.size());
  check_sizes(primary.size(), src_secondary.size());
  if (active_isa() == Isa::kAvx2) {
    avx2::max_sum_fold(primary.data(), secondary.data(), src_primary.data(),
                       src_secondary.data(), primary.size());
  } else {
    scalar::max_sum_fold(primary.data(), secondary.data(), src_primary.data(),
                         src_secondary.data(), primary.size());
  }
}

void scale(double alpha, std::span<double> x) {
  if (active_isa() == Isa::kAvx2) {
    avx2::scale(alpha, x.data(), x.size());
  } else {
    scalar::scale(alpha, x.data(), x.size());
  }
}

}  // namespace con::simd
