#include <cstdlib>
#include <string_view>

#include "stegopivot/kernels.hpp"

namespace stegopivot::kernels {

bool cpu_has_avx2() noexcept {
#if defined(STEGOPIVOT_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

Isa detect() noexcept {
  if (const char* forced = std::getenv("STEGOPIVOT_KERNELS")) {
    if (std::string_view(forced) == "scalar") return Isa::Scalar;
  }
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

}  // namespace

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

std::size_t argmax(std::span<const double> values) noexcept {
#ifdef STEGOPIVOT_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::argmax(values);
#endif
  return scalar::argmax(values);
}

std::size_t masked_argmax(std::span<const double> values, std::span<const std::int32_t> labels,
                          std::int32_t target, std::int32_t alt) noexcept {
#ifdef STEGOPIVOT_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::masked_argmax(values, labels, target, alt);
#endif
  return scalar::masked_argmax(values, labels, target, alt);
}

double sum(std::span<const double> values) noexcept {
#ifdef STEGOPIVOT_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::Avx2) return avx2::sum(values);
#endif
  return scalar::sum(values);
}

}  // namespace stegopivot::kernels
