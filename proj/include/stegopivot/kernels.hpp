#pragma once

// Inner loops over probability vectors. Every kernel has a scalar reference
// implementation; wider variants are selected once at runtime and must agree
// with the reference exactly for index-returning kernels.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace stegopivot::kernels {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Label value that no bin ever carries; pass as `alt` to disable the second
/// accepted label in masked_argmax.
inline constexpr std::int32_t kNoLabel = std::numeric_limits<std::int32_t>::min();

namespace scalar {
std::size_t argmax(std::span<const double> values) noexcept;
std::size_t masked_argmax(std::span<const double> values, std::span<const std::int32_t> labels,
                          std::int32_t target, std::int32_t alt) noexcept;
double sum(std::span<const double> values) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define STEGOPIVOT_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::size_t argmax(std::span<const double> values) noexcept;
std::size_t masked_argmax(std::span<const double> values, std::span<const std::int32_t> labels,
                          std::int32_t target, std::int32_t alt) noexcept;
double sum(std::span<const double> values) noexcept;
}  // namespace avx2
#endif

enum class Isa { Scalar, Avx2 };

/// True when the running CPU can execute the AVX2 variants.
bool cpu_has_avx2() noexcept;

/// The variant the dispatching entry points use. Chosen on first call from
/// the CPU, overridable with STEGOPIVOT_KERNELS=scalar.
Isa active_isa() noexcept;
std::string_view isa_name(Isa isa) noexcept;

// Dispatching entry points. Ties resolve to the lowest index; an empty input
// (or no index with an accepted label) yields npos.
std::size_t argmax(std::span<const double> values) noexcept;

/// argmax restricted to indices whose label equals `target` or `alt`.
std::size_t masked_argmax(std::span<const double> values, std::span<const std::int32_t> labels,
                          std::int32_t target, std::int32_t alt = kNoLabel) noexcept;

double sum(std::span<const double> values) noexcept;

}  // namespace stegopivot::kernels
