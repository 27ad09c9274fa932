// Compiled with -mavx2; only reached after a runtime CPU check.
#include "stegopivot/kernels.hpp"

#include <immintrin.h>

#include <cstdint>

namespace stegopivot::kernels::avx2 {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Lane-wise best (value, index) to a single index. Equal values resolve to
// the lower index, matching the scalar scan order.
std::size_t reduce_lanes(__m256d best, __m256i index) {
  alignas(32) double vals[4];
  alignas(32) std::int64_t idx[4];
  _mm256_store_pd(vals, best);
  _mm256_store_si256(reinterpret_cast<__m256i*>(idx), index);
  double best_val = kNegInf;
  std::size_t best_idx = npos;
  for (int lane = 0; lane < 4; ++lane) {
    if (idx[lane] < 0) continue;
    const auto i = static_cast<std::size_t>(idx[lane]);
    if (best_idx == npos || vals[lane] > best_val || (vals[lane] == best_val && i < best_idx)) {
      best_val = vals[lane];
      best_idx = i;
    }
  }
  return best_idx;
}

}  // namespace

std::size_t argmax(std::span<const double> values) noexcept {
  const std::size_t n = values.size();
  if (n < 8) return scalar::argmax(values);
  const double* data = values.data();

  __m256d best = _mm256_loadu_pd(data);
  __m256i index = _mm256_setr_epi64x(0, 1, 2, 3);
  __m256i current = index;
  const __m256i step = _mm256_set1_epi64x(4);
  std::size_t j = 4;
  for (; j + 4 <= n; j += 4) {
    current = _mm256_add_epi64(current, step);
    const __m256d v = _mm256_loadu_pd(data + j);
    const __m256d gt = _mm256_cmp_pd(v, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, v, gt);
    index = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(index), _mm256_castsi256_pd(current), gt));
  }
  std::size_t result = reduce_lanes(best, index);
  for (; j < n; ++j) {
    if (data[j] > data[result]) result = j;
  }
  return result;
}

std::size_t masked_argmax(std::span<const double> values, std::span<const std::int32_t> labels,
                          std::int32_t target, std::int32_t alt) noexcept {
  const std::size_t n = values.size() < labels.size() ? values.size() : labels.size();
  const double* data = values.data();
  const std::int32_t* lab = labels.data();

  __m256d best = _mm256_set1_pd(kNegInf);
  __m256i index = _mm256_set1_epi64x(-1);
  __m256i current = _mm256_setr_epi64x(0, 1, 2, 3);
  const __m256i step = _mm256_set1_epi64x(4);
  const __m128i want = _mm_set1_epi32(target);
  const __m128i want_alt = _mm_set1_epi32(alt);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m128i l = _mm_loadu_si128(reinterpret_cast<const __m128i*>(lab + j));
    const __m128i hit = _mm_or_si128(_mm_cmpeq_epi32(l, want), _mm_cmpeq_epi32(l, want_alt));
    const __m256d mask = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(hit));
    const __m256d v = _mm256_loadu_pd(data + j);
    // A lane that has not yet seen a candidate takes the first one whatever
    // its value, so zero-mass candidates are still reachable.
    const __m256d unset = _mm256_castsi256_pd(_mm256_cmpeq_epi64(index, _mm256_set1_epi64x(-1)));
    const __m256d better = _mm256_or_pd(_mm256_cmp_pd(v, best, _CMP_GT_OQ), unset);
    const __m256d take = _mm256_and_pd(better, mask);
    best = _mm256_blendv_pd(best, v, take);
    index = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(index), _mm256_castsi256_pd(current), take));
    current = _mm256_add_epi64(current, step);
  }
  std::size_t result = reduce_lanes(best, index);
  for (; j < n; ++j) {
    if (lab[j] != target && lab[j] != alt) continue;
    if (result == npos || data[j] > data[result]) result = j;
  }
  return result;
}

double sum(std::span<const double> values) noexcept {
  const std::size_t n = values.size();
  const double* data = values.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(data + j));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; j < n; ++j) total += data[j];
  return total;
}

}  // namespace stegopivot::kernels::avx2
