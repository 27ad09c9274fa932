#include "stegopivot/kernels.hpp"

namespace stegopivot::kernels::scalar {

std::size_t argmax(std::span<const double> values) noexcept {
  if (values.empty()) return npos;
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

std::size_t masked_argmax(std::span<const double> values, std::span<const std::int32_t> labels,
                          std::int32_t target, std::int32_t alt) noexcept {
  std::size_t best = npos;
  const std::size_t n = values.size() < labels.size() ? values.size() : labels.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (labels[j] != target && labels[j] != alt) continue;
    if (best == npos || values[j] > values[best]) best = j;
  }
  return best;
}

double sum(std::span<const double> values) noexcept {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace stegopivot::kernels::scalar
