#include "sepsis/features.hpp"

namespace sepsis {

std::vector<std::uint8_t> shift_labels(std::span<const std::uint8_t> labels, int horizon) {
  if (horizon < 0) throw ValidationError("label horizon must be non-negative");
  const auto onset = onset_of(labels);
  std::vector<std::uint8_t> out(labels.size(), 0);
  if (!onset) return out;
  const std::size_t h = static_cast<std::size_t>(horizon);
  const std::size_t start = *onset > h ? *onset - h : 0;
  for (std::size_t t = start; t < out.size(); ++t) out[t] = 1;
  return out;
}

}  // namespace sepsis
