#include "spectune/rng.hpp"

#include <stdexcept>

namespace spectune {

bool RngChoiceSource::bernoulli(double p) { return rng_.uniform() < p; }

std::size_t RngChoiceSource::categorical(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) {
    throw std::invalid_argument("categorical: distribution has no mass");
  }
  const double u = rng_.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // Rounding left u just above the accumulated total.
  return last_positive;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t h) {
  return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(text.data()),
                           text.size()),
                 h);
}

}  // namespace spectune
