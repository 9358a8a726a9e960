#ifndef SPECTUNE_RNG_HPP_
#define SPECTUNE_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace spectune {

// SplitMix64 finalizer. Everything random in the project is derived from this
// so that tables, projections and samples are bit-identical across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based draw: a pure function of (key, stream, counter).
constexpr std::uint64_t counter_bits(std::uint64_t key, std::uint64_t stream,
                                     std::uint64_t counter) {
  return splitmix64(splitmix64(splitmix64(key) ^ stream) + counter);
}

// Uniform in [0, 1) with 53 random bits.
constexpr double unit_closed_open(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1); never returns an endpoint. 52 bits so that the top
// value 1 - 2^-53 is representable.
constexpr double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

// Sequential stream over counter_bits. Copyable; copies replay the same
// sequence, which is what the determinism tests rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return counter_bits(key_, stream_, counter_++); }
  double uniform() { return unit_closed_open(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift; bias is below 2^-32 for the
  // small n used here.
  std::size_t below(std::size_t n) {
    const auto hi = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(hi >> 64);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

// Source of random decisions for the stochastic verifier. Production code
// samples from an Rng; the exactness tests substitute an enumerating source
// that walks every outcome with its probability.
class ChoiceSource {
 public:
  virtual ~ChoiceSource() = default;
  virtual bool bernoulli(double p) = 0;
  // probs need not be normalized; must have positive sum.
  virtual std::size_t categorical(std::span<const double> probs) = 0;
};

class RngChoiceSource final : public ChoiceSource {
 public:
  explicit RngChoiceSource(Rng rng) : rng_(rng) {}

  bool bernoulli(double p) override;
  std::size_t categorical(std::span<const double> probs) override;

 private:
  Rng rng_;
};

// FNV-1a, used for config digests and seed digests in logs.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text,
                      std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace spectune

#endif  // SPECTUNE_RNG_HPP_
