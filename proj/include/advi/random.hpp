#ifndef ADVI_RANDOM_HPP
#define ADVI_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace advi {

/**
 * Seedable source of independent random substreams.
 *
 * A stream is a 64-bit key derived from the user seed and a chain of tags.
 * engine(i, j, k) returns a std::mt19937_64 seeded from the key and the
 * three counters, so a draw depends only on (seed, tags, counters) and never
 * on how many draws were made before it. The optimizer uses
 * (iteration, sample, attempt) for gradient draws, so evaluating samples in
 * parallel cannot change results.
 */
class random_stream {
 public:
  explicit random_stream(std::uint64_t seed) : key_(mix(seed)) {}

  random_stream child(std::uint64_t tag) const {
    return random_stream(key_, tag);
  }

  std::mt19937_64 engine(std::uint64_t i = 0, std::uint64_t j = 0,
                         std::uint64_t k = 0) const {
    const std::uint64_t a = mix(key_ ^ mix(i + 0x632be59bd9b4e019ULL));
    const std::uint64_t b = mix(a ^ mix(j + 0x8cb92ba72f3d8dd7ULL));
    const std::uint64_t c = mix(b ^ mix(k + 0x4f1bbcdcbfa53e0bULL));
    std::seed_seq seq{static_cast<std::uint32_t>(c),
                      static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(a),
                      static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
  }

  std::uint64_t key() const noexcept { return key_; }

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  random_stream(std::uint64_t parent, std::uint64_t tag)
      : key_(mix(parent ^ mix(tag ^ 0xd1b54a32d192ed03ULL))) {}

  std::uint64_t key_;
};

inline void standard_normal(std::mt19937_64& engine, std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out) x = normal(engine);
}

inline std::vector<double> standard_normal(std::mt19937_64& engine,
                                           std::size_t n) {
  std::vector<double> out(n);
  standard_normal(engine, out);
  return out;
}

}  // namespace advi

#endif
