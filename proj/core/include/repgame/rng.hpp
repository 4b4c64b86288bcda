#pragma once

#include <cstdint>
#include <span>

namespace repgame {

// SplitMix64 stream. Sampling goes through explicit CDF scans on 53-bit
// uniforms, so sequences are bit-identical across platforms and compilers.
// Replication substreams are derived from the root seed by counter mixing,
// which keeps parallel batches independent of scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Substream for replication `stream` of a batch rooted at `root_seed`.
  static Rng substream(std::uint64_t root_seed, std::uint64_t stream) {
    return Rng(mix(root_seed ^ mix(stream + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Draw an index from a finite pmf. Mass is renormalized by its own sum so a
  // slightly off-normalized vector still samples; all-zero mass returns 0.
  int sample(std::span<const double> pmf) {
    double total = 0.0;
    for (double p : pmf) total += p;
    if (!(total > 0.0)) return 0;
    double u = next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pmf.size(); ++i) {
      acc += pmf[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(pmf.size()) - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace repgame
