#pragma once

#include <cstdint>
#include <initializer_list>

namespace surf {

/// Counter-based 64-bit generator (SplitMix64). Pinned here so that seeded
/// runs produce identical byte streams on every platform; the standard
/// library distributions are deliberately not used anywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) by 128-bit multiply-shift. The modulo bias of
  /// this scheme is below 2^-64 per draw, which is irrelevant at simulation
  /// scale and keeps the draw count fixed at one word.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Folds a sequence of words into a master seed. Used to derive independent,
/// reproducible-in-isolation per-run seeds for sweep cells: the words are the
/// cell parameters themselves (bit patterns), not grid indices, so a one-cell
/// sweep regenerates the same datasets as the full grid.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = SplitMix64::mix(master);
  for (std::uint64_t w : words) {
    h = SplitMix64::mix(h ^ SplitMix64::mix(w));
  }
  return h;
}

inline std::uint64_t double_bits(double x) {
  std::uint64_t b;
  static_assert(sizeof(b) == sizeof(x));
  __builtin_memcpy(&b, &x, sizeof(b));
  return b;
}

}  // namespace surf
