#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace semiheal {

  // Mixes a master seed with a stream index (splitmix64 finalizer), so that
  // every worker (table, tree, corruption) gets an independent, reproducible
  // generator regardless of scheduling.
  constexpr std::uint64_t derive_seed(std::uint64_t master,
                                      std::uint64_t stream) noexcept {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z               = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z               = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // mt19937_64 has a fully specified output sequence; the bounded draws
  // below are written out so results do not depend on the standard
  // library's distribution implementations.
  class Rng {
   public:
    explicit Rng(std::uint64_t seed) : _engine(seed) {}

    std::uint64_t next() {
      return _engine();
    }

    // Uniform in [0, bound). bound must be > 0.
    std::size_t below(std::size_t bound) {
      auto const b     = static_cast<std::uint64_t>(bound);
      auto const limit = UINT64_MAX - (UINT64_MAX % b);
      std::uint64_t x;
      do {
        x = _engine();
      } while (x >= limit);
      return static_cast<std::size_t>(x % b);
    }

    // Uniform in [0, 1) with 53 random bits.
    double unit() {
      return static_cast<double>(_engine() >> 11) * 0x1.0p-53;
    }

    template <typename T>
    void shuffle(std::span<T> items) {
      for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[below(i)]);
      }
    }

   private:
    std::mt19937_64 _engine;
  };

}  // namespace semiheal
