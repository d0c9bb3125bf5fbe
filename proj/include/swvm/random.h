#ifndef SWVM_RANDOM_H_
#define SWVM_RANDOM_H_

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace swvm {

// std::uniform_int_distribution and std::shuffle are implementation-defined;
// these keep seeded runs identical across standard libraries.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_below(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace swvm

#endif  // SWVM_RANDOM_H_
