// Random generators for property tests.

#ifndef MUSICTREE_TESTS_GENERATORS_HPP
#define MUSICTREE_TESTS_GENERATORS_HPP

#include <random>
#include <vector>

#include "musictree/trees.hpp"

namespace musictree::testing {

// Random projective single-sided dependency tree over n elements.
// Single-sided projective trees decompose recursively: the head of every
// governed interval sits at one of its ends and its dependents' yields
// partition the rest of the interval.
inline void random_single_sided_interval(int lo, int hi, std::mt19937_64& rng,
                                         std::vector<int>& heads, int parent) {
  const int len = hi - lo;
  if (len == 0) return;
  const bool head_right = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  const int h = head_right ? hi - 1 : lo;
  heads[h] = parent;
  int rest_lo = head_right ? lo : lo + 1;
  int rest_hi = head_right ? hi - 1 : hi;
  // Partition [rest_lo, rest_hi) into consecutive child intervals.
  int cur = rest_lo;
  while (cur < rest_hi) {
    const int max_len = rest_hi - cur;
    const int seg = std::uniform_int_distribution<int>(1, max_len)(rng);
    random_single_sided_interval(cur, cur + seg, rng, heads, h);
    cur += seg;
  }
}

inline std::vector<int> random_single_sided_heads(int n, std::mt19937_64& rng) {
  std::vector<int> heads(n, kRoot);
  random_single_sided_interval(0, n, rng, heads, kRoot);
  return heads;
}

// Random binary constituent tree shape with random primary flags.
inline ConstituentTree random_constituent(int lo, int hi, std::mt19937_64& rng) {
  if (hi - lo == 1) return ConstituentTree::leaf(lo);
  const int split = std::uniform_int_distribution<int>(lo + 1, hi - 1)(rng);
  auto left = random_constituent(lo, split, rng);
  auto right = random_constituent(split, hi, rng);
  const auto primary = std::uniform_int_distribution<int>(0, 1)(rng) == 0
                           ? Primary::kLeft
                           : Primary::kRight;
  return ConstituentTree::internal(left, right, primary);
}

inline ConstituentTree random_constituent(int leaves, std::mt19937_64& rng) {
  return random_constituent(0, leaves, rng);
}

}  // namespace musictree::testing

#endif  // MUSICTREE_TESTS_GENERATORS_HPP
