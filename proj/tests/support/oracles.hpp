// Independent brute-force oracles. These deliberately avoid the library's
// decoding and conversion code paths.

#ifndef MUSICTREE_TESTS_ORACLES_HPP
#define MUSICTREE_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

namespace musictree::testing {

using HeadVisitor = std::function<void(const std::vector<int>&)>;

namespace detail {

// Enumerates every way to cover [lo, hi) with consecutive subtrees whose
// roots attach to `parent`, then calls `done`.
void projective_forest(int lo, int hi, int parent, std::vector<int>& heads,
                       const std::function<void()>& done);

// Enumerates every projective subtree occupying [lo, hi) rooted at c.
inline void projective_subtree(int lo, int hi, int c, std::vector<int>& heads,
                               const std::function<void()>& done) {
  projective_forest(lo, c, c, heads,
                    [&] { projective_forest(c + 1, hi, c, heads, done); });
}

inline void projective_forest(int lo, int hi, int parent, std::vector<int>& heads,
                              const std::function<void()>& done) {
  if (lo == hi) {
    done();
    return;
  }
  for (int split = lo + 1; split <= hi; ++split) {
    for (int c = lo; c < split; ++c) {
      heads[c] = parent;
      projective_subtree(lo, split, c, heads,
                         [&] { projective_forest(split, hi, parent, heads, done); });
    }
  }
}

}  // namespace detail

// Calls `visit` once per projective single-root dependency tree over n
// elements (heads convention: -1 root, otherwise head index).
inline void for_each_projective_tree(int n, const HeadVisitor& visit) {
  std::vector<int> heads(n, -1);
  for (int r = 0; r < n; ++r) {
    heads[r] = -1;
    detail::projective_subtree(0, n, r, heads, [&] { visit(heads); });
  }
}

// Calls `visit` once per single-root spanning arborescence (possibly
// non-projective) over n elements.
inline void for_each_arborescence(int n, const HeadVisitor& visit) {
  std::vector<int> heads(n, -1);
  std::function<void(int, int)> rec = [&](int i, int roots) {
    if (i == n) {
      if (roots != 1) return;
      // Acyclic iff every chain reaches the root.
      for (int s = 0; s < n; ++s) {
        int cur = s, steps = 0;
        while (heads[cur] != -1) {
          cur = heads[cur];
          if (++steps > n) return;
        }
      }
      visit(heads);
      return;
    }
    heads[i] = -1;
    rec(i + 1, roots + 1);
    for (int h = 0; h < n; ++h) {
      if (h == i) continue;
      heads[i] = h;
      rec(i + 1, roots);
    }
    heads[i] = -1;
  };
  rec(0, 0);
}

// Projectivity by yield contiguity: every element's set of descendants
// (including itself) must form a contiguous interval. Assumes a valid
// rest-free head vector.
inline bool projective_by_yields(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  std::vector<std::vector<bool>> in_yield(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    int cur = i;
    in_yield[i][i] = true;
    while (heads[cur] != -1) {
      cur = heads[cur];
      in_yield[cur][i] = true;
    }
  }
  for (int i = 0; i < n; ++i) {
    int lo = -1, hi = -1;
    for (int j = 0; j < n; ++j) {
      if (!in_yield[i][j]) continue;
      if (lo < 0) lo = j;
      hi = j;
    }
    for (int j = lo; j <= hi; ++j)
      if (!in_yield[i][j]) return false;
  }
  return true;
}

// Total score of a head vector under a scores matrix with the dummy-root
// column at index 0. Returns -inf if any selected arc is -inf.
inline double tree_score(const std::vector<int>& heads, const Eigen::MatrixXd& scores) {
  double total = 0.0;
  for (int d = 0; d < static_cast<int>(heads.size()); ++d) {
    const int col = heads[d] == -1 ? 0 : heads[d] + 1;
    const double s = scores(d, col);
    if (s == -std::numeric_limits<double>::infinity())
      return -std::numeric_limits<double>::infinity();
    total += s;
  }
  return total;
}

// Maximum score over all projective single-root trees; -inf if none is
// finite.
inline double best_projective_score(const Eigen::MatrixXd& scores) {
  double best = -std::numeric_limits<double>::infinity();
  for_each_projective_tree(static_cast<int>(scores.rows()), [&](const std::vector<int>& h) {
    best = std::max(best, tree_score(h, scores));
  });
  return best;
}

// Maximum score over all single-root arborescences; -inf if none is finite.
inline double best_arborescence_score(const Eigen::MatrixXd& scores) {
  double best = -std::numeric_limits<double>::infinity();
  for_each_arborescence(static_cast<int>(scores.rows()), [&](const std::vector<int>& h) {
    best = std::max(best, tree_score(h, scores));
  });
  return best;
}

}  // namespace musictree::testing

#endif  // MUSICTREE_TESTS_ORACLES_HPP
