#include "musictree/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace musictree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// score of arc head -> dep in the lambda x (lambda+1) layout
inline double arc_score(const Eigen::MatrixXd& s, int head, int dep) {
  return s(dep, head + 1);
}
inline double root_score(const Eigen::MatrixXd& s, int dep) { return s(dep, 0); }

}  // namespace

DecodeMode parse_decode_mode(const std::string& name) {
  if (name == "greedy") return DecodeMode::kGreedy;
  if (name == "eisner") return DecodeMode::kEisner;
  if (name == "cle") return DecodeMode::kChuLiuEdmonds;
  throw DecodeError("unknown decoder \"" + name + "\"");
}

std::string to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kGreedy: return "greedy";
    case DecodeMode::kEisner: return "eisner";
    case DecodeMode::kChuLiuEdmonds: return "cle";
  }
  return "?";
}

std::vector<int> greedy_heads(const Eigen::MatrixXd& scores) {
  const int n = static_cast<int>(scores.rows());
  std::vector<int> heads(n, kRoot);
  for (int d = 0; d < n; ++d) {
    int best = -1;
    double best_score = kNegInf;
    for (int c = 0; c < scores.cols(); ++c) {
      if (scores(d, c) > best_score) {
        best_score = scores(d, c);
        best = c;
      }
    }
    if (best < 0)
      throw AllMaskedRowError("row " + std::to_string(d) + " has no finite score");
    heads[d] = best == 0 ? kRoot : best - 1;
  }
  return heads;
}

// ---------------------------------------------------------------------------
// Eisner
// ---------------------------------------------------------------------------

namespace {

// First-order Eisner over elements 0..n-1 with four chart items:
// incomplete/complete spans headed at the left or right end. The root
// choice is made on top of the chart, which enforces a single root.
struct EisnerChart {
  int n;
  // [i][j], i <= j
  std::vector<std::vector<double>> complete_l, complete_r, incomplete_l, incomplete_r;
  std::vector<std::vector<int>> bc_l, bc_r, bi_l, bi_r;  // backpointers (split q)

  explicit EisnerChart(int n_)
      : n(n_),
        complete_l(n_, std::vector<double>(n_, kNegInf)),
        complete_r(n_, std::vector<double>(n_, kNegInf)),
        incomplete_l(n_, std::vector<double>(n_, kNegInf)),
        incomplete_r(n_, std::vector<double>(n_, kNegInf)),
        bc_l(n_, std::vector<int>(n_, -1)),
        bc_r(n_, std::vector<int>(n_, -1)),
        bi_l(n_, std::vector<int>(n_, -1)),
        bi_r(n_, std::vector<int>(n_, -1)) {}
};

void eisner_fill(const Eigen::MatrixXd& scores, EisnerChart& ch) {
  const int n = ch.n;
  for (int i = 0; i < n; ++i) {
    ch.complete_l[i][i] = 0.0;
    ch.complete_r[i][i] = 0.0;
  }
  for (int len = 1; len < n; ++len) {
    for (int i = 0; i + len < n; ++i) {
      const int j = i + len;
      // Incomplete spans: arc between the endpoints, inner material split
      // into a right-complete part from i and a left-complete part to j.
      double best_inner = kNegInf;
      int best_q = -1;
      for (int q = i; q < j; ++q) {
        const double v = ch.complete_r[i][q] + ch.complete_l[q + 1][j];
        if (v > best_inner) {
          best_inner = v;
          best_q = q;
        }
      }
      ch.incomplete_r[i][j] = best_inner + arc_score(scores, i, j);  // arc i -> j
      ch.bi_r[i][j] = best_q;
      ch.incomplete_l[i][j] = best_inner + arc_score(scores, j, i);  // arc j -> i
      ch.bi_l[i][j] = best_q;
      // Complete spans.
      for (int q = i + 1; q <= j; ++q) {
        const double v = ch.incomplete_r[i][q] + ch.complete_r[q][j];
        if (v > ch.complete_r[i][j]) {
          ch.complete_r[i][j] = v;
          ch.bc_r[i][j] = q;
        }
      }
      for (int q = i; q < j; ++q) {
        const double v = ch.complete_l[i][q] + ch.incomplete_l[q][j];
        if (v > ch.complete_l[i][j]) {
          ch.complete_l[i][j] = v;
          ch.bc_l[i][j] = q;
        }
      }
    }
  }
}

void eisner_backtrack_complete_r(const EisnerChart& ch, int i, int j, std::vector<int>& heads);
void eisner_backtrack_complete_l(const EisnerChart& ch, int i, int j, std::vector<int>& heads);

void eisner_backtrack_incomplete_r(const EisnerChart& ch, int i, int j, std::vector<int>& heads) {
  heads[j] = i;
  if (i == j) return;
  const int q = ch.bi_r[i][j];
  eisner_backtrack_complete_r(ch, i, q, heads);
  eisner_backtrack_complete_l(ch, q + 1, j, heads);
}

void eisner_backtrack_incomplete_l(const EisnerChart& ch, int i, int j, std::vector<int>& heads) {
  heads[i] = j;
  if (i == j) return;
  const int q = ch.bi_l[i][j];
  eisner_backtrack_complete_r(ch, i, q, heads);
  eisner_backtrack_complete_l(ch, q + 1, j, heads);
}

void eisner_backtrack_complete_r(const EisnerChart& ch, int i, int j, std::vector<int>& heads) {
  if (i == j) return;
  const int q = ch.bc_r[i][j];
  eisner_backtrack_incomplete_r(ch, i, q, heads);
  eisner_backtrack_complete_r(ch, q, j, heads);
}

void eisner_backtrack_complete_l(const EisnerChart& ch, int i, int j, std::vector<int>& heads) {
  if (i == j) return;
  const int q = ch.bc_l[i][j];
  eisner_backtrack_complete_l(ch, i, q, heads);
  eisner_backtrack_incomplete_l(ch, q, j, heads);
}

}  // namespace

DependencyTree eisner(const Eigen::MatrixXd& scores) {
  const int n = static_cast<int>(scores.rows());
  if (n == 0) throw InfeasibleError("empty score matrix");
  if (scores.cols() != n + 1) throw DecodeError("score matrix must be n x (n+1)");
  EisnerChart ch(n);
  eisner_fill(scores, ch);
  // A tree rooted at r is a left-complete span 0..r joined with a
  // right-complete span r..n-1, plus the dummy-root arc.
  int best_root = -1;
  double best = kNegInf;
  for (int r = 0; r < n; ++r) {
    const double v = root_score(scores, r) + ch.complete_l[0][r] + ch.complete_r[r][n - 1];
    if (v > best) {
      best = v;
      best_root = r;
    }
  }
  if (best == kNegInf)
    throw InfeasibleError("no projective single-root tree has finite score");
  std::vector<int> heads(n, kRoot);
  eisner_backtrack_complete_l(ch, 0, best_root, heads);
  eisner_backtrack_complete_r(ch, best_root, n - 1, heads);
  heads[best_root] = kRoot;
  return DependencyTree(std::move(heads));
}

// ---------------------------------------------------------------------------
// Chu-Liu/Edmonds
// ---------------------------------------------------------------------------

namespace {

// Maximum spanning arborescence rooted at node 0 over a dense weight
// matrix w (w(u, v) = weight of arc u -> v; -inf = absent). Classic
// recursive contraction. Returns per-node parents (parent[0] unused).
std::vector<int> max_arborescence(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  std::vector<int> parent(n, -1);
  for (int v = 1; v < n; ++v) {
    int best = -1;
    double best_w = kNegInf;
    for (int u = 0; u < n; ++u) {
      if (u == v) continue;
      if (w(u, v) > best_w) {
        best_w = w(u, v);
        best = u;
      }
    }
    if (best < 0 || best_w == kNegInf)
      throw InfeasibleError("node " + std::to_string(v) + " has no incoming arc");
    parent[v] = best;
  }
  // Find a cycle among the greedy parents.
  std::vector<int> color(n, 0);  // 0 unseen, 1 active, 2 done
  color[0] = 2;
  std::vector<int> cycle;
  for (int s = 1; s < n && cycle.empty(); ++s) {
    if (color[s] != 0) continue;
    int v = s;
    std::vector<int> path;
    while (color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = parent[v];
    }
    if (color[v] == 1) {
      // Found a cycle: the tail of path from v.
      auto it = std::find(path.begin(), path.end(), v);
      cycle.assign(it, path.end());
    }
    for (int x : path) color[x] = 2;
  }
  if (cycle.empty()) return parent;

  // Contract the cycle into a supernode and recurse.
  std::vector<bool> in_cycle(n, false);
  for (int v : cycle) in_cycle[v] = true;
  double cycle_weight = 0.0;
  for (int v : cycle) cycle_weight += w(parent[v], v);

  // Map old nodes to contracted indices; supernode gets index `super`.
  std::vector<int> idx(n, -1);
  int m = 0;
  for (int v = 0; v < n; ++v)
    if (!in_cycle[v]) idx[v] = m++;
  const int super = m;
  Eigen::MatrixXd cw = Eigen::MatrixXd::Constant(m + 1, m + 1, kNegInf);
  // Remember which original arc realizes each contracted arc.
  std::vector<std::vector<std::pair<int, int>>> realize(
      m + 1, std::vector<std::pair<int, int>>(m + 1, {-1, -1}));
  for (int u = 0; u < n; ++u) {
    for (int v = 1; v < n; ++v) {
      if (u == v || w(u, v) == kNegInf) continue;
      if (!in_cycle[u] && !in_cycle[v]) {
        if (w(u, v) > cw(idx[u], idx[v])) {
          cw(idx[u], idx[v]) = w(u, v);
          realize[idx[u]][idx[v]] = {u, v};
        }
      } else if (!in_cycle[u] && in_cycle[v]) {
        // Entering the cycle: swap out the cycle arc into v.
        const double adj = w(u, v) - w(parent[v], v);
        if (adj > cw(idx[u], super)) {
          cw(idx[u], super) = adj;
          realize[idx[u]][super] = {u, v};
        }
      } else if (in_cycle[u] && !in_cycle[v]) {
        if (w(u, v) > cw(super, idx[v])) {
          cw(super, idx[v]) = w(u, v);
          realize[super][idx[v]] = {u, v};
        }
      }
    }
  }
  std::vector<int> cparent = max_arborescence(cw);

  // Expand: take the contracted solution's arcs back to original ids.
  std::vector<int> result(n, -1);
  int enter_v = -1;  // cycle node whose inherited arc is replaced
  for (int cv = 1; cv <= m; ++cv) {
    const int cu = cparent[cv];
    const auto [ou, ov] = realize[cu][cv];
    if (cv == super) {
      enter_v = ov;
      result[ov] = ou;
    } else {
      result[ov] = ou;
    }
  }
  for (int v : cycle)
    if (v != enter_v) result[v] = parent[v];
  (void)cycle_weight;
  return result;
}

}  // namespace

DependencyTree chu_liu_edmonds(const Eigen::MatrixXd& scores) {
  const int n = static_cast<int>(scores.rows());
  if (n == 0) throw InfeasibleError("empty score matrix");
  if (scores.cols() != n + 1) throw DecodeError("score matrix must be n x (n+1)");
  // Graph over nodes 0..n with 0 = dummy root. Root arcs are shifted down
  // by a constant exceeding any achievable score difference so the optimum
  // uses exactly one of them.
  double finite_sum = 0.0;
  for (int d = 0; d < n; ++d)
    for (int c = 0; c <= n; ++c)
      if (std::isfinite(scores(d, c))) finite_sum += std::abs(scores(d, c));
  const double root_penalty = finite_sum + 1.0;

  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(n + 1, n + 1, kNegInf);
  for (int d = 0; d < n; ++d) {
    if (scores(d, 0) != kNegInf) w(0, d + 1) = scores(d, 0) - root_penalty;
    for (int h = 0; h < n; ++h) {
      if (h == d) continue;
      w(h + 1, d + 1) = arc_score(scores, h, d);
    }
  }
  std::vector<int> parent = max_arborescence(w);
  std::vector<int> heads(n, kRoot);
  int roots = 0;
  for (int v = 1; v <= n; ++v) {
    if (parent[v] == 0) {
      heads[v - 1] = kRoot;
      ++roots;
    } else {
      heads[v - 1] = parent[v] - 1;
    }
  }
  if (roots != 1)
    throw InfeasibleError("no single-root arborescence with finite score exists");
  return DependencyTree(std::move(heads));
}

DecodeResult decode(const std::vector<bool>& rest_flags, const Eigen::MatrixXd& scores,
                    DecodeMode mode) {
  const int n = static_cast<int>(rest_flags.size());
  if (scores.rows() != n || scores.cols() != n + 1)
    throw DecodeError("score matrix shape does not match the sequence length");
  std::vector<int> keep;  // non-rest positions in order
  for (int i = 0; i < n; ++i)
    if (!rest_flags[i]) keep.push_back(i);
  const int m = static_cast<int>(keep.size());
  if (m == 0) throw InfeasibleError("sequence has no non-rest elements");

  Eigen::MatrixXd sub(m, m + 1);
  for (int d = 0; d < m; ++d) {
    sub(d, 0) = scores(keep[d], 0);
    for (int h = 0; h < m; ++h) sub(d, h + 1) = scores(keep[d], keep[h] + 1);
  }

  std::vector<int> sub_heads;
  switch (mode) {
    case DecodeMode::kGreedy: sub_heads = greedy_heads(sub); break;
    case DecodeMode::kEisner: sub_heads = eisner(sub).heads(); break;
    case DecodeMode::kChuLiuEdmonds: sub_heads = chu_liu_edmonds(sub).heads(); break;
  }

  DecodeResult out;
  out.heads.assign(n, kNone);
  for (int d = 0; d < m; ++d)
    out.heads[keep[d]] = sub_heads[d] == kRoot ? kRoot : keep[sub_heads[d]];
  out.valid = !check_heads(out.heads).has_value();
  return out;
}

}  // namespace musictree
