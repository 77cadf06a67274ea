#include "musictree/trees.hpp"

#include <algorithm>
#include <cstdlib>

namespace musictree {

std::optional<std::string> check_heads(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return "empty head sequence";
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = heads[i];
    if (h == kRoot) {
      ++roots;
      continue;
    }
    if (h == kNone) continue;
    if (h < 0 || h >= n) return "head index " + std::to_string(h) + " out of range at position " + std::to_string(i);
    if (h == i) return "self-loop at position " + std::to_string(i);
    if (heads[h] == kNone) return "element " + std::to_string(i) + " attaches to rest position " + std::to_string(h);
  }
  if (roots != 1) return "expected exactly one root, found " + std::to_string(roots);
  // Acyclicity: every non-rest chain must terminate at the root.
  for (int i = 0; i < n; ++i) {
    if (heads[i] == kNone) continue;
    int cur = i;
    int steps = 0;
    while (heads[cur] != kRoot) {
      cur = heads[cur];
      if (++steps > n) return "cycle through position " + std::to_string(i);
    }
  }
  return std::nullopt;
}

DependencyTree::DependencyTree(std::vector<int> heads) : heads_(std::move(heads)) {
  if (auto err = check_heads(heads_)) throw InvalidTreeError(*err);
}

int DependencyTree::root() const {
  for (int i = 0; i < size(); ++i)
    if (heads_[i] == kRoot) return i;
  return -1;  // unreachable for a constructed tree
}

std::vector<int> DependencyTree::dependents(int i) const {
  std::vector<int> deps;
  for (int j = 0; j < size(); ++j)
    if (heads_[j] == i) deps.push_back(j);
  return deps;
}

int DependencyTree::non_rest_count() const {
  int c = 0;
  for (int h : heads_)
    if (h != kNone) ++c;
  return c;
}

ConstituentTree ConstituentTree::leaf(int element) {
  ConstituentTree t;
  Node n;
  n.element = element;
  n.span_lo = element;
  n.span_hi = element;
  t.nodes_.push_back(n);
  t.root_ = 0;
  return t;
}

ConstituentTree ConstituentTree::internal(const ConstituentTree& left,
                                          const ConstituentTree& right,
                                          Primary primary) {
  const Node& lr = left.nodes_.at(left.root_);
  const Node& rr = right.nodes_.at(right.root_);
  if (lr.span_hi + 1 != rr.span_lo)
    throw InvalidTreeError("children yields are not adjacent: [" +
                           std::to_string(lr.span_lo) + "," + std::to_string(lr.span_hi) +
                           "] vs [" + std::to_string(rr.span_lo) + "," +
                           std::to_string(rr.span_hi) + "]");
  ConstituentTree t;
  t.nodes_ = left.nodes_;
  const int offset = static_cast<int>(t.nodes_.size());
  for (Node n : right.nodes_) {
    if (!n.is_leaf()) {
      n.left += offset;
      n.right += offset;
    }
    t.nodes_.push_back(n);
  }
  Node top;
  top.left = left.root_;
  top.right = right.root_ + offset;
  top.primary = primary;
  top.span_lo = lr.span_lo;
  top.span_hi = rr.span_hi;
  t.nodes_.push_back(top);
  t.root_ = static_cast<int>(t.nodes_.size()) - 1;
  return t;
}

int ConstituentTree::leaf_count() const {
  int c = 0;
  for (const Node& n : nodes_)
    if (n.is_leaf()) ++c;
  return c;
}

namespace {

bool nodes_equal(const ConstituentTree& a, int ia, const ConstituentTree& b, int ib) {
  const auto& na = a.node(ia);
  const auto& nb = b.node(ib);
  if (na.is_leaf() != nb.is_leaf()) return false;
  if (na.is_leaf()) return na.element == nb.element;
  return na.primary == nb.primary && nodes_equal(a, na.left, b, nb.left) &&
         nodes_equal(a, na.right, b, nb.right);
}

}  // namespace

bool ConstituentTree::operator==(const ConstituentTree& other) const {
  if (node_count() != other.node_count()) return false;
  return nodes_equal(*this, root_, other, other.root_);
}

bool is_projective(const DependencyTree& t) {
  const int n = t.size();
  // reaches(x, h): h is an ancestor of x.
  auto reaches = [&](int x, int h) {
    int cur = x;
    while (cur != kRoot) {
      cur = t.head(cur);
      if (cur == h) return true;
    }
    return false;
  };
  for (int dep = 0; dep < n; ++dep) {
    const int head = t.head(dep);
    if (head == kRoot || head == kNone) continue;
    const int lo = std::min(dep, head);
    const int hi = std::max(dep, head);
    for (int x = lo + 1; x < hi; ++x) {
      if (t.is_rest(x)) continue;
      if (!reaches(x, head)) return false;
    }
  }
  return true;
}

bool has_double_sided(const DependencyTree& t) {
  const int n = t.size();
  for (int h = 0; h < n; ++h) {
    bool left = false, right = false;
    for (int d = 0; d < n; ++d) {
      if (t.head(d) != h) continue;
      (d < h ? left : right) = true;
    }
    if (left && right) return true;
  }
  return false;
}

namespace {

// Builds the constituent subtree for element e with its first `remaining`
// dependents (ordered nearest-to-farthest removal happens from the back).
ConstituentTree build_constituent(int e, const std::vector<std::vector<int>>& deps,
                                  int remaining) {
  if (remaining == 0) return ConstituentTree::leaf(e);
  const auto& d = deps[e];
  // Dependents are sorted ascending and all lie on one side of e, so the
  // farthest remaining one is at a known end of the active prefix.
  const bool left_side = d.front() < e;
  const int farthest = left_side ? d[d.size() - remaining] : d[remaining - 1];
  ConstituentTree secondary = build_constituent(farthest, deps,
                                                static_cast<int>(deps[farthest].size()));
  ConstituentTree primary = build_constituent(e, deps, remaining - 1);
  if (farthest < e)
    return ConstituentTree::internal(secondary, primary, Primary::kRight);
  return ConstituentTree::internal(primary, secondary, Primary::kLeft);
}

}  // namespace

ConstituentTree dep_to_constituent(const DependencyTree& t) {
  for (int i = 0; i < t.size(); ++i)
    if (t.is_rest(i))
      throw InvalidTreeError("dependency tree contains rests; strip them before conversion");
  if (has_double_sided(t))
    throw DoubleSidedError("double-sided dependency tree has no unique constituent form");
  if (!is_projective(t))
    throw NonProjectiveError("non-projective dependency tree cannot be converted");
  std::vector<std::vector<int>> deps(t.size());
  for (int i = 0; i < t.size(); ++i) deps[i] = t.dependents(i);
  const int r = t.root();
  return build_constituent(r, deps, static_cast<int>(deps[r].size()));
}

namespace {

int assign_heads(const ConstituentTree& c, int node, std::vector<int>& heads) {
  const auto& n = c.node(node);
  if (n.is_leaf()) return n.element;
  const int left_head = assign_heads(c, n.left, heads);
  const int right_head = assign_heads(c, n.right, heads);
  if (n.primary == Primary::kLeft) {
    heads[right_head] = left_head;
    return left_head;
  }
  heads[left_head] = right_head;
  return right_head;
}

}  // namespace

DependencyTree constituent_to_dep(const ConstituentTree& c) {
  std::vector<int> heads(c.leaf_count(), kRoot);
  const int top = assign_heads(c, c.root(), heads);
  heads[top] = kRoot;
  return DependencyTree(std::move(heads));
}

std::set<std::pair<int, int>> constituent_spans(const ConstituentTree& c) {
  std::set<std::pair<int, int>> spans;
  for (int i = 0; i < c.node_count(); ++i) {
    const auto& n = c.node(i);
    if (!n.is_leaf()) spans.emplace(n.span_lo, n.span_hi);
  }
  return spans;
}

}  // namespace musictree
