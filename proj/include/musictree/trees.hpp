// Dependency and constituent tree structures plus the exact conversions
// between them.

#ifndef MUSICTREE_TREES_HPP
#define MUSICTREE_TREES_HPP

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace musictree {

// Head sentinels. kRoot marks the single tree root; kNone marks rest
// elements, which belong to the input sequence but not to the tree.
inline constexpr int kRoot = -1;
inline constexpr int kNone = -2;

struct TreeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidTreeError : TreeError {
  using TreeError::TreeError;
};
struct NonProjectiveError : TreeError {
  using TreeError::TreeError;
};
struct DoubleSidedError : TreeError {
  using TreeError::TreeError;
};

// Returns an error message if `heads` is not a valid head assignment:
// exactly one kRoot, no self-loops, no arcs into kNone positions, and
// every non-rest element must reach the root.
std::optional<std::string> check_heads(const std::vector<int>& heads);

// Immutable dependency tree over a sequence of length size(). heads()[i]
// is the 0-based head index of element i, kRoot for the root, kNone for
// rests.
class DependencyTree {
 public:
  explicit DependencyTree(std::vector<int> heads);

  int size() const { return static_cast<int>(heads_.size()); }
  int head(int i) const { return heads_.at(i); }
  bool is_rest(int i) const { return heads_.at(i) == kNone; }
  const std::vector<int>& heads() const { return heads_; }

  int root() const;
  // Dependents of element i in ascending sequence order.
  std::vector<int> dependents(int i) const;
  int non_rest_count() const;

  bool operator==(const DependencyTree&) const = default;

 private:
  std::vector<int> heads_;
};

enum class Primary { kLeft, kRight };

// Immutable binary constituent tree. Leaves carry 0-based element
// indices; in-order traversal of the leaves yields 0..leaf_count()-1.
// Every internal node marks one child as primary (the head-propagating
// side).
class ConstituentTree {
 public:
  struct Node {
    int left = -1;    // child node index, -1 for leaves
    int right = -1;
    int element = -1; // leaf element index, -1 for internal nodes
    Primary primary = Primary::kLeft;
    int span_lo = 0;  // leftmost / rightmost leaf element of the subtree
    int span_hi = 0;
    bool is_leaf() const { return left < 0; }
  };

  static ConstituentTree leaf(int element);
  // Joins two trees; left's yield must end exactly where right's begins.
  static ConstituentTree internal(const ConstituentTree& left,
                                  const ConstituentTree& right,
                                  Primary primary);

  int root() const { return root_; }
  const Node& node(int i) const { return nodes_.at(i); }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int leaf_count() const;
  int internal_count() const { return node_count() - leaf_count(); }

  bool operator==(const ConstituentTree& other) const;

 private:
  ConstituentTree() = default;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// True iff for every arc, every element strictly between dependent and
// head is a descendant of the head. Rests are skipped.
bool is_projective(const DependencyTree& t);

// True iff some element has at least one dependent on each side.
bool has_double_sided(const DependencyTree& t);

// Unique constituent tree of a projective, single-sided dependency tree
// without rests. At each split the primary child keeps the head and the
// secondary child is the head's farthest remaining dependent.
ConstituentTree dep_to_constituent(const DependencyTree& t);

// Inverse of dep_to_constituent: each secondary subtree head becomes a
// dependent of its sibling primary subtree head.
DependencyTree constituent_to_dep(const ConstituentTree& c);

// (leftmost, rightmost) leaf pairs of all internal nodes.
std::set<std::pair<int, int>> constituent_spans(const ConstituentTree& c);

}  // namespace musictree

#endif  // MUSICTREE_TREES_HPP
