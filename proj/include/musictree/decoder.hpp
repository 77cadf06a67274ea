// Turns arc score matrices into dependency trees: greedy argmax, Eisner
// projective MST, and Chu-Liu/Edmonds non-projective MST.

#ifndef MUSICTREE_DECODER_HPP
#define MUSICTREE_DECODER_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "musictree/trees.hpp"

namespace musictree {

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllMaskedRowError : DecodeError {
  using DecodeError::DecodeError;
};
struct InfeasibleError : DecodeError {
  using DecodeError::DecodeError;
};

enum class DecodeMode { kGreedy, kEisner, kChuLiuEdmonds };

DecodeMode parse_decode_mode(const std::string& name);
std::string to_string(DecodeMode mode);

// Arc score matrices are lambda x (lambda+1): rows are dependents, column
// 0 is the dummy root, column j >= 1 is head candidate j-1. Forbidden arcs
// are -inf.

// Row-wise argmax; the dummy column maps to kRoot. The result may violate
// the tree invariants.
std::vector<int> greedy_heads(const Eigen::MatrixXd& scores);

// Highest-scoring projective tree with exactly one root. Ties are broken
// deterministically with a leftmost-head preference.
DependencyTree eisner(const Eigen::MatrixXd& scores);

// Highest-scoring spanning arborescence with exactly one root child,
// enforced by penalizing every dummy-root arc with a constant larger than
// any achievable score difference.
DependencyTree chu_liu_edmonds(const Eigen::MatrixXd& scores);

struct DecodeResult {
  std::vector<int> heads;  // full length, kNone at rest positions
  bool valid = false;      // greedy output may be invalid; MST output never is
};

// Runs the chosen algorithm on the non-rest submatrix and reinserts kNone
// entries at rest positions. Invalid greedy output is returned flagged,
// not repaired.
DecodeResult decode(const std::vector<bool>& rest_flags, const Eigen::MatrixXd& scores,
                    DecodeMode mode);

}  // namespace musictree

#endif  // MUSICTREE_DECODER_HPP
