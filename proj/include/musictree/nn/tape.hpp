// Minimal reverse-mode autodiff over dense double matrices. Only the
// operations needed by the arc scorer are provided; backward closures are
// recorded on a tape and replayed in reverse creation order.

#ifndef MUSICTREE_NN_TAPE_HPP
#define MUSICTREE_NN_TAPE_HPP

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace musictree::nn {

using Mat = Eigen::MatrixXd;

class Tape {
 public:
  struct Var {
    int id = -1;
    bool ok() const { return id >= 0; }
  };

  Var leaf(Mat value);

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }
  const Mat& grad(Var v) const { return nodes_.at(v.id).grad; }

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and accumulates gradients
  // into every node reachable backward from it.
  void backward(Var root);

  int size() const { return static_cast<int>(nodes_.size()); }

  // --- elementwise / structural ---------------------------------------
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  // x: n x d plus a broadcast 1 x d row.
  Var add_row_broadcast(Var x, Var row);
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var gather_rows(Var table, std::vector<int> rows);
  Var concat_rows(Var a, Var b);
  Var slice_cols(Var x, int begin, int count);
  Var concat_cols(const std::vector<Var>& xs);
  // y_p = dot(a_p, b_p) for each row p; result m x 1.
  Var rowwise_dot(Var a, Var b);

  // --- nonlinearities ---------------------------------------------------
  Var gelu(Var x);  // exact erf form
  Var softmax_rows(Var x);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-9);
  // Inverted dropout; identity when rng is null or p == 0.
  Var dropout(Var x, double p, std::mt19937_64* rng);

  // --- relative-position attention helpers ------------------------------
  // s_ij = dot(q_i, rel[clip(j - i) + clip_dist]); q: n x d,
  // rel: (2*clip_dist+1) x d, result n x n.
  Var relative_scores(Var q, Var rel, int clip_dist);
  // z_i = sum_j p_ij * rel[clip(j - i) + clip_dist]; p: n x n, result n x d.
  Var relative_values(Var p, Var rel, int clip_dist);

  // --- arc predictor helpers --------------------------------------------
  // Row p of the result is [h[first_p], h[second_p]] (1 x 2d).
  Var pair_rows(Var h, std::vector<std::pair<int, int>> pairs);

  // --- losses (1 x 1 results) -------------------------------------------
  // Mean binary cross-entropy with logits against 0/1 targets.
  Var mean_bce_with_logits(Var logits, std::vector<double> targets);
  // Rows group the logits; per row r the loss is logsumexp(row) - s[gold_r],
  // averaged over n_rows. Every row index in [0, n_rows) must own a gold
  // entry.
  Var grouped_cross_entropy(Var logits, std::vector<int> row_of, std::vector<int> gold_entry,
                            int n_rows);

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> backprop;  // empty for leaves
  };
  Var push(Mat value, std::function<void()> backprop = {});
  Mat& grad_ref(Var v) { return nodes_.at(v.id).grad; }
  std::vector<Node> nodes_;
};

}  // namespace musictree::nn

#endif  // MUSICTREE_NN_TAPE_HPP
