// The neural arc scorer: summed feature embeddings, a transformer encoder
// with relative position representations, a learnable root row, and an MLP
// over concatenated (head, dependent) pairs producing a weighted
// graph-adjacency matrix.

#ifndef MUSICTREE_SCORER_HPP
#define MUSICTREE_SCORER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "musictree/features.hpp"
#include "musictree/nn/tape.hpp"

namespace musictree {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int embed_dim = 96;
  int encoder_layers = 2;
  int hidden_dim = 64;
  int attention_heads = 4;
  int ffn_dim = 0;  // 0 -> 4 * hidden_dim
  int mlp_layers = 2;
  double dropout = 0.1;
  int max_relative_distance = 32;
  bool bilinear = false;  // replace the concat MLP with a bilinear scorer
  std::vector<int> feature_vocab_sizes;

  int resolved_ffn_dim() const { return ffn_dim > 0 ? ffn_dim : 4 * hidden_dim; }
  int head_dim() const { return hidden_dim / attention_heads; }
  int feature_count() const { return static_cast<int>(feature_vocab_sizes.size()); }
  void validate() const;
};

// Named parameter tensors in a fixed order.
class ModelParams {
 public:
  void add(const std::string& name, nn::Mat tensor);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  const nn::Mat& at(const std::string& name) const;
  nn::Mat& at(const std::string& name);
  int count() const { return static_cast<int>(tensors_.size()); }
  const std::string& name(int i) const { return tensors_.at(i).first; }
  const nn::Mat& tensor(int i) const { return tensors_.at(i).second; }
  nn::Mat& tensor(int i) { return tensors_.at(i).second; }

 private:
  std::vector<std::pair<std::string, nn::Mat>> tensors_;
  std::map<std::string, int> index_;
};

// Expected tensor shapes for a config, in serialization order.
std::vector<std::pair<std::string, std::pair<int, int>>> parameter_shapes(const ModelConfig& cfg);

// Reproducible initialization: uniform +-1/sqrt(fan_in) for linear maps,
// N(0, 0.02) for embeddings, relative-position tables and the root row,
// identity for layer norms, zero biases.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// lambda x (lambda+1) potential-arc mask. Rows are dependents, column 0 is
// the dummy root, column j >= 1 is head candidate j-1. Self-loops are
// excluded; rests connect only to the dummy column and are never heads.
class PotentialArcMask {
 public:
  explicit PotentialArcMask(std::vector<bool> rest_flags);
  static PotentialArcMask for_sequence(const EventSequence& seq);

  int length() const { return static_cast<int>(rest_.size()); }
  bool allowed(int dep, int col) const { return allowed_.at(dep * (length() + 1) + col); }
  bool is_rest(int i) const { return rest_.at(i); }
  const std::vector<bool>& rest_flags() const { return rest_; }
  // Unmasked (dep, col) pairs in row-major order.
  std::vector<std::pair<int, int>> pairs() const;

 private:
  std::vector<bool> rest_;
  std::vector<bool> allowed_;
};

// --- tape-building blocks (shared by inference and training) -------------

// Binds parameter tensors to tape leaves on demand so callers can read
// their gradients after backward().
class ParamBinding {
 public:
  ParamBinding(nn::Tape& tape, const ModelParams& params) : tape_(tape), params_(params) {}
  nn::Tape::Var var(const std::string& name);
  const std::map<std::string, nn::Tape::Var>& bound() const { return cache_; }
  const ModelParams& params() const { return params_; }
  nn::Tape& tape() { return tape_; }

 private:
  nn::Tape& tape_;
  const ModelParams& params_;
  std::map<std::string, nn::Tape::Var> cache_;
};

// Sum of the per-feature embedding rows; lambda x embed_dim.
nn::Tape::Var embed_features(nn::Tape& tape, const FeatureMatrix& x, ParamBinding& params,
                             const ModelConfig& cfg);

// Transformer encoder plus the learnable root row; (lambda+1) x hidden_dim.
// Pass a non-null rng to enable dropout (training mode).
nn::Tape::Var encode_sequence(nn::Tape& tape, nn::Tape::Var embedded, ParamBinding& params,
                              const ModelConfig& cfg, std::mt19937_64* dropout_rng = nullptr);

// One logit per unmasked pair; pairs use (dep, col) indices and the
// concatenation order inside is (head row, dependent row).
nn::Tape::Var score_pairs(nn::Tape& tape, nn::Tape::Var encoded,
                          const std::vector<std::pair<int, int>>& pairs, ParamBinding& params,
                          const ModelConfig& cfg, std::mt19937_64* dropout_rng = nullptr);

// Scatters pair logits into a dense lambda x (lambda+1) matrix with -inf
// at masked entries.
Eigen::MatrixXd assemble_scores(int length, const std::vector<std::pair<int, int>>& pairs,
                                const Eigen::MatrixXd& logits);

// Eval-mode forward pass: deterministic, dropout off.
Eigen::MatrixXd score_matrix(const FeatureMatrix& x, const PotentialArcMask& mask,
                             const ModelParams& params, const ModelConfig& cfg);

}  // namespace musictree

#endif  // MUSICTREE_SCORER_HPP
