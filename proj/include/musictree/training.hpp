// Loss computation, transposition augmentation, leave-one-out splits and
// the AdamW training loop.

#ifndef MUSICTREE_TRAINING_HPP
#define MUSICTREE_TRAINING_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "musictree/scorer.hpp"
#include "musictree/trees.hpp"

namespace musictree {

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LossMode { kBoth, kBceOnly, kCeOnly };

LossMode parse_loss_mode(const std::string& name);
std::string to_string(LossMode mode);

struct TrainConfig {
  double learning_rate = 4e-4;
  double weight_decay = 0.05;
  int warmup_steps = 50;
  int epochs = 60;  // 60 for chords, 20 for melodies
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::kBoth;
  int batch_size = 1;
};

// Gold supervision for one sequence: per dependent the target head column
// (0 = dummy, used by the root and by rests).
struct GoldArcs {
  std::vector<int> head_col;

  static GoldArcs from_tree(const DependencyTree& tree);
  int length() const { return static_cast<int>(head_col.size()); }
  bool indicator(int dep, int col) const { return head_col.at(dep) == col; }
};

// Mean binary cross-entropy over potential arcs (the finite entries of the
// score matrix).
double bce_loss(const Eigen::MatrixXd& scores, const GoldArcs& gold);
// Mean over rows of -log softmax(row)[gold column]; masked entries stay -inf.
double ce_loss(const Eigen::MatrixXd& scores, const GoldArcs& gold);
double total_loss(const Eigen::MatrixXd& scores, const GoldArcs& gold, LossMode mode);

// Tape versions used by the training loop; `pairs` must enumerate the
// potential arcs of the same mask the scores were built from.
struct LossVars {
  nn::Tape::Var bce;
  nn::Tape::Var ce;
  nn::Tape::Var total;
};
LossVars build_losses(nn::Tape& tape, nn::Tape::Var logits,
                      const std::vector<std::pair<int, int>>& pairs, const GoldArcs& gold,
                      LossMode mode);

// Melodies: pitch shifts of -12..+12 semitones, dropping transpositions
// that leave [0, 127]; chords: the 12 rotations of the root pitch class.
// Trees are shared unchanged.
std::vector<std::pair<EventSequence, DependencyTree>> augment_transpositions(
    const EventSequence& seq, const DependencyTree& tree);

struct Split {
  std::vector<int> train;
  int test = -1;
};
std::vector<Split> leave_one_out_splits(int corpus_size);

// Linear warmup to the base rate, then cosine annealing to zero. Steps are
// 1-based.
double lr_at_step(int step, int total_steps, const TrainConfig& cfg);

struct LossRecord {
  int epoch = 0;
  int step = 0;
  double lr = 0.0;
  double bce = 0.0;
  double ce = 0.0;
  double total = 0.0;
};

struct FitResult {
  ModelParams params;
  std::vector<LossRecord> log;  // one record per optimizer step
};

// Trains on prepared (sequence, tree) pairs. The duration vocabulary must
// come from the training portion only. Loss records are streamed to
// `loss_log` as JSON lines when given.
FitResult fit(const std::vector<std::pair<EventSequence, DependencyTree>>& corpus,
              const DurationVocab& vocab, const MetricalTemplateTable& table,
              const TrainConfig& train_cfg, const ModelConfig& model_cfg,
              std::ostream* loss_log = nullptr);

}  // namespace musictree

#endif  // MUSICTREE_TRAINING_HPP
