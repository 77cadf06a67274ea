#include "musictree/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace musictree {

LossMode parse_loss_mode(const std::string& name) {
  if (name == "both") return LossMode::kBoth;
  if (name == "bce") return LossMode::kBceOnly;
  if (name == "ce") return LossMode::kCeOnly;
  throw std::runtime_error("unknown loss mode \"" + name + "\"");
}

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kBoth: return "both";
    case LossMode::kBceOnly: return "bce";
    case LossMode::kCeOnly: return "ce";
  }
  return "?";
}

GoldArcs GoldArcs::from_tree(const DependencyTree& tree) {
  GoldArcs g;
  g.head_col.resize(tree.size());
  for (int i = 0; i < tree.size(); ++i) {
    const int h = tree.head(i);
    g.head_col[i] = (h == kRoot || h == kNone) ? 0 : h + 1;
  }
  return g;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double stable_bce(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

double bce_loss(const Eigen::MatrixXd& scores, const GoldArcs& gold) {
  double total = 0.0;
  int count = 0;
  for (int d = 0; d < scores.rows(); ++d) {
    for (int c = 0; c < scores.cols(); ++c) {
      if (scores(d, c) == kNegInf) continue;
      total += stable_bce(scores(d, c), gold.indicator(d, c) ? 1.0 : 0.0);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / count;
}

double ce_loss(const Eigen::MatrixXd& scores, const GoldArcs& gold) {
  const int n = static_cast<int>(scores.rows());
  double total = 0.0;
  for (int d = 0; d < n; ++d) {
    const double m = scores.row(d).maxCoeff();
    double sum = 0.0;
    for (int c = 0; c < scores.cols(); ++c)
      if (scores(d, c) != kNegInf) sum += std::exp(scores(d, c) - m);
    const double lse = m + std::log(sum);
    total += lse - scores(d, gold.head_col.at(d));
  }
  return total / n;
}

double total_loss(const Eigen::MatrixXd& scores, const GoldArcs& gold, LossMode mode) {
  switch (mode) {
    case LossMode::kBoth: return bce_loss(scores, gold) + ce_loss(scores, gold);
    case LossMode::kBceOnly: return bce_loss(scores, gold);
    case LossMode::kCeOnly: return ce_loss(scores, gold);
  }
  return 0.0;
}

LossVars build_losses(nn::Tape& tape, nn::Tape::Var logits,
                      const std::vector<std::pair<int, int>>& pairs, const GoldArcs& gold,
                      LossMode mode) {
  std::vector<double> targets(pairs.size());
  std::vector<int> row_of(pairs.size());
  std::vector<int> gold_entry(gold.length(), -1);
  for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
    const auto& [dep, col] = pairs[p];
    targets[p] = gold.indicator(dep, col) ? 1.0 : 0.0;
    row_of[p] = dep;
    if (gold.head_col.at(dep) == col) gold_entry[dep] = p;
  }
  for (int r = 0; r < gold.length(); ++r)
    if (gold_entry[r] < 0)
      throw std::logic_error("gold head of element " + std::to_string(r) +
                             " is not a potential arc");
  LossVars out;
  out.bce = tape.mean_bce_with_logits(logits, std::move(targets));
  out.ce = tape.grouped_cross_entropy(logits, std::move(row_of), std::move(gold_entry),
                                      gold.length());
  switch (mode) {
    case LossMode::kBoth: out.total = tape.add(out.bce, out.ce); break;
    case LossMode::kBceOnly: out.total = out.bce; break;
    case LossMode::kCeOnly: out.total = out.ce; break;
  }
  return out;
}

std::vector<std::pair<EventSequence, DependencyTree>> augment_transpositions(
    const EventSequence& seq, const DependencyTree& tree) {
  std::vector<std::pair<EventSequence, DependencyTree>> out;
  if (seq.kind == SequenceKind::kChords) {
    for (int k = 0; k < 12; ++k) {
      EventSequence copy = seq;
      for (auto& c : copy.chords) c.root_pc = (c.root_pc + k) % 12;
      out.emplace_back(std::move(copy), tree);
    }
    return out;
  }
  for (int k = -12; k <= 12; ++k) {
    EventSequence copy = seq;
    bool in_range = true;
    for (auto& e : copy.notes) {
      if (e.is_rest()) continue;
      const int p = *e.pitch + k;
      if (p < 0 || p > 127) {
        in_range = false;
        break;
      }
      e.pitch = p;
    }
    if (in_range) out.emplace_back(std::move(copy), tree);
  }
  return out;
}

std::vector<Split> leave_one_out_splits(int corpus_size) {
  if (corpus_size < 2)
    throw std::runtime_error("leave-one-out needs at least two pieces");
  std::vector<Split> splits(corpus_size);
  for (int i = 0; i < corpus_size; ++i) {
    splits[i].test = i;
    for (int j = 0; j < corpus_size; ++j)
      if (j != i) splits[i].train.push_back(j);
  }
  return splits;
}

double lr_at_step(int step, int total_steps, const TrainConfig& cfg) {
  if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps)
    return cfg.learning_rate * static_cast<double>(step) / cfg.warmup_steps;
  if (total_steps <= cfg.warmup_steps) return cfg.learning_rate;
  const double progress =
      static_cast<double>(step - cfg.warmup_steps) / (total_steps - cfg.warmup_steps);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
}

namespace {

// Decoupled-weight-decay Adam over the named tensors of a ModelParams.
class AdamW {
 public:
  AdamW(ModelParams& params, double weight_decay)
      : params_(params), weight_decay_(weight_decay) {
    for (int i = 0; i < params.count(); ++i) {
      m_.push_back(nn::Mat::Zero(params.tensor(i).rows(), params.tensor(i).cols()));
      v_.push_back(nn::Mat::Zero(params.tensor(i).rows(), params.tensor(i).cols()));
    }
  }

  void step(const std::vector<nn::Mat>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (int i = 0; i < params_.count(); ++i) {
      nn::Mat& p = params_.tensor(i);
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      const nn::Mat mhat = m_[i] / bc1;
      const nn::Mat vhat = v_[i] / bc2;
      p -= lr * (mhat.array() / (vhat.array().sqrt() + kEps)).matrix();
      p -= lr * weight_decay_ * p;
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  ModelParams& params_;
  double weight_decay_;
  std::vector<nn::Mat> m_, v_;
  long t_ = 0;
};

void write_record(std::ostream* os, const LossRecord& r) {
  if (os == nullptr) return;
  (*os) << "{\"epoch\":" << r.epoch << ",\"step\":" << r.step << ",\"lr\":" << r.lr
        << ",\"bce\":" << r.bce << ",\"ce\":" << r.ce << ",\"total\":" << r.total << "}\n";
}

}  // namespace

FitResult fit(const std::vector<std::pair<EventSequence, DependencyTree>>& corpus,
              const DurationVocab& vocab, const MetricalTemplateTable& table,
              const TrainConfig& train_cfg, const ModelConfig& model_cfg,
              std::ostream* loss_log) {
  if (corpus.empty()) throw std::runtime_error("training corpus is empty");
  model_cfg.validate();
  if (train_cfg.learning_rate <= 0.0 || train_cfg.epochs <= 0 || train_cfg.batch_size < 1)
    throw std::runtime_error("training configuration must have positive rates and counts");

  // Features, masks and gold targets are fixed; precompute them once.
  struct Prepared {
    FeatureMatrix x;
    PotentialArcMask mask;
    std::vector<std::pair<int, int>> pairs;
    GoldArcs gold;
  };
  std::vector<Prepared> prep;
  prep.reserve(corpus.size());
  for (const auto& [seq, tree] : corpus) {
    PotentialArcMask mask = PotentialArcMask::for_sequence(seq);
    prep.push_back({extract_features(seq, vocab, table, false), mask, mask.pairs(),
                    GoldArcs::from_tree(tree)});
  }

  FitResult result;
  result.params = init_params(model_cfg, train_cfg.seed);

  const int n = static_cast<int>(corpus.size());
  const int steps_per_epoch = (n + train_cfg.batch_size - 1) / train_cfg.batch_size;
  const int total_steps = steps_per_epoch * train_cfg.epochs;

  AdamW optimizer(result.params, train_cfg.weight_decay);
  std::mt19937_64 order_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::mt19937_64 dropout_rng(train_cfg.seed ^ 0xd1b54a32d192ed03ull);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  const auto shape_index = [&] {
    std::map<std::string, int> idx;
    for (int i = 0; i < result.params.count(); ++i) idx[result.params.name(i)] = i;
    return idx;
  }();

  int step = 0;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    for (int at = 0; at < n; at += train_cfg.batch_size) {
      ++step;
      const int batch = std::min(train_cfg.batch_size, n - at);
      std::vector<nn::Mat> grads;
      grads.reserve(result.params.count());
      for (int i = 0; i < result.params.count(); ++i)
        grads.push_back(nn::Mat::Zero(result.params.tensor(i).rows(),
                                      result.params.tensor(i).cols()));
      double bce_sum = 0.0, ce_sum = 0.0, total_sum = 0.0;
      for (int b = 0; b < batch; ++b) {
        const Prepared& ex = prep[order[at + b]];
        nn::Tape tape;
        ParamBinding bound(tape, result.params);
        auto embedded = embed_features(tape, ex.x, bound, model_cfg);
        auto encoded = encode_sequence(tape, embedded, bound, model_cfg, &dropout_rng);
        auto logits = score_pairs(tape, encoded, ex.pairs, bound, model_cfg, &dropout_rng);
        auto losses = build_losses(tape, logits, ex.pairs, ex.gold, train_cfg.loss_mode);
        const double bce = tape.value(losses.bce)(0, 0);
        const double ce = tape.value(losses.ce)(0, 0);
        const double total = tape.value(losses.total)(0, 0);
        if (!std::isfinite(total))
          throw DivergenceError("loss diverged at step " + std::to_string(step));
        bce_sum += bce;
        ce_sum += ce;
        total_sum += total;
        tape.backward(losses.total);
        for (const auto& [name, var] : bound.bound())
          grads[shape_index.at(name)] += tape.grad(var) / batch;
      }
      const double lr = lr_at_step(step, total_steps, train_cfg);
      optimizer.step(grads, lr);
      LossRecord rec{epoch, step, lr, bce_sum / batch, ce_sum / batch, total_sum / batch};
      write_record(loss_log, rec);
      result.log.push_back(rec);
    }
  }
  return result;
}

}  // namespace musictree
