#include "musictree/scorer.hpp"

#include <cmath>
#include <limits>

namespace musictree {

void ModelConfig::validate() const {
  if (embed_dim <= 0 || hidden_dim <= 0 || encoder_layers < 0 || mlp_layers < 1)
    throw ModelError("model dimensions must be positive");
  if (attention_heads <= 0 || hidden_dim % attention_heads != 0)
    throw ModelError("hidden_dim must be divisible by attention_heads");
  if (dropout < 0.0 || dropout >= 1.0) throw ModelError("dropout must be in [0, 1)");
  if (max_relative_distance < 1) throw ModelError("max_relative_distance must be >= 1");
  if (feature_vocab_sizes.empty()) throw ModelError("feature_vocab_sizes must be set");
  for (int v : feature_vocab_sizes)
    if (v <= 0) throw ModelError("feature vocabulary sizes must be positive");
}

void ModelParams::add(const std::string& name, nn::Mat tensor) {
  if (index_.count(name)) throw ModelError("duplicate parameter tensor \"" + name + "\"");
  index_[name] = static_cast<int>(tensors_.size());
  tensors_.emplace_back(name, std::move(tensor));
}

const nn::Mat& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("missing parameter tensor \"" + name + "\"");
  return tensors_[it->second].second;
}

nn::Mat& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("missing parameter tensor \"" + name + "\"");
  return tensors_[it->second].second;
}

std::vector<std::pair<std::string, std::pair<int, int>>> parameter_shapes(
    const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, std::pair<int, int>>> shapes;
  auto add = [&](const std::string& n, int r, int c) { shapes.emplace_back(n, std::make_pair(r, c)); };
  for (int f = 0; f < cfg.feature_count(); ++f)
    add("embed." + std::to_string(f) + ".weight", cfg.feature_vocab_sizes[f], cfg.embed_dim);
  add("input_proj.weight", cfg.embed_dim, cfg.hidden_dim);
  add("input_proj.bias", 1, cfg.hidden_dim);
  const int rel_rows = 2 * cfg.max_relative_distance + 1;
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
      add(p + "attn." + w + ".weight", cfg.hidden_dim, cfg.hidden_dim);
      add(p + "attn." + w + ".bias", 1, cfg.hidden_dim);
    }
    add(p + "attn.rel_k", rel_rows, cfg.head_dim());
    add(p + "attn.rel_v", rel_rows, cfg.head_dim());
    add(p + "ln1.gain", 1, cfg.hidden_dim);
    add(p + "ln1.bias", 1, cfg.hidden_dim);
    add(p + "ffn.w1", cfg.hidden_dim, cfg.resolved_ffn_dim());
    add(p + "ffn.b1", 1, cfg.resolved_ffn_dim());
    add(p + "ffn.w2", cfg.resolved_ffn_dim(), cfg.hidden_dim);
    add(p + "ffn.b2", 1, cfg.hidden_dim);
    add(p + "ln2.gain", 1, cfg.hidden_dim);
    add(p + "ln2.bias", 1, cfg.hidden_dim);
  }
  add("root_row", 1, cfg.hidden_dim);
  if (cfg.bilinear) {
    add("arc_bilinear.u", cfg.hidden_dim, cfg.hidden_dim);
    add("arc_bilinear.bias", 1, 1);
  } else {
    for (int l = 0; l < cfg.mlp_layers; ++l) {
      const int in = l == 0 ? 2 * cfg.hidden_dim : cfg.hidden_dim;
      const int out = l == cfg.mlp_layers - 1 ? 1 : cfg.hidden_dim;
      add("arc_mlp." + std::to_string(l) + ".weight", in, out);
      add("arc_mlp." + std::to_string(l) + ".bias", 1, out);
    }
  }
  return shapes;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  ModelParams params;
  for (const auto& [name, shape] : parameter_shapes(cfg)) {
    nn::Mat t(shape.first, shape.second);
    const bool is_bias = name.ends_with(".bias") || name.ends_with(".b1") || name.ends_with(".b2");
    const bool is_ln = name.find(".ln") != std::string::npos;
    const bool is_embedding = name.starts_with("embed.") || name == "root_row" ||
                              name.ends_with(".rel_k") || name.ends_with(".rel_v");
    if (is_ln) {
      t.setConstant(name.ends_with(".gain") ? 1.0 : 0.0);
    } else if (is_bias) {
      t.setZero();
    } else if (is_embedding) {
      for (int r = 0; r < t.rows(); ++r)
        for (int c = 0; c < t.cols(); ++c) t(r, c) = normal(rng);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(shape.first));
      std::uniform_real_distribution<double> uniform(-bound, bound);
      for (int r = 0; r < t.rows(); ++r)
        for (int c = 0; c < t.cols(); ++c) t(r, c) = uniform(rng);
    }
    params.add(name, std::move(t));
  }
  return params;
}

PotentialArcMask::PotentialArcMask(std::vector<bool> rest_flags) : rest_(std::move(rest_flags)) {
  const int n = length();
  allowed_.assign(static_cast<size_t>(n) * (n + 1), false);
  for (int d = 0; d < n; ++d) {
    auto set = [&](int col, bool v) { allowed_[d * (n + 1) + col] = v; };
    set(0, true);  // dummy column: root for non-rests, head-of-rest target
    if (rest_[d]) continue;
    for (int h = 0; h < n; ++h) {
      if (h == d || rest_[h]) continue;
      set(h + 1, true);
    }
  }
}

PotentialArcMask PotentialArcMask::for_sequence(const EventSequence& seq) {
  return PotentialArcMask(seq.rest_flags());
}

std::vector<std::pair<int, int>> PotentialArcMask::pairs() const {
  std::vector<std::pair<int, int>> out;
  const int n = length();
  for (int d = 0; d < n; ++d)
    for (int c = 0; c <= n; ++c)
      if (allowed(d, c)) out.emplace_back(d, c);
  return out;
}

nn::Tape::Var embed_features(nn::Tape& tape, const FeatureMatrix& x, ParamBinding& params,
                             const ModelConfig& cfg) {
  if (x.cols() != cfg.feature_count())
    throw ModelError("feature matrix has " + std::to_string(x.cols()) +
                     " columns, config expects " + std::to_string(cfg.feature_count()));
  nn::Tape::Var sum;
  for (int f = 0; f < cfg.feature_count(); ++f) {
    std::vector<int> idx(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
      const int v = x(i, f);
      if (v < 0 || v >= cfg.feature_vocab_sizes[f])
        throw OutOfVocabError("feature " + std::to_string(f) + " value " + std::to_string(v) +
                              " outside vocabulary of size " +
                              std::to_string(cfg.feature_vocab_sizes[f]));
      idx[i] = v;
    }
    auto table = params.var("embed." + std::to_string(f) + ".weight");
    auto rows = tape.gather_rows(table, std::move(idx));
    sum = sum.ok() ? tape.add(sum, rows) : rows;
  }
  return sum;
}

nn::Tape::Var ParamBinding::var(const std::string& name) {
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  auto v = tape_.leaf(params_.at(name));
  cache_.emplace(name, v);
  return v;
}

namespace {

nn::Tape::Var linear(nn::Tape& tape, nn::Tape::Var x, nn::Tape::Var w, nn::Tape::Var b) {
  return tape.add_row_broadcast(tape.matmul(x, w), b);
}

}  // namespace

nn::Tape::Var encode_sequence(nn::Tape& tape, nn::Tape::Var embedded, ParamBinding& params,
                              const ModelConfig& cfg, std::mt19937_64* rng) {
  auto P = [&params](const std::string& name) { return params.var(name); };
  const int dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  auto x = linear(tape, embedded, P("input_proj.weight"), P("input_proj.bias"));
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    auto q = linear(tape, x, P(p + "attn.wq.weight"), P(p + "attn.wq.bias"));
    auto k = linear(tape, x, P(p + "attn.wk.weight"), P(p + "attn.wk.bias"));
    auto v = linear(tape, x, P(p + "attn.wv.weight"), P(p + "attn.wv.bias"));
    std::vector<nn::Tape::Var> heads;
    for (int h = 0; h < cfg.attention_heads; ++h) {
      auto qh = tape.slice_cols(q, h * dh, dh);
      auto kh = tape.slice_cols(k, h * dh, dh);
      auto vh = tape.slice_cols(v, h * dh, dh);
      // Shaw-style relative positions: shared across heads, added to the
      // keys for the scores and to the values for the outputs.
      auto content = tape.matmul_nt(qh, kh);
      auto rel = tape.relative_scores(qh, P(p + "attn.rel_k"), cfg.max_relative_distance);
      auto logits = tape.scale(tape.add(content, rel), inv_sqrt_dh);
      auto probs = tape.dropout(tape.softmax_rows(logits), cfg.dropout, rng);
      auto ctx = tape.add(tape.matmul(probs, vh),
                          tape.relative_values(probs, P(p + "attn.rel_v"),
                                               cfg.max_relative_distance));
      heads.push_back(ctx);
    }
    auto attn = linear(tape, tape.concat_cols(heads), P(p + "attn.wo.weight"),
                       P(p + "attn.wo.bias"));
    x = tape.layer_norm(tape.add(x, tape.dropout(attn, cfg.dropout, rng)), P(p + "ln1.gain"),
                        P(p + "ln1.bias"));
    auto f = tape.gelu(linear(tape, x, P(p + "ffn.w1"), P(p + "ffn.b1")));
    f = linear(tape, tape.dropout(f, cfg.dropout, rng), P(p + "ffn.w2"), P(p + "ffn.b2"));
    x = tape.layer_norm(tape.add(x, tape.dropout(f, cfg.dropout, rng)), P(p + "ln2.gain"),
                        P(p + "ln2.bias"));
  }
  return tape.concat_rows(x, P("root_row"));
}

nn::Tape::Var score_pairs(nn::Tape& tape, nn::Tape::Var encoded,
                          const std::vector<std::pair<int, int>>& pairs, ParamBinding& params,
                          const ModelConfig& cfg, std::mt19937_64* rng) {
  auto P = [&params](const std::string& name) { return params.var(name); };
  const int lambda = static_cast<int>(tape.value(encoded).rows()) - 1;
  // (head row, dependent row): column 0 maps to the root row at index
  // lambda, column j >= 1 to element row j-1. Order is fixed because arcs
  // are directed.
  std::vector<std::pair<int, int>> hd;
  hd.reserve(pairs.size());
  for (const auto& [dep, col] : pairs) hd.emplace_back(col == 0 ? lambda : col - 1, dep);
  if (cfg.bilinear) {
    std::vector<int> head_rows, dep_rows;
    for (const auto& [h, d] : hd) {
      head_rows.push_back(h);
      dep_rows.push_back(d);
    }
    auto hh = tape.gather_rows(encoded, std::move(head_rows));
    auto hd_rows = tape.gather_rows(encoded, std::move(dep_rows));
    auto scores = tape.rowwise_dot(tape.matmul(hh, P("arc_bilinear.u")), hd_rows);
    return tape.add_row_broadcast(scores, P("arc_bilinear.bias"));
  }
  auto z = tape.pair_rows(encoded, std::move(hd));
  for (int l = 0; l < cfg.mlp_layers; ++l) {
    const std::string p = "arc_mlp." + std::to_string(l) + ".";
    z = linear(tape, z, P(p + "weight"), P(p + "bias"));
    if (l + 1 < cfg.mlp_layers) z = tape.dropout(tape.gelu(z), cfg.dropout, rng);
  }
  return z;
}

Eigen::MatrixXd assemble_scores(int length, const std::vector<std::pair<int, int>>& pairs,
                                const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(length, length + 1,
                                                -std::numeric_limits<double>::infinity());
  for (int p = 0; p < static_cast<int>(pairs.size()); ++p)
    s(pairs[p].first, pairs[p].second) = logits(p, 0);
  return s;
}

Eigen::MatrixXd score_matrix(const FeatureMatrix& x, const PotentialArcMask& mask,
                             const ModelParams& params, const ModelConfig& cfg) {
  nn::Tape tape;
  ParamBinding bound(tape, params);
  auto embedded = embed_features(tape, x, bound, cfg);
  auto encoded = encode_sequence(tape, embedded, bound, cfg, nullptr);
  const auto pairs = mask.pairs();
  auto logits = score_pairs(tape, encoded, pairs, bound, cfg, nullptr);
  return assemble_scores(mask.length(), pairs, tape.value(logits));
}

}  // namespace musictree
