#include "musictree/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace musictree::nn {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Tape::Var Tape::push(Mat value, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::leaf(Mat value) { return push(std::move(value)); }

void Tape::backward(Var root) {
  if (nodes_.at(root.id).value.size() != 1)
    throw std::logic_error("backward requires a scalar root");
  for (auto& n : nodes_) n.grad.setZero();
  nodes_[root.id].grad(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i)
    if (nodes_[i].backprop && nodes_[i].grad.cwiseAbs().sum() != 0.0) nodes_[i].backprop();
}

Tape::Var Tape::add(Var a, Var b) {
  Var out = push(value(a) + value(b));
  nodes_[out.id].backprop = [this, a, b, out] {
    grad_ref(a) += grad(out);
    grad_ref(b) += grad(out);
  };
  return out;
}

Tape::Var Tape::scale(Var a, double s) {
  Var out = push(value(a) * s);
  nodes_[out.id].backprop = [this, a, s, out] { grad_ref(a) += grad(out) * s; };
  return out;
}

Tape::Var Tape::add_row_broadcast(Var x, Var row) {
  Mat v = value(x);
  v.rowwise() += value(row).row(0);
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, x, row, out] {
    grad_ref(x) += grad(out);
    grad_ref(row).row(0) += grad(out).colwise().sum();
  };
  return out;
}

Tape::Var Tape::matmul(Var a, Var b) {
  Var out = push(value(a) * value(b));
  nodes_[out.id].backprop = [this, a, b, out] {
    grad_ref(a) += grad(out) * value(b).transpose();
    grad_ref(b) += value(a).transpose() * grad(out);
  };
  return out;
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  Var out = push(value(a) * value(b).transpose());
  nodes_[out.id].backprop = [this, a, b, out] {
    grad_ref(a) += grad(out) * value(b);
    grad_ref(b) += grad(out).transpose() * value(a);
  };
  return out;
}

Tape::Var Tape::gather_rows(Var table, std::vector<int> rows) {
  Mat v(static_cast<int>(rows.size()), value(table).cols());
  for (int i = 0; i < v.rows(); ++i) v.row(i) = value(table).row(rows[i]);
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, table, rows = std::move(rows), out] {
    for (int i = 0; i < static_cast<int>(rows.size()); ++i)
      grad_ref(table).row(rows[i]) += grad(out).row(i);
  };
  return out;
}

Tape::Var Tape::concat_rows(Var a, Var b) {
  Mat v(value(a).rows() + value(b).rows(), value(a).cols());
  v.topRows(value(a).rows()) = value(a);
  v.bottomRows(value(b).rows()) = value(b);
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, a, b, out] {
    grad_ref(a) += grad(out).topRows(value(a).rows());
    grad_ref(b) += grad(out).bottomRows(value(b).rows());
  };
  return out;
}

Tape::Var Tape::slice_cols(Var x, int begin, int count) {
  Var out = push(value(x).middleCols(begin, count));
  nodes_[out.id].backprop = [this, x, begin, count, out] {
    grad_ref(x).middleCols(begin, count) += grad(out);
  };
  return out;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& xs) {
  int cols = 0;
  for (Var x : xs) cols += static_cast<int>(value(x).cols());
  Mat v(value(xs.front()).rows(), cols);
  int at = 0;
  for (Var x : xs) {
    v.middleCols(at, value(x).cols()) = value(x);
    at += static_cast<int>(value(x).cols());
  }
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, xs, out] {
    int at2 = 0;
    for (Var x : xs) {
      const int c = static_cast<int>(value(x).cols());
      grad_ref(x) += grad(out).middleCols(at2, c);
      at2 += c;
    }
  };
  return out;
}

Tape::Var Tape::rowwise_dot(Var a, Var b) {
  Mat v = (value(a).array() * value(b).array()).rowwise().sum();
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, a, b, out] {
    grad_ref(a) += grad(out).col(0).asDiagonal() * value(b);
    grad_ref(b) += grad(out).col(0).asDiagonal() * value(a);
  };
  return out;
}

Tape::Var Tape::gelu(Var x) {
  const Mat& xv = value(x);
  Mat v = xv.unaryExpr([](double t) { return 0.5 * t * (1.0 + std::erf(t * kInvSqrt2)); });
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, x, out] {
    const Mat& xv2 = value(x);
    Mat d = xv2.unaryExpr([](double t) {
      const double cdf = 0.5 * (1.0 + std::erf(t * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * t * t);
      return cdf + t * pdf;
    });
    grad_ref(x) += (grad(out).array() * d.array()).matrix();
  };
  return out;
}

Tape::Var Tape::softmax_rows(Var x) {
  Mat v = value(x);
  for (int r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, x, out] {
    const Mat& p = value(out);
    const Mat& g = grad(out);
    for (int r = 0; r < p.rows(); ++r) {
      const double dot = g.row(r).cwiseProduct(p.row(r)).sum();
      grad_ref(x).row(r) += (g.row(r).array() - dot).matrix().cwiseProduct(p.row(r));
    }
  };
  return out;
}

Tape::Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Mat& xv = value(x);
  const int n = static_cast<int>(xv.rows());
  const int d = static_cast<int>(xv.cols());
  Mat xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (int r = 0; r < n; ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Mat v = xhat.array().rowwise() * value(gain).row(0).array();
  v.rowwise() += value(bias).row(0);
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, x, gain, bias, out, xhat, inv_std] {
    const Mat& g = grad(out);
    const int d2 = static_cast<int>(xhat.cols());
    grad_ref(gain).row(0) += (g.array() * xhat.array()).colwise().sum().matrix();
    grad_ref(bias).row(0) += g.colwise().sum();
    for (int r = 0; r < xhat.rows(); ++r) {
      // dxhat = g * gain; dx via the standard layernorm backward.
      Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(value(gain).row(0));
      const double m1 = dxhat.mean();
      const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
      grad_ref(x).row(r) +=
          ((dxhat.array() - m1 - xhat.row(r).array() * m2) * inv_std(r)).matrix();
    }
  };
  return out;
}

Tape::Var Tape::dropout(Var x, double p, std::mt19937_64* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  Mat mask(value(x).rows(), value(x).cols());
  const double scale = 1.0 / (1.0 - p);
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) mask(r, c) = keep(*rng) ? scale : 0.0;
  Var out = push(value(x).cwiseProduct(mask));
  nodes_[out.id].backprop = [this, x, out, mask] { grad_ref(x) += grad(out).cwiseProduct(mask); };
  return out;
}

namespace {

inline int clip_offset(int delta, int clip_dist) {
  if (delta < -clip_dist) delta = -clip_dist;
  if (delta > clip_dist) delta = clip_dist;
  return delta + clip_dist;
}

}  // namespace

Tape::Var Tape::relative_scores(Var q, Var rel, int clip_dist) {
  const Mat& qv = value(q);
  const Mat& rv = value(rel);
  const int n = static_cast<int>(qv.rows());
  Mat v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = qv.row(i).dot(rv.row(clip_offset(j - i, clip_dist)));
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, q, rel, clip_dist, out, n] {
    const Mat& g = grad(out);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int m = clip_offset(j - i, clip_dist);
        grad_ref(q).row(i) += g(i, j) * value(rel).row(m);
        grad_ref(rel).row(m) += g(i, j) * value(q).row(i);
      }
    }
  };
  return out;
}

Tape::Var Tape::relative_values(Var p, Var rel, int clip_dist) {
  const Mat& pv = value(p);
  const Mat& rv = value(rel);
  const int n = static_cast<int>(pv.rows());
  Mat v = Mat::Zero(n, rv.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v.row(i) += pv(i, j) * rv.row(clip_offset(j - i, clip_dist));
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, p, rel, clip_dist, out, n] {
    const Mat& g = grad(out);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int m = clip_offset(j - i, clip_dist);
        grad_ref(p)(i, j) += g.row(i).dot(value(rel).row(m));
        grad_ref(rel).row(m) += value(p)(i, j) * g.row(i);
      }
    }
  };
  return out;
}

Tape::Var Tape::pair_rows(Var h, std::vector<std::pair<int, int>> pairs) {
  const Mat& hv = value(h);
  const int d = static_cast<int>(hv.cols());
  Mat v(static_cast<int>(pairs.size()), 2 * d);
  for (int p = 0; p < v.rows(); ++p) {
    v.block(p, 0, 1, d) = hv.row(pairs[p].first);
    v.block(p, d, 1, d) = hv.row(pairs[p].second);
  }
  Var out = push(std::move(v));
  nodes_[out.id].backprop = [this, h, pairs = std::move(pairs), out, d] {
    const Mat& g = grad(out);
    for (int p = 0; p < g.rows(); ++p) {
      grad_ref(h).row(pairs[p].first) += g.block(p, 0, 1, d);
      grad_ref(h).row(pairs[p].second) += g.block(p, d, 1, d);
    }
  };
  return out;
}

Tape::Var Tape::mean_bce_with_logits(Var logits, std::vector<double> targets) {
  const Mat& s = value(logits);
  const int m = static_cast<int>(s.rows());
  if (m != static_cast<int>(targets.size()))
    throw std::logic_error("bce: logits/targets size mismatch");
  double total = 0.0;
  for (int p = 0; p < m; ++p) {
    const double x = s(p, 0);
    // max(x,0) - x*y + log1p(exp(-|x|)): stable BCE-with-logits.
    total += std::max(x, 0.0) - x * targets[p] + std::log1p(std::exp(-std::abs(x)));
  }
  Var out = push(Mat::Constant(1, 1, total / m));
  nodes_[out.id].backprop = [this, logits, targets = std::move(targets), out, m] {
    const double g = grad(out)(0, 0) / m;
    for (int p = 0; p < m; ++p) {
      const double sig = 1.0 / (1.0 + std::exp(-value(logits)(p, 0)));
      grad_ref(logits)(p, 0) += g * (sig - targets[p]);
    }
  };
  return out;
}

Tape::Var Tape::grouped_cross_entropy(Var logits, std::vector<int> row_of,
                                      std::vector<int> gold_entry, int n_rows) {
  const Mat& s = value(logits);
  const int m = static_cast<int>(s.rows());
  if (m != static_cast<int>(row_of.size()))
    throw std::logic_error("ce: logits/row_of size mismatch");
  if (n_rows != static_cast<int>(gold_entry.size()))
    throw std::logic_error("ce: gold_entry must have one entry per row");
  std::vector<double> row_max(n_rows, -std::numeric_limits<double>::infinity());
  for (int p = 0; p < m; ++p) row_max[row_of[p]] = std::max(row_max[row_of[p]], s(p, 0));
  std::vector<double> row_sum(n_rows, 0.0);
  for (int p = 0; p < m; ++p) row_sum[row_of[p]] += std::exp(s(p, 0) - row_max[row_of[p]]);
  double total = 0.0;
  for (int r = 0; r < n_rows; ++r) {
    const double lse = row_max[r] + std::log(row_sum[r]);
    total += lse - s(gold_entry[r], 0);
  }
  Var out = push(Mat::Constant(1, 1, total / n_rows));
  nodes_[out.id].backprop = [this, logits, row_of = std::move(row_of),
                             gold_entry = std::move(gold_entry), out, m, n_rows, row_max,
                             row_sum] {
    const double g = grad(out)(0, 0) / n_rows;
    for (int p = 0; p < m; ++p) {
      const int r = row_of[p];
      const double soft = std::exp(value(logits)(p, 0) - row_max[r]) / row_sum[r];
      grad_ref(logits)(p, 0) += g * soft;
    }
    for (int r = 0; r < n_rows; ++r) grad_ref(logits)(gold_entry[r], 0) -= g;
  };
  return out;
}

}  // namespace musictree::nn
