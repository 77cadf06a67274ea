#include "musictree/metrics.hpp"

#include <algorithm>
#include <set>

namespace musictree {

namespace {

void require_comparable(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size())
    throw LengthMismatchError("sequences have lengths " + std::to_string(pred.size()) +
                              " and " + std::to_string(gold.size()));
  for (size_t i = 0; i < pred.size(); ++i)
    if ((pred[i] == kNone) != (gold[i] == kNone))
      throw LengthMismatchError("rest positions disagree at index " + std::to_string(i));
}

}  // namespace

double head_accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  require_comparable(pred, gold);
  int match = 0, total = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == kNone) continue;
    ++total;
    if (pred[i] == gold[i]) ++match;
  }
  return total == 0 ? 1.0 : static_cast<double>(match) / total;
}

double arc_accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  require_comparable(pred, gold);
  int match = 0, gold_arcs = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == kNone || gold[i] == kRoot) continue;
    ++gold_arcs;
    if (pred[i] == gold[i]) ++match;
  }
  return gold_arcs == 0 ? 1.0 : static_cast<double>(match) / gold_arcs;
}

double span_accuracy(const ConstituentTree& pred, const ConstituentTree& gold) {
  if (pred.leaf_count() != gold.leaf_count())
    throw LengthMismatchError("trees have " + std::to_string(pred.leaf_count()) + " and " +
                              std::to_string(gold.leaf_count()) + " leaves");
  const auto ps = constituent_spans(pred);
  const auto gs = constituent_spans(gold);
  if (gs.empty()) return 1.0;
  int match = 0;
  for (const auto& s : ps)
    if (gs.count(s)) ++match;
  return static_cast<double>(match) / static_cast<double>(gs.size());
}

double node_accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  require_comparable(pred, gold);
  const int n = static_cast<int>(gold.size());
  auto dependents = [n](const std::vector<int>& heads, int i) {
    std::vector<int> deps;
    for (int j = 0; j < n; ++j)
      if (heads[j] == i) deps.push_back(j);
    return deps;
  };
  int match = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    if (gold[i] == kNone) continue;
    ++total;
    if (pred[i] == gold[i] && dependents(pred, i) == dependents(gold, i)) ++match;
  }
  return total == 0 ? 1.0 : static_cast<double>(match) / total;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
  MetricReport mean;
  if (reports.empty()) return mean;
  double span_sum = 0.0;
  int span_count = 0;
  for (const auto& r : reports) {
    mean.head += r.head;
    mean.arc += r.arc;
    mean.node += r.node;
    if (r.span) {
      span_sum += *r.span;
      ++span_count;
    }
  }
  mean.head /= reports.size();
  mean.arc /= reports.size();
  mean.node /= reports.size();
  if (span_count > 0) mean.span = span_sum / span_count;
  return mean;
}

}  // namespace musictree
