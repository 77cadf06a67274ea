// The four evaluation metrics: head, arc, span and node accuracy, all
// excluding rest positions.

#ifndef MUSICTREE_METRICS_HPP
#define MUSICTREE_METRICS_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "musictree/trees.hpp"

namespace musictree {

struct LengthMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fraction of non-rest positions whose head entries agree (kRoot counts as
// a class). Accepts raw head sequences, so invalid greedy output can be
// scored too.
double head_accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

// |pred arcs & gold arcs| / |gold arcs| over directed (dep, head) arcs
// between elements; root and rest entries contribute no arc.
double arc_accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

// |pred spans & gold spans| / |gold spans|; spans ignore primary flags.
double span_accuracy(const ConstituentTree& pred, const ConstituentTree& gold);

// Per element, the signature is (head entry, sorted dependent list); the
// score is the fraction of non-rest elements with matching signatures.
double node_accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

struct MetricReport {
  double head = 0.0;
  double arc = 0.0;
  std::optional<double> span;  // absent when a tree has no constituent form
  double node = 0.0;
};

// Unweighted mean over pieces; the span mean covers only pieces where both
// trees had constituent forms.
MetricReport average_reports(const std::vector<MetricReport>& reports);

}  // namespace musictree

#endif  // MUSICTREE_METRICS_HPP
