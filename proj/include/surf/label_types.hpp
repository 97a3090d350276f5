#pragma once

#include <cstdint>
#include <vector>

namespace surf {

using Label = std::int32_t;

/// The finite label alphabet {0, ..., num_labels-1}.
class LabelSet {
 public:
  explicit LabelSet(int num_labels);

  int num_labels() const { return num_labels_; }
  bool contains(Label l) const { return l >= 0 && l < num_labels_; }

 private:
  int num_labels_;
};

/// Row-stochastic matrix of per-agent confusion probabilities,
/// entries[t][r] = p(reported = r | true = t). Rows must sum to 1; the
/// busyness-adjusted matrices used at inference time intentionally do not and
/// live in a separate type (AdjustedConfusion).
class ConfusionMatrix {
 public:
  ConfusionMatrix(int num_labels, std::vector<double> row_major_entries);

  static ConfusionMatrix identity(int num_labels);

  int num_labels() const { return num_labels_; }
  double at(Label true_label, Label reported) const {
    return entries_[static_cast<std::size_t>(true_label) * num_labels_ + reported];
  }
  const std::vector<double>& entries() const { return entries_; }

 private:
  int num_labels_;
  std::vector<double> entries_;
};

}  // namespace surf
