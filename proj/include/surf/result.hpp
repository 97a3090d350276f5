#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "surf/label_types.hpp"

namespace surf {

/// N rows of length L; row i is the estimated p(y_i = l | all labels).
class PosteriorTable {
 public:
  PosteriorTable(std::size_t num_items, int num_labels)
      : num_items_(num_items),
        num_labels_(num_labels),
        data_(num_items * static_cast<std::size_t>(num_labels), 0.0) {}

  std::size_t num_items() const { return num_items_; }
  int num_labels() const { return num_labels_; }

  std::span<double> row(std::size_t i) {
    return {data_.data() + i * num_labels_, static_cast<std::size_t>(num_labels_)};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * num_labels_, static_cast<std::size_t>(num_labels_)};
  }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Largest |row sum - 1| over all rows.
  double max_row_sum_error() const;

 private:
  std::size_t num_items_;
  int num_labels_;
  std::vector<double> data_;
};

/// Argmax with ties resolved to the lowest label index.
Label argmax_lowest(std::span<const double> row);

struct InferenceResult {
  PosteriorTable posteriors;
  std::vector<Label> hard_labels;
  std::vector<double> class_prior;
  std::vector<ConfusionMatrix> confusions;  // agents 0..K; empty for majority vote
  std::optional<std::vector<double>> busyness;  // per user 1..K; SURF only
  int iterations = 0;
  bool converged = false;
};

}  // namespace surf
