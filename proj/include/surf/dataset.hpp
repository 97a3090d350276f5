#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surf/label_types.hpp"

namespace surf {

/// One sparse feedback label: user k labeled item i with `label`.
struct FeedbackTriplet {
  std::int32_t user;  // 1..K
  std::int32_t item;  // 0..N-1
  Label label;
};

/// A user's vote on one item, as seen from the item side.
struct ItemVote {
  std::int32_t user;
  Label label;
};

/// A user's vote on one item, as seen from the user side.
struct UserVote {
  std::int32_t item;
  Label label;
};

/// Immutable container for one feedback round: the classifier's label for
/// every item, sparse user labels, and (for simulated data) ground truth.
/// Construction enforces only what indexing safety needs: user/item indices
/// in range and no duplicate (user, item) pairs. Value-level invariants
/// (label ranges, classifier covering every item) are checked by
/// validate_dataset so that malformed external files can be loaded, diagnosed
/// and reported rather than crashing.
class FeedbackDataset {
 public:
  FeedbackDataset(LabelSet label_set, std::size_t num_items, int num_users,
                  std::vector<Label> classifier_labels,
                  std::vector<FeedbackTriplet> user_labels,
                  std::optional<std::vector<Label>> ground_truth);

  const LabelSet& label_set() const { return label_set_; }
  std::size_t num_items() const { return num_items_; }
  int num_users() const { return num_users_; }
  std::size_t num_feedback() const { return by_item_.size(); }

  std::span<const Label> classifier_labels() const { return classifier_labels_; }

  /// Votes on item i, ascending user index.
  std::span<const ItemVote> votes_on_item(std::size_t i) const {
    return {by_item_.data() + item_offsets_[i],
            by_item_.data() + item_offsets_[i + 1]};
  }

  /// Votes from user k (1..K), ascending item index.
  std::span<const UserVote> votes_from_user(int k) const {
    return {by_user_.data() + user_offsets_[k - 1],
            by_user_.data() + user_offsets_[k]};
  }

  bool has_ground_truth() const { return ground_truth_.has_value(); }
  std::span<const Label> ground_truth() const { return *ground_truth_; }

 private:
  LabelSet label_set_;
  std::size_t num_items_;
  int num_users_;
  std::vector<Label> classifier_labels_;
  std::optional<std::vector<Label>> ground_truth_;

  // CSR views over the same sparse votes, one per traversal direction.
  std::vector<ItemVote> by_item_;
  std::vector<std::size_t> item_offsets_;  // num_items + 1
  std::vector<UserVote> by_user_;
  std::vector<std::size_t> user_offsets_;  // num_users + 1
};

struct Violation {
  std::int64_t item;  // -1 when not item-specific
  std::int32_t user;  // -1 when not user-specific
  std::string reason;
};

/// Checks every dataset invariant and returns the violations (empty = ok).
std::vector<Violation> validate_dataset(const FeedbackDataset& ds);

/// Throws std::invalid_argument listing the first violations, if any.
void require_valid(const FeedbackDataset& ds);

/// Fraction of positions where the two label arrays agree.
double accuracy(std::span<const Label> predicted, std::span<const Label> truth);

}  // namespace surf
