#include "surf/dataset.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace surf {

LabelSet::LabelSet(int num_labels) : num_labels_(num_labels) {
  if (num_labels < 2) {
    throw std::invalid_argument("label set needs at least 2 labels, got " +
                                std::to_string(num_labels));
  }
}

ConfusionMatrix::ConfusionMatrix(int num_labels, std::vector<double> row_major_entries)
    : num_labels_(num_labels), entries_(std::move(row_major_entries)) {
  if (num_labels < 2) {
    throw std::invalid_argument("confusion matrix needs at least 2 labels");
  }
  if (entries_.size() != static_cast<std::size_t>(num_labels) * num_labels) {
    throw std::invalid_argument("confusion matrix entry count does not match label count");
  }
  constexpr double kRowSumTol = 1e-9;
  for (int t = 0; t < num_labels; ++t) {
    double sum = 0.0;
    for (int r = 0; r < num_labels; ++r) {
      double v = entries_[static_cast<std::size_t>(t) * num_labels + r];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("confusion matrix entry out of [0,1] at row " +
                                    std::to_string(t) + " col " + std::to_string(r));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw std::invalid_argument("confusion matrix row " + std::to_string(t) +
                                  " sums to " + std::to_string(sum));
    }
  }
}

ConfusionMatrix ConfusionMatrix::identity(int num_labels) {
  std::vector<double> e(static_cast<std::size_t>(num_labels) * num_labels, 0.0);
  for (int t = 0; t < num_labels; ++t) {
    e[static_cast<std::size_t>(t) * num_labels + t] = 1.0;
  }
  return ConfusionMatrix(num_labels, std::move(e));
}

FeedbackDataset::FeedbackDataset(LabelSet label_set, std::size_t num_items,
                                 int num_users, std::vector<Label> classifier_labels,
                                 std::vector<FeedbackTriplet> user_labels,
                                 std::optional<std::vector<Label>> ground_truth)
    : label_set_(label_set),
      num_items_(num_items),
      num_users_(num_users),
      classifier_labels_(std::move(classifier_labels)),
      ground_truth_(std::move(ground_truth)) {
  if (num_items_ == 0) throw std::invalid_argument("dataset needs at least one item");
  if (num_users_ < 1) throw std::invalid_argument("dataset needs at least one user");

  for (const auto& t : user_labels) {
    if (t.user < 1 || t.user > num_users_) {
      throw std::invalid_argument("feedback user index " + std::to_string(t.user) +
                                  " outside 1.." + std::to_string(num_users_));
    }
    if (t.item < 0 || static_cast<std::size_t>(t.item) >= num_items_) {
      throw std::invalid_argument("feedback item index " + std::to_string(t.item) +
                                  " outside 0.." + std::to_string(num_items_ - 1));
    }
  }
  std::sort(user_labels.begin(), user_labels.end(), [](const auto& a, const auto& b) {
    return a.item != b.item ? a.item < b.item : a.user < b.user;
  });
  for (std::size_t j = 1; j < user_labels.size(); ++j) {
    if (user_labels[j].item == user_labels[j - 1].item &&
        user_labels[j].user == user_labels[j - 1].user) {
      throw std::invalid_argument("duplicate feedback for user " +
                                  std::to_string(user_labels[j].user) + " on item " +
                                  std::to_string(user_labels[j].item));
    }
  }

  by_item_.reserve(user_labels.size());
  item_offsets_.assign(num_items_ + 1, 0);
  for (const auto& t : user_labels) {
    by_item_.push_back({t.user, t.label});
    ++item_offsets_[static_cast<std::size_t>(t.item) + 1];
  }
  for (std::size_t i = 1; i <= num_items_; ++i) item_offsets_[i] += item_offsets_[i - 1];

  std::sort(user_labels.begin(), user_labels.end(), [](const auto& a, const auto& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  by_user_.reserve(user_labels.size());
  user_offsets_.assign(static_cast<std::size_t>(num_users_) + 1, 0);
  for (const auto& t : user_labels) {
    by_user_.push_back({t.item, t.label});
    ++user_offsets_[static_cast<std::size_t>(t.user)];  // offset slot k counts user k
  }
  for (std::size_t k = 1; k <= static_cast<std::size_t>(num_users_); ++k) {
    user_offsets_[k] += user_offsets_[k - 1];
  }
}

std::vector<Violation> validate_dataset(const FeedbackDataset& ds) {
  std::vector<Violation> out;
  const int L = ds.label_set().num_labels();
  const std::size_t n = ds.num_items();

  if (ds.classifier_labels().size() != n) {
    out.push_back({-1, 0, "classifier must label every item (got " +
                              std::to_string(ds.classifier_labels().size()) +
                              " labels for " + std::to_string(n) + " items)"});
  }
  const std::size_t n_clf = std::min(ds.classifier_labels().size(), n);
  for (std::size_t i = 0; i < n_clf; ++i) {
    Label l = ds.classifier_labels()[i];
    if (l < 0 || l >= L) {
      out.push_back({static_cast<std::int64_t>(i), 0,
                     "classifier label " + std::to_string(l) + " out of range"});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& v : ds.votes_on_item(i)) {
      if (v.label < 0 || v.label >= L) {
        out.push_back({static_cast<std::int64_t>(i), v.user,
                       "label " + std::to_string(v.label) + " out of range"});
      }
    }
  }
  if (ds.has_ground_truth()) {
    if (ds.ground_truth().size() != n) {
      out.push_back({-1, -1, "ground truth must cover every item"});
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        Label l = ds.ground_truth()[i];
        if (l < 0 || l >= L) {
          out.push_back({static_cast<std::int64_t>(i), -1,
                         "ground-truth label " + std::to_string(l) + " out of range"});
        }
      }
    }
  }
  return out;
}

void require_valid(const FeedbackDataset& ds) {
  auto violations = validate_dataset(ds);
  if (violations.empty()) return;
  std::string msg = "invalid dataset:";
  std::size_t shown = 0;
  for (const auto& v : violations) {
    msg += " [item " + std::to_string(v.item) + ", user " + std::to_string(v.user) +
           ": " + v.reason + "]";
    if (++shown == 5) {
      msg += " (+" + std::to_string(violations.size() - shown) + " more)";
      break;
    }
  }
  throw std::invalid_argument(msg);
}

double accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("accuracy: length mismatch (" +
                                std::to_string(predicted.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("accuracy: empty label arrays");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace surf
