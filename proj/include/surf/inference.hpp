#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "surf/dataset.hpp"
#include "surf/em_kernels.hpp"
#include "surf/result.hpp"

namespace surf {

/// Source of the per-item agree-probability p_i used as busyness evidence.
/// user_model predicts what the user would report if engaged (posterior row
/// dotted with the user's empirical confusion column); classifier_belief is
/// the posterior probability that the classifier's label is correct. The
/// user_model evidence recovers busyness to within ~0.05 on the simulation
/// grid; classifier_belief underestimates it badly once users are noisy,
/// because engaged-but-wrong votes are indistinguishable from busy echoes
/// under that reading.
enum class AcceptanceProb { user_model, classifier_belief };

struct EmOptions {
  int max_iterations = 100;
  double convergence_tolerance = 1e-6;  // on max absolute posterior change
  double smoothing_alpha = 0.01;        // added to every confusion/prior count
  EmMode em_mode = EmMode::hard;
  AdjustMode surf_adjustment_mode = AdjustMode::literal;
  AcceptanceProb acceptance_prob = AcceptanceProb::user_model;
  double epsilon_clamp = 1e-6;  // busyness estimates live in [0, 1-clamp]
  int num_threads = 1;

  /// Diagnostic hook: freeze every user's busyness at this value and skip
  /// re-estimation. With 0 the SURF loop reduces exactly to Dawid-Skene.
  std::optional<double> fixed_busyness;

  void validate() const;  // throws std::invalid_argument
};

struct EmIterationStats {
  int iteration = 0;
  double max_posterior_delta = 0.0;
  double max_row_sum_error = 0.0;
  // log q[y^] + sum of log pi[y^][reported] over agents, evaluated at the
  // iteration's hard labels with its raw (unadjusted) parameter estimates.
  double complete_data_log_posterior = 0.0;
};

struct EmTrace {
  bool capture_posteriors = false;
  std::vector<EmIterationStats> stats;
  std::vector<PosteriorTable> posteriors;
};

enum class Model { mv, ds, surf };
std::string_view to_string(Model m);
std::optional<Model> model_from_string(std::string_view s);

/// Modal label per item over the classifier vote (optional) plus user votes,
/// ties to the lowest label. Posterior rows are the normalized vote
/// histograms; the reported prior is uniform and no confusions are estimated.
InferenceResult majority_vote(const FeedbackDataset& ds, bool include_classifier = true,
                              int num_threads = 1);

/// M-step confusion estimate for agents 0..K: smoothed co-counts of
/// (estimated true label, reported label), each true-label row normalized
/// over reported labels. Soft mode weights by the posterior, hard mode by
/// the argmax labels.
std::vector<ConfusionMatrix> ds_confusion_update(const FeedbackDataset& ds,
                                                 const PosteriorTable& posteriors,
                                                 const EmOptions& options);

/// M-step class prior: smoothed posterior column sums (soft) or hard-label
/// frequencies (hard), normalized.
std::vector<double> ds_prior_update(const PosteriorTable& posteriors,
                                    const EmOptions& options);

/// E-step posterior: row i proportional to q_l times the product of every
/// observing agent's confusion likelihood. Log domain with max-subtraction.
PosteriorTable ds_posterior(const FeedbackDataset& ds,
                            std::span<const ConfusionMatrix> confusions,
                            std::span<const double> class_prior, int num_threads = 1);

/// Busyness-aware E-step: user votes that echo the classifier label go
/// through the AdjustedConfusion view instead of the raw confusion matrix.
PosteriorTable surf_adjusted_posterior(const FeedbackDataset& ds,
                                       std::span<const ConfusionMatrix> confusions,
                                       std::span<const double> busyness,
                                       std::span<const double> class_prior,
                                       const EmOptions& options);

/// MLE of one user's busyness given current posteriors: golden-section
/// maximization of busyness_log_likelihood over [0, 1-epsilon_clamp]. Each
/// item the user agreed with the classifier on contributes the predicted
/// engaged-agreement probability dot(posterior row, predictor column clf_i);
/// passing the identity as predictor reduces that to the posterior
/// probability that the classifier is right. Throws if the user has no
/// feedback.
double estimate_busyness(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                         const ConfusionMatrix& predictor, int user,
                         const EmOptions& options);

InferenceResult dawid_skene(const FeedbackDataset& ds, const EmOptions& options = {},
                            EmTrace* trace = nullptr);

/// Dawid-Skene extended with per-user busyness: echo votes are discounted via
/// the adjusted confusion view and busyness is re-estimated every iteration.
InferenceResult surf(const FeedbackDataset& ds, const EmOptions& options = {},
                     EmTrace* trace = nullptr);

InferenceResult run_model(const FeedbackDataset& ds, Model model,
                          const EmOptions& options = {});

}  // namespace surf
