#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "surf/dataset.hpp"
#include "surf/result.hpp"

namespace surf {

enum class EmMode { soft, hard };
enum class AdjustMode { literal, renormalized };

/// Busyness-conditioned view of a user's confusion matrix: when the reported
/// label matches the classifier's, part of the probability mass is explained
/// by the user echoing the classifier. Rows of the literal view sum to more
/// than 1 on purpose; the renormalized view scales the non-echo entries back.
struct AdjustedConfusion {
  const ConfusionMatrix* base;
  double busyness;
  AdjustMode mode;

  double at(Label true_label, Label reported, Label classifier_reported) const {
    const double p = base->at(true_label, reported);
    if (reported == classifier_reported) return busyness + (1.0 - busyness) * p;
    return mode == AdjustMode::literal ? p : (1.0 - busyness) * p;
  }
};

/// Log likelihood of busyness `eps` given the agree/disagree evidence:
/// sum over agreement items of log(eps + (1-eps) p_i) plus
/// num_disagreements * log(1-eps). The (1-p_i) factors of disagreement terms
/// are constant in eps and omitted. Agreement terms are evaluated as
/// log1p(-(1-eps)(1-p_i)) so a p_i of exactly 1 contributes exactly 0 for
/// every eps. Returns -inf at eps = 1 with disagreements present.
double busyness_log_likelihood(double eps, std::span<const double> agree_probs,
                               std::int64_t num_disagreements);

/// Precomputed log-domain tables for one posterior pass. Layout is row-major
/// [agent][true][reported] with agent 0 the classifier; `agree` holds
/// log(eps_k + (1-eps_k) pi[l][m']) per user and is empty for plain DS. In
/// renormalized mode the users' log_conf slices already carry log(1-eps_k).
struct LogTables {
  int num_labels = 0;
  std::vector<double> log_conf;  // (K+1) * L * L
  std::vector<double> agree;     // K * L * L, SURF only
};

LogTables build_ds_tables(std::span<const ConfusionMatrix> confusions);
LogTables build_surf_tables(std::span<const ConfusionMatrix> confusions,
                            std::span<const double> busyness, AdjustMode mode);

namespace kernels {

// Serial reference implementations. The omp variants below are required to
// produce bit-identical output for every thread count; tests enforce that.
namespace serial {

void vote_histogram(const FeedbackDataset& ds, bool include_classifier,
                    PosteriorTable& out);

/// Raw count statistics for every agent's confusion matrix, layout
/// [agent][true][reported]. `hard_labels` non-null selects hard-mode counts.
/// Smoothing is applied at normalization time.
void confusion_counts(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                      const Label* hard_labels, std::span<double> out);

void prior_stats(const PosteriorTable& posteriors, const Label* hard_labels,
                 double alpha, std::span<double> out);

/// Posterior pass: row i proportional to
/// q_l * pi0[l][clf_i] * prod_votes pi_k[l][label]. Log domain with
/// max-subtraction. Throws std::domain_error naming the first item whose
/// scores are all zero (possible only with alpha = 0).
void ds_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                       std::span<const double> log_prior, PosteriorTable& out);

/// Busyness-adjusted pass: the classifier factor stays pi0[l][clf_i]; user
/// votes that echo the classifier label use the agree table.
void surf_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                         std::span<const double> log_prior, PosteriorTable& out);

/// Per-user busyness MLE via golden-section search on [0, 1-clamp_delta] to
/// bracket width 1e-8. An agreement item's evidence value is the predicted
/// probability that the user, if engaged, reproduces the classifier label:
/// dot(posterior row, predictors[k-1] column clf_i). Users with no feedback
/// get 0.
void busyness_update(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                     std::span<const ConfusionMatrix> predictors, double clamp_delta,
                     std::span<double> out_eps);

}  // namespace serial

namespace omp {

void vote_histogram(const FeedbackDataset& ds, bool include_classifier,
                    PosteriorTable& out, int num_threads);
void confusion_counts(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                      const Label* hard_labels, std::span<double> out, int num_threads);
void prior_stats(const PosteriorTable& posteriors, const Label* hard_labels,
                 double alpha, std::span<double> out);
void ds_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                       std::span<const double> log_prior, PosteriorTable& out,
                       int num_threads);
void surf_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                         std::span<const double> log_prior, PosteriorTable& out,
                         int num_threads);
void busyness_update(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                     std::span<const ConfusionMatrix> predictors, double clamp_delta,
                     std::span<double> out_eps, int num_threads);

}  // namespace omp

/// Golden-section busyness MLE for one user's evidence; shared by both kernel
/// variants and the public estimate_busyness op.
double maximize_busyness_likelihood(std::span<const double> agree_probs,
                                    std::int64_t num_disagreements, double clamp_delta);

}  // namespace kernels

}  // namespace surf
