#include "surf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace surf {

void EmOptions::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(convergence_tolerance > 0.0)) {
    throw std::invalid_argument("convergence_tolerance must be > 0");
  }
  if (!(smoothing_alpha >= 0.0)) throw std::invalid_argument("smoothing_alpha must be >= 0");
  if (!(epsilon_clamp > 0.0 && epsilon_clamp < 1.0)) {
    throw std::invalid_argument("epsilon_clamp must be in (0,1)");
  }
  if (num_threads < 1) throw std::invalid_argument("num_threads must be >= 1");
  if (fixed_busyness && !(*fixed_busyness >= 0.0 && *fixed_busyness <= 1.0)) {
    throw std::invalid_argument("fixed_busyness must be in [0,1]");
  }
}

std::string_view to_string(Model m) {
  switch (m) {
    case Model::mv: return "mv";
    case Model::ds: return "ds";
    case Model::surf: return "surf";
  }
  return "?";
}

std::optional<Model> model_from_string(std::string_view s) {
  if (s == "mv") return Model::mv;
  if (s == "ds") return Model::ds;
  if (s == "surf") return Model::surf;
  return std::nullopt;
}

namespace {

std::vector<Label> hard_labels_of(const PosteriorTable& p) {
  std::vector<Label> out(p.num_items());
  for (std::size_t i = 0; i < p.num_items(); ++i) out[i] = argmax_lowest(p.row(i));
  return out;
}

void check_posteriors_shape(const FeedbackDataset& ds, const PosteriorTable& p) {
  if (p.num_items() != ds.num_items() || p.num_labels() != ds.label_set().num_labels()) {
    throw std::invalid_argument("posterior table shape does not match dataset");
  }
}

void check_confusions_shape(const FeedbackDataset& ds,
                            std::span<const ConfusionMatrix> confusions) {
  if (confusions.size() != static_cast<std::size_t>(ds.num_users()) + 1) {
    throw std::invalid_argument("need one confusion matrix per agent 0..K");
  }
  for (const auto& c : confusions) {
    if (c.num_labels() != ds.label_set().num_labels()) {
      throw std::invalid_argument("confusion matrix label count does not match dataset");
    }
  }
}

std::vector<ConfusionMatrix> normalize_counts(std::span<const double> counts, double alpha,
                                              int num_agents, int L) {
  std::vector<ConfusionMatrix> out;
  out.reserve(num_agents);
  const std::size_t cells = static_cast<std::size_t>(L) * L;
  for (int a = 0; a < num_agents; ++a) {
    std::vector<double> e(counts.begin() + a * cells, counts.begin() + (a + 1) * cells);
    for (int l = 0; l < L; ++l) {
      double sum = 0.0;
      for (int m = 0; m < L; ++m) sum += e[static_cast<std::size_t>(l) * L + m] + alpha;
      if (sum == 0.0) {
        throw std::runtime_error("degenerate confusion row " + std::to_string(l) +
                                 " for agent " + std::to_string(a) +
                                 " (no mass and smoothing_alpha = 0)");
      }
      for (int m = 0; m < L; ++m) {
        auto& cell = e[static_cast<std::size_t>(l) * L + m];
        cell = (cell + alpha) / sum;
      }
    }
    out.emplace_back(L, std::move(e));
  }
  return out;
}

/// Unsmoothed per-user empirical confusions for busyness evidence; rows with
/// no mass fall back to the smoothed estimate. Keeping smoothing out of the
/// predictor matters in the noiseless regime: the predicted agree-probability
/// is then exactly 1, the busyness likelihood stays exactly flat, and the
/// estimate resolves to 0 instead of drifting to the boundary.
std::vector<ConfusionMatrix> busyness_predictors(std::span<const double> counts,
                                                 std::span<const ConfusionMatrix> smoothed,
                                                 int num_users, int L) {
  std::vector<ConfusionMatrix> out;
  out.reserve(num_users);
  const std::size_t cells = static_cast<std::size_t>(L) * L;
  for (int k = 1; k <= num_users; ++k) {
    std::vector<double> e(counts.begin() + k * cells, counts.begin() + (k + 1) * cells);
    for (int l = 0; l < L; ++l) {
      double sum = 0.0;
      for (int m = 0; m < L; ++m) sum += e[static_cast<std::size_t>(l) * L + m];
      for (int m = 0; m < L; ++m) {
        auto& cell = e[static_cast<std::size_t>(l) * L + m];
        cell = sum > 0.0 ? cell / sum : smoothed[k].at(l, m);
      }
    }
    out.emplace_back(L, std::move(e));
  }
  return out;
}

std::vector<double> log_of(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = std::log(v[j]);
  return out;
}

double max_abs_delta(const PosteriorTable& a, const PosteriorTable& b) {
  double m = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t j = 0; j < da.size(); ++j) {
    m = std::max(m, std::abs(da[j] - db[j]));
  }
  return m;
}

double complete_data_log_posterior(const FeedbackDataset& ds,
                                   std::span<const ConfusionMatrix> confusions,
                                   std::span<const double> prior,
                                   std::span<const Label> hard) {
  double s = 0.0;
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    const Label l = hard[i];
    s += std::log(prior[l]);
    s += std::log(confusions[0].at(l, ds.classifier_labels()[i]));
    for (const auto& v : ds.votes_on_item(i)) {
      s += std::log(confusions[v.user].at(l, v.label));
    }
  }
  return s;
}

void record_iteration(EmTrace* trace, const FeedbackDataset& ds,
                      std::span<const ConfusionMatrix> confusions,
                      std::span<const double> prior, const PosteriorTable& posteriors,
                      int iteration, double delta) {
  if (!trace) return;
  EmIterationStats st;
  st.iteration = iteration;
  st.max_posterior_delta = delta;
  st.max_row_sum_error = posteriors.max_row_sum_error();
  st.complete_data_log_posterior =
      complete_data_log_posterior(ds, confusions, prior, hard_labels_of(posteriors));
  trace->stats.push_back(st);
  if (trace->capture_posteriors) trace->posteriors.push_back(posteriors);
}

// Agreement fraction over assigned items, with one carve-out: a user who
// never once disagreed gives no busy-vs-engaged identification, and seeding
// them at 1 mutes their votes in the first posterior pass, which traps the
// whole pool at the busy boundary in the noise-free regime. Such users (and
// voteless ones) start at 0, the least-busy explanation.
std::vector<double> initial_busyness(const FeedbackDataset& ds) {
  std::vector<double> eps(ds.num_users(), 0.0);
  for (int k = 1; k <= ds.num_users(); ++k) {
    const auto votes = ds.votes_from_user(k);
    if (votes.empty()) continue;
    std::size_t agreements = 0;
    for (const auto& v : votes) {
      if (v.label == ds.classifier_labels()[v.item]) ++agreements;
    }
    if (agreements < votes.size()) {
      eps[k - 1] = static_cast<double>(agreements) / static_cast<double>(votes.size());
    }
  }
  return eps;
}

}  // namespace

InferenceResult majority_vote(const FeedbackDataset& ds, bool include_classifier,
                              int num_threads) {
  require_valid(ds);
  const int L = ds.label_set().num_labels();
  PosteriorTable posteriors(ds.num_items(), L);
  kernels::omp::vote_histogram(ds, include_classifier, posteriors, num_threads);
  auto hard = hard_labels_of(posteriors);
  std::vector<double> prior(L, 1.0 / L);
  return {std::move(posteriors), std::move(hard), std::move(prior), {},
          std::nullopt, 0, true};
}

std::vector<ConfusionMatrix> ds_confusion_update(const FeedbackDataset& ds,
                                                 const PosteriorTable& posteriors,
                                                 const EmOptions& options) {
  options.validate();
  check_posteriors_shape(ds, posteriors);
  const int L = ds.label_set().num_labels();
  const int num_agents = ds.num_users() + 1;

  std::vector<Label> hard;
  const Label* hard_ptr = nullptr;
  if (options.em_mode == EmMode::hard) {
    hard = hard_labels_of(posteriors);
    hard_ptr = hard.data();
  }
  std::vector<double> counts(static_cast<std::size_t>(num_agents) * L * L);
  kernels::omp::confusion_counts(ds, posteriors, hard_ptr, counts, options.num_threads);
  return normalize_counts(counts, options.smoothing_alpha, num_agents, L);
}

std::vector<double> ds_prior_update(const PosteriorTable& posteriors,
                                    const EmOptions& options) {
  options.validate();
  const int L = posteriors.num_labels();
  std::vector<Label> hard;
  const Label* hard_ptr = nullptr;
  if (options.em_mode == EmMode::hard) {
    hard = hard_labels_of(posteriors);
    hard_ptr = hard.data();
  }
  std::vector<double> stats(L, 0.0);
  kernels::omp::prior_stats(posteriors, hard_ptr, options.smoothing_alpha, stats);
  double total = 0.0;
  for (double s : stats) total += s;
  for (auto& s : stats) s /= total;
  return stats;
}

PosteriorTable ds_posterior(const FeedbackDataset& ds,
                            std::span<const ConfusionMatrix> confusions,
                            std::span<const double> class_prior, int num_threads) {
  check_confusions_shape(ds, confusions);
  const LogTables tables = build_ds_tables(confusions);
  const std::vector<double> log_prior = log_of(class_prior);
  PosteriorTable out(ds.num_items(), ds.label_set().num_labels());
  kernels::omp::ds_posterior_pass(ds, tables, log_prior, out, num_threads);
  return out;
}

PosteriorTable surf_adjusted_posterior(const FeedbackDataset& ds,
                                       std::span<const ConfusionMatrix> confusions,
                                       std::span<const double> busyness,
                                       std::span<const double> class_prior,
                                       const EmOptions& options) {
  options.validate();
  check_confusions_shape(ds, confusions);
  if (busyness.size() != static_cast<std::size_t>(ds.num_users())) {
    throw std::invalid_argument("need one busyness value per user 1..K");
  }
  for (double e : busyness) {
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("busyness must be in [0,1]");
  }
  const LogTables tables =
      build_surf_tables(confusions, busyness, options.surf_adjustment_mode);
  const std::vector<double> log_prior = log_of(class_prior);
  PosteriorTable out(ds.num_items(), ds.label_set().num_labels());
  kernels::omp::surf_posterior_pass(ds, tables, log_prior, out, options.num_threads);
  return out;
}

double estimate_busyness(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                         const ConfusionMatrix& predictor, int user,
                         const EmOptions& options) {
  options.validate();
  check_posteriors_shape(ds, posteriors);
  const int L = ds.label_set().num_labels();
  if (predictor.num_labels() != L) {
    throw std::invalid_argument("predictor label count does not match dataset");
  }
  if (user < 1 || user > ds.num_users()) {
    throw std::invalid_argument("user index " + std::to_string(user) + " outside 1.." +
                                std::to_string(ds.num_users()));
  }
  if (ds.votes_from_user(user).empty()) {
    throw std::runtime_error("user " + std::to_string(user) + " has no feedback");
  }
  std::vector<double> agree_probs;
  std::int64_t dis = 0;
  for (const auto& v : ds.votes_from_user(user)) {
    const Label clf = ds.classifier_labels()[v.item];
    if (v.label == clf) {
      const auto row = posteriors.row(v.item);
      double p = 0.0;
      for (Label l = 0; l < L; ++l) p += row[l] * predictor.at(l, clf);
      if (p < 1.0) agree_probs.push_back(p);
    } else {
      ++dis;
    }
  }
  return kernels::maximize_busyness_likelihood(agree_probs, dis, options.epsilon_clamp);
}

InferenceResult dawid_skene(const FeedbackDataset& ds, const EmOptions& options,
                            EmTrace* trace) {
  options.validate();
  require_valid(ds);
  const int L = ds.label_set().num_labels();

  PosteriorTable posteriors(ds.num_items(), L);
  kernels::omp::vote_histogram(ds, true, posteriors, options.num_threads);

  std::vector<ConfusionMatrix> confusions;
  std::vector<double> prior;
  int iterations = 0;
  bool converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    confusions = ds_confusion_update(ds, posteriors, options);
    prior = ds_prior_update(posteriors, options);
    PosteriorTable next = ds_posterior(ds, confusions, prior, options.num_threads);
    const double delta = max_abs_delta(posteriors, next);
    posteriors = std::move(next);
    iterations = it;
    record_iteration(trace, ds, confusions, prior, posteriors, it, delta);
    if (delta < options.convergence_tolerance) {
      converged = true;
      break;
    }
  }

  auto hard = hard_labels_of(posteriors);
  return {std::move(posteriors), std::move(hard), std::move(prior),
          std::move(confusions), std::nullopt, iterations, converged};
}

InferenceResult surf(const FeedbackDataset& ds, const EmOptions& options, EmTrace* trace) {
  options.validate();
  require_valid(ds);
  const int L = ds.label_set().num_labels();

  PosteriorTable posteriors(ds.num_items(), L);
  kernels::omp::vote_histogram(ds, true, posteriors, options.num_threads);

  std::vector<double> busyness =
      options.fixed_busyness ? std::vector<double>(ds.num_users(), *options.fixed_busyness)
                             : initial_busyness(ds);

  const bool identity_evidence =
      options.acceptance_prob == AcceptanceProb::classifier_belief;
  const std::vector<ConfusionMatrix> identity_predictors(
      ds.num_users(), ConfusionMatrix::identity(L));

  const int num_agents = ds.num_users() + 1;
  std::vector<double> counts(static_cast<std::size_t>(num_agents) * L * L);
  std::vector<Label> hard;

  std::vector<ConfusionMatrix> confusions;
  std::vector<double> prior;
  int iterations = 0;
  bool converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Label* hard_ptr = nullptr;
    if (options.em_mode == EmMode::hard) {
      hard = hard_labels_of(posteriors);
      hard_ptr = hard.data();
    }
    kernels::omp::confusion_counts(ds, posteriors, hard_ptr, counts, options.num_threads);
    confusions = normalize_counts(counts, options.smoothing_alpha, num_agents, L);
    prior = ds_prior_update(posteriors, options);
    PosteriorTable next =
        surf_adjusted_posterior(ds, confusions, busyness, prior, options);
    if (!options.fixed_busyness) {
      const std::vector<ConfusionMatrix> predictors =
          identity_evidence ? identity_predictors
                            : busyness_predictors(counts, confusions, ds.num_users(), L);
      kernels::omp::busyness_update(ds, next, predictors, options.epsilon_clamp,
                                    busyness, options.num_threads);
    }
    const double delta = max_abs_delta(posteriors, next);
    posteriors = std::move(next);
    iterations = it;
    record_iteration(trace, ds, confusions, prior, posteriors, it, delta);
    if (delta < options.convergence_tolerance) {
      converged = true;
      break;
    }
  }

  auto final_hard = hard_labels_of(posteriors);
  return {std::move(posteriors), std::move(final_hard), std::move(prior),
          std::move(confusions), std::move(busyness), iterations, converged};
}

InferenceResult run_model(const FeedbackDataset& ds, Model model, const EmOptions& options) {
  switch (model) {
    case Model::mv: return majority_vote(ds, true, options.num_threads);
    case Model::ds: return dawid_skene(ds, options);
    case Model::surf: return surf(ds, options);
  }
  throw std::logic_error("unknown model");
}

}  // namespace surf
