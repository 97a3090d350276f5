#include "surf/em_kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <omp.h>

#include "surf/golden.hpp"

namespace surf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t table_index(int num_labels, int agent, Label true_l, Label reported) {
  return (static_cast<std::size_t>(agent) * num_labels + true_l) * num_labels + reported;
}

}  // namespace

double busyness_log_likelihood(double eps, std::span<const double> agree_probs,
                               std::int64_t num_disagreements) {
  double ll = 0.0;
  const double engaged = 1.0 - eps;
  for (double p : agree_probs) {
    ll += std::log1p(-engaged * (1.0 - p));
  }
  if (num_disagreements > 0) {
    ll += static_cast<double>(num_disagreements) * std::log1p(-eps);
  }
  return ll;
}

LogTables build_ds_tables(std::span<const ConfusionMatrix> confusions) {
  LogTables t;
  t.num_labels = confusions[0].num_labels();
  const int L = t.num_labels;
  t.log_conf.resize(confusions.size() * static_cast<std::size_t>(L) * L);
  for (std::size_t a = 0; a < confusions.size(); ++a) {
    const auto& e = confusions[a].entries();
    for (std::size_t j = 0; j < e.size(); ++j) {
      t.log_conf[a * L * L + j] = std::log(e[j]);
    }
  }
  return t;
}

LogTables build_surf_tables(std::span<const ConfusionMatrix> confusions,
                            std::span<const double> busyness, AdjustMode mode) {
  LogTables t = build_ds_tables(confusions);
  const int L = t.num_labels;
  const std::size_t cells = static_cast<std::size_t>(L) * L;
  t.agree.resize(busyness.size() * cells);
  for (std::size_t k = 0; k < busyness.size(); ++k) {
    const double eps = busyness[k];
    const auto& base = confusions[k + 1].entries();
    for (std::size_t j = 0; j < cells; ++j) {
      t.agree[k * cells + j] = std::log(eps + (1.0 - eps) * base[j]);
    }
    if (mode == AdjustMode::renormalized) {
      // Bake log(1 - eps) into the user's disagree entries so the posterior
      // pass needs no per-vote branch on the mode.
      const double log_engaged = std::log1p(-eps);
      for (std::size_t j = 0; j < cells; ++j) {
        t.log_conf[(k + 1) * cells + j] += log_engaged;
      }
    }
  }
  return t;
}

namespace kernels {

namespace {

void vote_histogram_row(const FeedbackDataset& ds, bool include_classifier,
                        std::size_t i, std::span<double> row) {
  const int L = ds.label_set().num_labels();
  std::fill(row.begin(), row.end(), 0.0);
  double total = 0.0;
  if (include_classifier) {
    row[ds.classifier_labels()[i]] += 1.0;
    total += 1.0;
  }
  for (const auto& v : ds.votes_on_item(i)) {
    row[v.label] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / L);
  } else {
    for (auto& x : row) x /= total;
  }
}

// Returns false when every score underflowed to zero (all log scores -inf).
bool normalize_log_row(std::span<double> row) {
  double m = kNegInf;
  for (double s : row) m = std::max(m, s);
  if (m == kNegInf) return false;
  double sum = 0.0;
  for (auto& s : row) {
    s = std::exp(s - m);
    sum += s;
  }
  for (auto& s : row) s /= sum;
  return true;
}

bool ds_posterior_row(const FeedbackDataset& ds, const LogTables& t,
                      std::span<const double> log_prior, std::size_t i,
                      std::span<double> row) {
  const int L = t.num_labels;
  const Label clf = ds.classifier_labels()[i];
  const auto votes = ds.votes_on_item(i);
  for (Label l = 0; l < L; ++l) {
    double s = log_prior[l] + t.log_conf[table_index(L, 0, l, clf)];
    for (const auto& v : votes) {
      s += t.log_conf[table_index(L, v.user, l, v.label)];
    }
    row[l] = s;
  }
  return normalize_log_row(row);
}

bool surf_posterior_row(const FeedbackDataset& ds, const LogTables& t,
                        std::span<const double> log_prior, std::size_t i,
                        std::span<double> row) {
  const int L = t.num_labels;
  const Label clf = ds.classifier_labels()[i];
  const auto votes = ds.votes_on_item(i);
  for (Label l = 0; l < L; ++l) {
    double s = log_prior[l] + t.log_conf[table_index(L, 0, l, clf)];
    for (const auto& v : votes) {
      if (v.label == clf) {
        s += t.agree[table_index(L, v.user - 1, l, clf)];
      } else {
        s += t.log_conf[table_index(L, v.user, l, v.label)];
      }
    }
    row[l] = s;
  }
  return normalize_log_row(row);
}

void accumulate_agent_counts(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                             const Label* hard_labels, int agent,
                             std::span<double> slice) {
  const int L = ds.label_set().num_labels();
  std::fill(slice.begin(), slice.end(), 0.0);
  if (agent == 0) {
    for (std::size_t i = 0; i < ds.num_items(); ++i) {
      const Label m = ds.classifier_labels()[i];
      if (hard_labels) {
        slice[static_cast<std::size_t>(hard_labels[i]) * L + m] += 1.0;
      } else {
        const auto p = posteriors.row(i);
        for (Label l = 0; l < L; ++l) slice[static_cast<std::size_t>(l) * L + m] += p[l];
      }
    }
  } else {
    for (const auto& v : ds.votes_from_user(agent)) {
      if (hard_labels) {
        slice[static_cast<std::size_t>(hard_labels[v.item]) * L + v.label] += 1.0;
      } else {
        const auto p = posteriors.row(v.item);
        for (Label l = 0; l < L; ++l) {
          slice[static_cast<std::size_t>(l) * L + v.label] += p[l];
        }
      }
    }
  }
}

double user_busyness_mle(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                         const ConfusionMatrix& predictor, int user, double clamp_delta,
                         std::vector<double>& scratch) {
  if (ds.votes_from_user(user).empty()) return 0.0;
  const int L = posteriors.num_labels();
  scratch.clear();
  std::int64_t dis = 0;
  for (const auto& v : ds.votes_from_user(user)) {
    const Label clf = ds.classifier_labels()[v.item];
    if (v.label == clf) {
      const auto row = posteriors.row(v.item);
      double p = 0.0;
      for (Label l = 0; l < L; ++l) p += row[l] * predictor.at(l, clf);
      if (p < 1.0) scratch.push_back(p);  // p == 1 terms are exactly 0
    } else {
      ++dis;
    }
  }
  return maximize_busyness_likelihood(scratch, dis, clamp_delta);
}

[[noreturn]] void throw_dead_item(std::size_t item) {
  throw std::domain_error("posterior has all scores zero for item " +
                          std::to_string(item) +
                          " (only possible with smoothing_alpha = 0)");
}

}  // namespace

double maximize_busyness_likelihood(std::span<const double> agree_probs,
                                    std::int64_t num_disagreements, double clamp_delta) {
  const double hi = 1.0 - clamp_delta;
  auto objective = [&](double eps) {
    return busyness_log_likelihood(eps, agree_probs, num_disagreements);
  };
  const double eps = golden_section_maximize(objective, 0.0, hi, 1e-8);
  return std::clamp(eps, 0.0, hi);
}

namespace serial {

void vote_histogram(const FeedbackDataset& ds, bool include_classifier,
                    PosteriorTable& out) {
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    vote_histogram_row(ds, include_classifier, i, out.row(i));
  }
}

void confusion_counts(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                      const Label* hard_labels, std::span<double> out) {
  const int L = ds.label_set().num_labels();
  const std::size_t cells = static_cast<std::size_t>(L) * L;
  for (int a = 0; a <= ds.num_users(); ++a) {
    accumulate_agent_counts(ds, posteriors, hard_labels, a,
                            out.subspan(static_cast<std::size_t>(a) * cells, cells));
  }
}

void prior_stats(const PosteriorTable& posteriors, const Label* hard_labels,
                 double alpha, std::span<double> out) {
  std::fill(out.begin(), out.end(), alpha);
  for (std::size_t i = 0; i < posteriors.num_items(); ++i) {
    if (hard_labels) {
      out[hard_labels[i]] += 1.0;
    } else {
      const auto p = posteriors.row(i);
      for (int l = 0; l < posteriors.num_labels(); ++l) out[l] += p[l];
    }
  }
}

void ds_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                       std::span<const double> log_prior, PosteriorTable& out) {
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    if (!ds_posterior_row(ds, tables, log_prior, i, out.row(i))) throw_dead_item(i);
  }
}

void surf_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                         std::span<const double> log_prior, PosteriorTable& out) {
  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    if (!surf_posterior_row(ds, tables, log_prior, i, out.row(i))) throw_dead_item(i);
  }
}

void busyness_update(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                     std::span<const ConfusionMatrix> predictors, double clamp_delta,
                     std::span<double> out_eps) {
  std::vector<double> scratch;
  for (int k = 1; k <= ds.num_users(); ++k) {
    out_eps[k - 1] =
        user_busyness_mle(ds, posteriors, predictors[k - 1], k, clamp_delta, scratch);
  }
}

}  // namespace serial

namespace omp {

namespace {

// Deterministic "first failing item" across any schedule.
void atomic_min(std::atomic<std::int64_t>& slot, std::int64_t value) {
  std::int64_t seen = slot.load();
  while ((seen < 0 || value < seen) && !slot.compare_exchange_weak(seen, value)) {
  }
}

}  // namespace

void vote_histogram(const FeedbackDataset& ds, bool include_classifier,
                    PosteriorTable& out, int num_threads) {
  const std::int64_t n = static_cast<std::int64_t>(ds.num_items());
#pragma omp parallel for schedule(static) num_threads(num_threads)
  for (std::int64_t i = 0; i < n; ++i) {
    vote_histogram_row(ds, include_classifier, static_cast<std::size_t>(i),
                       out.row(static_cast<std::size_t>(i)));
  }
}

void confusion_counts(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                      const Label* hard_labels, std::span<double> out, int num_threads) {
  const int L = ds.label_set().num_labels();
  const std::size_t cells = static_cast<std::size_t>(L) * L;
  const int num_agents = ds.num_users() + 1;
#pragma omp parallel for schedule(dynamic, 1) num_threads(num_threads)
  for (int a = 0; a < num_agents; ++a) {
    accumulate_agent_counts(ds, posteriors, hard_labels, a,
                            out.subspan(static_cast<std::size_t>(a) * cells, cells));
  }
}

void prior_stats(const PosteriorTable& posteriors, const Label* hard_labels,
                 double alpha, std::span<double> out) {
  // O(N*L) with a fixed reduction order; parallelizing it would change
  // summation order and break bit-determinism for no measurable gain.
  serial::prior_stats(posteriors, hard_labels, alpha, out);
}

void ds_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                       std::span<const double> log_prior, PosteriorTable& out,
                       int num_threads) {
  const std::int64_t n = static_cast<std::int64_t>(ds.num_items());
  std::atomic<std::int64_t> dead{-1};
#pragma omp parallel for schedule(static) num_threads(num_threads)
  for (std::int64_t i = 0; i < n; ++i) {
    if (!ds_posterior_row(ds, tables, log_prior, static_cast<std::size_t>(i),
                          out.row(static_cast<std::size_t>(i)))) {
      atomic_min(dead, i);
    }
  }
  if (dead.load() >= 0) throw_dead_item(static_cast<std::size_t>(dead.load()));
}

void surf_posterior_pass(const FeedbackDataset& ds, const LogTables& tables,
                         std::span<const double> log_prior, PosteriorTable& out,
                         int num_threads) {
  const std::int64_t n = static_cast<std::int64_t>(ds.num_items());
  std::atomic<std::int64_t> dead{-1};
#pragma omp parallel for schedule(static) num_threads(num_threads)
  for (std::int64_t i = 0; i < n; ++i) {
    if (!surf_posterior_row(ds, tables, log_prior, static_cast<std::size_t>(i),
                            out.row(static_cast<std::size_t>(i)))) {
      atomic_min(dead, i);
    }
  }
  if (dead.load() >= 0) throw_dead_item(static_cast<std::size_t>(dead.load()));
}

void busyness_update(const FeedbackDataset& ds, const PosteriorTable& posteriors,
                     std::span<const ConfusionMatrix> predictors, double clamp_delta,
                     std::span<double> out_eps, int num_threads) {
  const int K = ds.num_users();
#pragma omp parallel num_threads(num_threads)
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 1)
    for (int k = 1; k <= K; ++k) {
      out_eps[k - 1] =
          user_busyness_mle(ds, posteriors, predictors[k - 1], k, clamp_delta, scratch);
    }
  }
}

}  // namespace omp

}  // namespace kernels

}  // namespace surf
