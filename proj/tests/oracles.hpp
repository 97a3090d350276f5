// Independent reference implementations used only by tests. These deliberately
// take different routes from the library (dense arrays, direct probability
// space, exhaustive search) so agreement is meaningful.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "surf/em_kernels.hpp"
#include "surf/label_types.hpp"
#include "surf/rng.hpp"

namespace oracle {

// Modal label, ties to the lowest index.
inline surf::Label brute_force_mode(const std::vector<surf::Label>& votes, int L) {
  std::vector<int> counts(L, 0);
  for (surf::Label v : votes) ++counts[v];
  surf::Label best = 0;
  for (int l = 1; l < L; ++l) {
    if (counts[l] > counts[best]) best = l;
  }
  return best;
}

struct DenseEmResult {
  std::vector<std::vector<double>> posterior;                // N x L
  std::vector<std::vector<std::vector<double>>> confusions;  // (K+1) x L x L
  std::vector<double> prior;
  int iterations = 0;
};

// Plain update-loop EM over a dense answer matrix, direct probability space.
// answers[i][a] is agent a's label for item i (-1 = not assigned); agent 0 is
// the classifier.
inline DenseEmResult dense_em(const std::vector<std::vector<int>>& answers, int L,
                              bool hard, double alpha, double tol, int max_iters) {
  const std::size_t n = answers.size();
  const std::size_t num_agents = answers[0].size();

  DenseEmResult r;
  r.posterior.assign(n, std::vector<double>(L, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t a = 0; a < num_agents; ++a) {
      if (answers[i][a] >= 0) {
        r.posterior[i][answers[i][a]] += 1.0;
        total += 1.0;
      }
    }
    for (int l = 0; l < L; ++l) {
      r.posterior[i][l] = total > 0 ? r.posterior[i][l] / total : 1.0 / L;
    }
  }

  auto argmax = [&](const std::vector<double>& row) {
    int best = 0;
    for (int l = 1; l < L; ++l) {
      if (row[l] > row[best]) best = l;
    }
    return best;
  };

  for (int it = 1; it <= max_iters; ++it) {
    r.confusions.assign(num_agents, std::vector<std::vector<double>>(
                                        L, std::vector<double>(L, 0.0)));
    for (std::size_t a = 0; a < num_agents; ++a) {
      for (std::size_t i = 0; i < n; ++i) {
        const int m = answers[i][a];
        if (m < 0) continue;
        if (hard) {
          r.confusions[a][argmax(r.posterior[i])][m] += 1.0;
        } else {
          for (int l = 0; l < L; ++l) r.confusions[a][l][m] += r.posterior[i][l];
        }
      }
      for (int l = 0; l < L; ++l) {
        double sum = 0.0;
        for (int m = 0; m < L; ++m) sum += r.confusions[a][l][m] + alpha;
        for (int m = 0; m < L; ++m) {
          r.confusions[a][l][m] = (r.confusions[a][l][m] + alpha) / sum;
        }
      }
    }

    r.prior.assign(L, alpha);
    for (std::size_t i = 0; i < n; ++i) {
      if (hard) {
        r.prior[argmax(r.posterior[i])] += 1.0;
      } else {
        for (int l = 0; l < L; ++l) r.prior[l] += r.posterior[i][l];
      }
    }
    double qsum = 0.0;
    for (double q : r.prior) qsum += q;
    for (double& q : r.prior) q /= qsum;

    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(L);
      double sum = 0.0;
      for (int l = 0; l < L; ++l) {
        double p = r.prior[l];
        for (std::size_t a = 0; a < num_agents; ++a) {
          if (answers[i][a] >= 0) p *= r.confusions[a][l][answers[i][a]];
        }
        row[l] = p;
        sum += p;
      }
      for (int l = 0; l < L; ++l) {
        row[l] /= sum;
        delta = std::max(delta, std::abs(row[l] - r.posterior[i][l]));
      }
      r.posterior[i] = row;
    }
    r.iterations = it;
    if (delta < tol) break;
  }
  return r;
}

// Exhaustive argmax of the busyness log likelihood on a uniform grid.
inline double grid_search_busyness(std::span<const double> agree_probs,
                                   std::int64_t num_disagreements, double clamp_delta,
                                   int points) {
  const double hi = 1.0 - clamp_delta;
  double best_eps = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < points; ++j) {
    const double eps = hi * static_cast<double>(j) / static_cast<double>(points - 1);
    const double v = surf::busyness_log_likelihood(eps, agree_probs, num_disagreements);
    if (v > best) {
      best = v;
      best_eps = eps;
    }
  }
  return best_eps;
}

// Direct probability-space evaluation of the busyness-adjusted posterior for
// one item.
inline std::vector<double> surf_item_posterior_direct(
    const std::vector<double>& prior, const std::vector<surf::ConfusionMatrix>& conf,
    const std::vector<double>& busyness, surf::AdjustMode mode,
    const std::vector<std::pair<int, surf::Label>>& votes, surf::Label clf_label) {
  const int L = conf[0].num_labels();
  std::vector<double> out(L, 0.0);
  double sum = 0.0;
  for (surf::Label l = 0; l < L; ++l) {
    double v = prior[l] * conf[0].at(l, clf_label);
    for (const auto& [user, reported] : votes) {
      const surf::AdjustedConfusion adj{&conf[user], busyness[user - 1], mode};
      v *= adj.at(l, reported, clf_label);
    }
    out[l] = v;
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace oracle
