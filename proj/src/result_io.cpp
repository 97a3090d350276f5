#include "surf/result_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace surf {

Label argmax_lowest(std::span<const double> row) {
  Label best = 0;
  for (std::size_t l = 1; l < row.size(); ++l) {
    if (row[l] > row[best]) best = static_cast<Label>(l);
  }
  return best;
}

double PosteriorTable::max_row_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < num_items_; ++i) {
    double sum = 0.0;
    for (double v : row(i)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void write_result_json(const InferenceResult& result, std::ostream& out,
                       bool include_posteriors) {
  nlohmann::ordered_json j;
  j["hard_labels"] = result.hard_labels;
  j["class_prior"] = result.class_prior;

  auto confusions = nlohmann::ordered_json::array();
  for (const auto& c : result.confusions) {
    const int L = c.num_labels();
    auto rows = nlohmann::ordered_json::array();
    for (int t = 0; t < L; ++t) {
      auto row = nlohmann::ordered_json::array();
      for (int r = 0; r < L; ++r) row.push_back(c.at(t, r));
      rows.push_back(std::move(row));
    }
    confusions.push_back(std::move(rows));
  }
  j["confusions"] = std::move(confusions);

  if (result.busyness) {
    j["busyness"] = *result.busyness;
  } else {
    j["busyness"] = nullptr;
  }
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;

  if (include_posteriors) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < result.posteriors.num_items(); ++i) {
      auto row = nlohmann::ordered_json::array();
      for (double v : result.posteriors.row(i)) row.push_back(v);
      rows.push_back(std::move(row));
    }
    j["posteriors"] = std::move(rows);
  }

  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("result write failed");
}

void write_result_json(const InferenceResult& result, const std::string& path,
                       bool include_posteriors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_result_json(result, out, include_posteriors);
}

}  // namespace surf
