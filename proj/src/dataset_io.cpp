#include "surf/dataset_io.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace surf {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DatasetFormatError("dataset line " + std::to_string(line) + ": " + what);
}

std::int64_t require_int(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail(line, std::string("missing field \"") + key + "\"");
  if (!it->is_number_integer()) fail(line, std::string("field \"") + key + "\" must be an integer");
  return it->get<std::int64_t>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    std::size_t line) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) { known = true; break; }
    }
    if (!known) fail(line, "unknown field \"" + it.key() + "\"");
  }
}

}  // namespace

void write_dataset_jsonl(const FeedbackDataset& ds, std::ostream& out) {
  ordered_json header;
  header["L"] = ds.label_set().num_labels();
  header["N"] = ds.num_items();
  header["K"] = ds.num_users();
  out << header.dump() << '\n';

  for (std::size_t i = 0; i < ds.num_items(); ++i) {
    ordered_json rec;
    rec["i"] = i;
    if (ds.has_ground_truth()) rec["truth"] = ds.ground_truth()[i];
    rec["clf"] = ds.classifier_labels()[i];
    ordered_json fb = ordered_json::object();
    for (const auto& v : ds.votes_on_item(i)) {
      fb[std::to_string(v.user)] = v.label;  // votes are stored ascending by user
    }
    rec["fb"] = std::move(fb);
    out << rec.dump() << '\n';
  }
  if (!out) throw DatasetFormatError("dataset write failed");
}

void write_dataset_jsonl(const FeedbackDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetFormatError("cannot open " + path + " for writing");
  write_dataset_jsonl(ds, out);
}

FeedbackDataset read_dataset_jsonl(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty()) return true;
      fail(line_no, "blank line");
    }
    return false;
  };

  if (!next_line()) throw DatasetFormatError("empty dataset file");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object()) fail(line_no, "malformed header object");
  reject_unknown(header, {"L", "N", "K"}, line_no);
  const std::int64_t L = require_int(header, "L", line_no);
  const std::int64_t N = require_int(header, "N", line_no);
  const std::int64_t K = require_int(header, "K", line_no);
  if (L < 2) fail(line_no, "L must be >= 2");
  if (N < 1) fail(line_no, "N must be >= 1");
  if (K < 1) fail(line_no, "K must be >= 1");

  std::vector<Label> clf(static_cast<std::size_t>(N), 0);
  std::vector<Label> truth(static_cast<std::size_t>(N), 0);
  std::vector<bool> seen(static_cast<std::size_t>(N), false);
  std::vector<FeedbackTriplet> triplets;
  std::optional<bool> has_truth;

  for (std::int64_t rec_count = 0; rec_count < N; ++rec_count) {
    if (!next_line()) {
      throw DatasetFormatError("expected " + std::to_string(N) + " records, got " +
                               std::to_string(rec_count));
    }
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) fail(line_no, "malformed record object");
    reject_unknown(rec, {"i", "truth", "clf", "fb"}, line_no);

    const std::int64_t i = require_int(rec, "i", line_no);
    if (i < 0 || i >= N) fail(line_no, "item index " + std::to_string(i) + " out of range");
    if (seen[static_cast<std::size_t>(i)]) fail(line_no, "duplicate record for item " + std::to_string(i));
    seen[static_cast<std::size_t>(i)] = true;

    const bool rec_has_truth = rec.contains("truth");
    if (!has_truth.has_value()) {
      has_truth = rec_has_truth;
    } else if (*has_truth != rec_has_truth) {
      fail(line_no, "\"truth\" must be present on all records or none");
    }
    if (rec_has_truth) {
      truth[static_cast<std::size_t>(i)] = static_cast<Label>(require_int(rec, "truth", line_no));
    }
    clf[static_cast<std::size_t>(i)] = static_cast<Label>(require_int(rec, "clf", line_no));

    auto fb = rec.find("fb");
    if (fb == rec.end()) fail(line_no, "missing field \"fb\"");
    if (!fb->is_object()) fail(line_no, "field \"fb\" must be an object");
    for (auto it = fb->begin(); it != fb->end(); ++it) {
      std::int64_t k = 0;
      std::size_t pos = 0;
      try {
        k = std::stoll(it.key(), &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != it.key().size() || k < 1 || k > K) {
        fail(line_no, "feedback user key \"" + it.key() + "\" is not a user index in 1.." +
                          std::to_string(K));
      }
      if (!it->is_number_integer()) fail(line_no, "feedback label for user " + it.key() + " must be an integer");
      triplets.push_back({static_cast<std::int32_t>(k), static_cast<std::int32_t>(i),
                          static_cast<Label>(it->get<std::int64_t>())});
    }
  }
  if (next_line()) fail(line_no, "trailing content after " + std::to_string(N) + " records");

  std::optional<std::vector<Label>> truth_opt;
  if (has_truth.value_or(false)) truth_opt = std::move(truth);
  try {
    return FeedbackDataset(LabelSet(static_cast<int>(L)), static_cast<std::size_t>(N),
                           static_cast<int>(K), std::move(clf), std::move(triplets),
                           std::move(truth_opt));
  } catch (const std::invalid_argument& e) {
    throw DatasetFormatError(std::string("dataset rejected: ") + e.what());
  }
}

FeedbackDataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetFormatError("cannot open " + path);
  return read_dataset_jsonl(in);
}

}  // namespace surf
