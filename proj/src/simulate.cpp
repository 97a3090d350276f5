#include "surf/simulate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace surf {

void SimConfig::validate() const {
  if (num_items < 1) throw std::invalid_argument("num_items must be >= 1");
  if (num_users < 1) throw std::invalid_argument("num_users must be >= 1");
  if (feedback_size < 1 || feedback_size > num_users) {
    throw std::invalid_argument("feedback_size must be in 1..num_users");
  }
  if (label_count < 2) throw std::invalid_argument("label_count must be >= 2");
  for (auto [p, name] : {std::pair{user_error, "user_error"},
                         {classifier_error, "classifier_error"},
                         {busyness, "busyness"}}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string(name) + " must be in [0,1]");
    }
  }
  if (truth_source == TruthSource::label_file && truth_file.empty()) {
    throw std::invalid_argument("truth_file required for label-file truth source");
  }
}

ConfusionMatrix pairwise_flipper(int label_count, double error_prob, SplitMix64& rng) {
  if (label_count < 2) throw std::invalid_argument("pairwise_flipper: label_count must be >= 2");
  if (!(error_prob >= 0.0 && error_prob <= 1.0)) {
    throw std::invalid_argument("pairwise_flipper: error probability must be in [0,1]");
  }

  // Shuffle the alphabet and pair consecutive entries. Every perfect matching
  // of 2m labels corresponds to the same number of orderings (m! * 2^m), so
  // the matching is uniform; with odd L the leftover label pairs with itself.
  std::vector<int> order(label_count);
  std::iota(order.begin(), order.end(), 0);
  for (int j = label_count - 1; j > 0; --j) {
    int r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
    std::swap(order[j], order[r]);
  }

  std::vector<int> partner(label_count);
  for (int j = 0; j + 1 < label_count; j += 2) {
    partner[order[j]] = order[j + 1];
    partner[order[j + 1]] = order[j];
  }
  if (label_count % 2 == 1) partner[order[label_count - 1]] = order[label_count - 1];

  std::vector<double> e(static_cast<std::size_t>(label_count) * label_count, 0.0);
  for (int t = 0; t < label_count; ++t) {
    std::size_t row = static_cast<std::size_t>(t) * label_count;
    if (partner[t] == t) {
      e[row + t] = 1.0;
    } else {
      e[row + t] = 1.0 - error_prob;
      e[row + partner[t]] = error_prob;
    }
  }
  return ConfusionMatrix(label_count, std::move(e));
}

ConfusionMatrix uniform_flipper(int label_count, double error_prob) {
  if (label_count < 2) throw std::invalid_argument("uniform_flipper: label_count must be >= 2");
  if (!(error_prob >= 0.0 && error_prob <= 1.0)) {
    throw std::invalid_argument("uniform_flipper: error probability must be in [0,1]");
  }
  std::vector<double> e(static_cast<std::size_t>(label_count) * label_count,
                        error_prob / (label_count - 1));
  for (int t = 0; t < label_count; ++t) {
    e[static_cast<std::size_t>(t) * label_count + t] = 1.0 - error_prob;
  }
  return ConfusionMatrix(label_count, std::move(e));
}

namespace {

Label sample_row(const ConfusionMatrix& m, Label true_label, SplitMix64& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  const int L = m.num_labels();
  for (Label r = 0; r < L; ++r) {
    cum += m.at(true_label, r);
    if (u < cum) return r;
  }
  return L - 1;  // guards against row sums a hair below 1
}

}  // namespace

Label agent_respond(const AgentSpec& agent, Label true_label, Label classifier_label,
                    SplitMix64& rng) {
  const int L = agent.confusion.num_labels();
  if (true_label < 0 || true_label >= L || classifier_label < 0 || classifier_label >= L) {
    throw std::invalid_argument("agent_respond: label out of range");
  }
  // The busy draw is consumed on every call so the draw sequence does not
  // depend on the busyness value.
  const bool busy = rng.next_double() < agent.busyness;
  if (busy) return classifier_label;
  return sample_row(agent.confusion, true_label, rng);
}

namespace {

std::vector<Label> load_idx1_labels(std::ifstream& in, const std::string& path,
                                    const LabelSet& labels) {
  auto read_u32 = [&](std::size_t offset) -> std::uint32_t {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) {
      throw std::runtime_error(path + ": truncated at byte offset " + std::to_string(offset));
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
  };

  const std::uint32_t magic = read_u32(0);
  if (magic != 0x00000801u) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw std::runtime_error(path + ": not a label file (magic " + buf + ")");
  }
  const std::uint32_t count = read_u32(4);
  std::vector<Label> out;
  out.reserve(count);
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), count);
  if (static_cast<std::uint32_t>(in.gcount()) != count) {
    throw std::runtime_error(path + ": truncated at byte offset " +
                             std::to_string(8 + in.gcount()));
  }
  for (std::uint32_t j = 0; j < count; ++j) {
    Label l = bytes[j];
    if (!labels.contains(l)) {
      throw std::runtime_error(path + ": label " + std::to_string(l) +
                               " out of range at byte offset " + std::to_string(8 + j));
    }
    out.push_back(l);
  }
  return out;
}

std::vector<Label> load_text_labels(std::ifstream& in, const std::string& path,
                                    const LabelSet& labels) {
  std::vector<Label> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    std::size_t pos = 0;
    long l = 0;
    try {
      l = std::stol(line, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || line.find_first_not_of(" \t\r", pos) != std::string::npos) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               " is not an integer label");
    }
    if (!labels.contains(static_cast<Label>(l))) {
      throw std::runtime_error(path + ": label " + std::to_string(l) +
                               " out of range at line " + std::to_string(line_no));
    }
    out.push_back(static_cast<Label>(l));
  }
  if (out.empty()) throw std::runtime_error(path + ": no labels");
  return out;
}

}  // namespace

std::vector<Label> load_ground_truth_labels(const std::string& path,
                                            const LabelSet& labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open label file " + path);

  // IDX files start with two zero bytes (the magic's high bytes); text label
  // files cannot contain NUL, so this sniff is unambiguous.
  char head[2] = {1, 1};
  in.read(head, 2);
  in.clear();
  in.seekg(0);
  if (in.gcount() == 2 && head[0] == 0 && head[1] == 0) {
    return load_idx1_labels(in, path, labels);
  }
  return load_text_labels(in, path, labels);
}

FeedbackDataset generate_dataset(const SimConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);
  const int L = cfg.label_count;
  const LabelSet labels(L);

  // Draw order is part of the format contract: truths, user confusions
  // (k = 1..K), classifier confusion, classifier labels, then per-item
  // assignment and responses.
  std::vector<Label> truths(cfg.num_items);
  if (cfg.truth_source == TruthSource::uniform) {
    for (auto& t : truths) t = static_cast<Label>(rng.next_below(L));
  } else {
    const std::vector<Label> pool = load_ground_truth_labels(cfg.truth_file, labels);
    for (auto& t : truths) t = pool[rng.next_below(pool.size())];
  }

  auto make_confusion = [&](double p) {
    return cfg.flip_mode == FlipMode::pairwise ? pairwise_flipper(L, p, rng)
                                               : uniform_flipper(L, p);
  };
  std::vector<AgentSpec> users;
  users.reserve(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    users.push_back({make_confusion(cfg.user_error), cfg.busyness});
  }
  const AgentSpec classifier{make_confusion(cfg.classifier_error), 0.0};

  std::vector<Label> clf_labels(cfg.num_items);
  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    clf_labels[i] = agent_respond(classifier, truths[i], /*classifier_label=*/0, rng);
  }

  std::vector<FeedbackTriplet> triplets;
  triplets.reserve(cfg.num_items * static_cast<std::size_t>(cfg.feedback_size));
  std::vector<int> pool(cfg.num_users);
  std::vector<int> picked(cfg.feedback_size);
  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    std::iota(pool.begin(), pool.end(), 1);
    for (int j = 0; j < cfg.feedback_size; ++j) {
      int r = j + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.num_users - j)));
      std::swap(pool[j], pool[r]);
      picked[j] = pool[j];
    }
    std::sort(picked.begin(), picked.end());
    for (int k : picked) {
      Label resp = agent_respond(users[k - 1], truths[i], clf_labels[i], rng);
      triplets.push_back({k, static_cast<std::int32_t>(i), resp});
    }
  }

  return FeedbackDataset(labels, cfg.num_items, cfg.num_users, std::move(clf_labels),
                         std::move(triplets), std::move(truths));
}

}  // namespace surf
