#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surf/dataset.hpp"
#include "surf/rng.hpp"

namespace surf {

/// One simulated agent: a confusion matrix plus the probability of echoing
/// the classifier's label instead of answering (busyness).
struct AgentSpec {
  ConfusionMatrix confusion;
  double busyness = 0.0;
};

enum class FlipMode {
  pairwise,  // random perfect matching, mass p on each label's partner
  uniform,   // mass p spread evenly over the L-1 wrong labels
};

enum class TruthSource {
  uniform,     // labels drawn uniformly from the alphabet
  label_file,  // labels sampled from an IDX1 or plain-text label file
};

struct SimConfig {
  std::size_t num_items = 1000;  // N
  int num_users = 15;            // K
  int feedback_size = 5;         // M users asked per item
  double user_error = 0.25;      // p_u
  double classifier_error = 0.25;  // p_c
  double busyness = 0.0;           // epsilon, shared by all users
  int label_count = 10;            // L
  std::uint64_t seed = 0;
  FlipMode flip_mode = FlipMode::pairwise;
  TruthSource truth_source = TruthSource::uniform;
  std::string truth_file;

  void validate() const;  // throws std::invalid_argument
};

/// Draws a uniformly random perfect matching on the labels and returns the
/// matrix with 1-p on the diagonal and p on each label's partner. Odd label
/// counts leave one label unmatched, which stays noiseless.
ConfusionMatrix pairwise_flipper(int label_count, double error_prob, SplitMix64& rng);

/// Deterministic alternative noise family: p spread evenly over wrong labels.
ConfusionMatrix uniform_flipper(int label_count, double error_prob);

/// With probability `busyness` echoes the classifier's label, otherwise
/// samples the confusion-matrix row of the true label.
Label agent_respond(const AgentSpec& agent, Label true_label, Label classifier_label,
                    SplitMix64& rng);

/// Reads an IDX1 label file (magic 0x00000801) or a plain text file with one
/// integer label per line. Labels outside the alphabet are an error.
std::vector<Label> load_ground_truth_labels(const std::string& path,
                                            const LabelSet& labels);

/// Runs the full feedback round: draw ground truth, build the agent pool,
/// produce classifier labels, and collect feedback from M users per item.
/// Deterministic given cfg.seed.
FeedbackDataset generate_dataset(const SimConfig& cfg);

}  // namespace surf
