#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "surf/dataset_io.hpp"
#include "surf/inference.hpp"
#include "surf/result_io.hpp"
#include "surf/simulate.hpp"
#include "surf/sweep.hpp"

namespace {

int env_workers() {
  const char* v = std::getenv("SURF_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) {
    throw std::runtime_error(std::string("SURF_THREADS must be a positive integer, got \"") +
                             v + "\"");
  }
  return static_cast<int>(n);
}

surf::Model parse_model(const std::string& s) {
  auto m = surf::model_from_string(s);
  if (!m) throw CLI::ValidationError("--model", "unknown model \"" + s + "\"");
  return *m;
}

std::vector<surf::Model> parse_models(const std::vector<std::string>& names) {
  bool selected[3] = {false, false, false};
  for (const auto& s : names) {
    auto m = surf::model_from_string(s);
    if (!m) throw CLI::ValidationError("--models", "unknown model \"" + s + "\"");
    selected[static_cast<int>(*m)] = true;
  }
  std::vector<surf::Model> out;
  for (surf::Model m : {surf::Model::mv, surf::Model::ds, surf::Model::surf}) {
    if (selected[static_cast<int>(m)]) out.push_back(m);
  }
  return out;
}

surf::EmMode parse_em_mode(const std::string& s) {
  if (s == "soft") return surf::EmMode::soft;
  if (s == "hard") return surf::EmMode::hard;
  throw CLI::ValidationError("--em-mode", "expected soft or hard, got \"" + s + "\"");
}

surf::AdjustMode parse_adjust_mode(const std::string& s) {
  if (s == "literal") return surf::AdjustMode::literal;
  if (s == "renormalized") return surf::AdjustMode::renormalized;
  throw CLI::ValidationError("--adjustment", "expected literal or renormalized, got \"" + s + "\"");
}

surf::FlipMode parse_flip_mode(const std::string& s) {
  if (s == "pairwise") return surf::FlipMode::pairwise;
  if (s == "uniform") return surf::FlipMode::uniform;
  throw CLI::ValidationError("--flip-mode", "expected pairwise or uniform, got \"" + s + "\"");
}

void apply_em_config(const nlohmann::json& j, surf::EmOptions& em) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key == "max_iterations") {
      em.max_iterations = it->get<int>();
    } else if (key == "convergence_tolerance") {
      em.convergence_tolerance = it->get<double>();
    } else if (key == "smoothing_alpha") {
      em.smoothing_alpha = it->get<double>();
    } else if (key == "em_mode") {
      em.em_mode = parse_em_mode(it->get<std::string>());
    } else if (key == "surf_adjustment_mode") {
      em.surf_adjustment_mode = parse_adjust_mode(it->get<std::string>());
    } else if (key == "epsilon_clamp") {
      em.epsilon_clamp = it->get<double>();
    } else {
      throw std::runtime_error("config: unknown em field \"" + key + "\"");
    }
  }
}

// Mirrors SweepConfig field names; returns whether the file provided a seed.
bool apply_sweep_config(const std::string& path, surf::SweepConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw std::runtime_error("config file " + path + " is not a JSON object");
  }
  bool has_seed = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key == "epsilon") {
      cfg.epsilon_grid = it->get<std::vector<double>>();
    } else if (key == "m") {
      cfg.m_grid = it->get<std::vector<int>>();
    } else if (key == "pc") {
      cfg.pc_grid = it->get<std::vector<double>>();
    } else if (key == "pu") {
      cfg.pu_grid = it->get<std::vector<double>>();
    } else if (key == "repeats") {
      cfg.repeats = it->get<int>();
    } else if (key == "n") {
      cfg.num_items = it->get<std::size_t>();
    } else if (key == "k") {
      cfg.num_users = it->get<int>();
    } else if (key == "l") {
      cfg.label_count = it->get<int>();
    } else if (key == "models") {
      cfg.models = parse_models(it->get<std::vector<std::string>>());
    } else if (key == "seed") {
      cfg.master_seed = it->get<std::uint64_t>();
      has_seed = true;
    } else if (key == "flip_mode") {
      cfg.flip_mode = parse_flip_mode(it->get<std::string>());
    } else if (key == "em") {
      apply_em_config(*it, cfg.em);
    } else {
      throw std::runtime_error("config: unknown field \"" + key + "\"");
    }
  }
  return has_seed;
}

struct CliArgs {
  // simulate
  surf::SimConfig sim;
  std::string truth_file;
  std::string flip_mode = "pairwise";
  std::string sim_out;

  // infer
  std::string model = "mv";
  std::string dataset_path;
  std::string result_out;
  bool with_posteriors = false;
  surf::EmOptions em;
  std::string em_mode = "hard";
  std::string adjustment = "literal";

  // sweep
  surf::SweepConfig sweep;
  std::vector<std::string> model_names;
  std::string config_path;
  std::string records_out;
  std::uint64_t sweep_seed = 0;
  std::string sweep_em_mode = "hard";
  std::string sweep_adjustment = "literal";

  // summarize
  std::string records_in;
  std::string summary_out;

  std::uint64_t ignored_seed = 0;  // --seed is accepted everywhere
};

int run_simulate(CliArgs& a) {
  if (!a.truth_file.empty()) {
    a.sim.truth_source = surf::TruthSource::label_file;
    a.sim.truth_file = a.truth_file;
  }
  a.sim.flip_mode = parse_flip_mode(a.flip_mode);
  const surf::FeedbackDataset ds = surf::generate_dataset(a.sim);
  surf::write_dataset_jsonl(ds, a.sim_out);
  std::cerr << "wrote " << ds.num_items() << " items (" << ds.num_feedback()
            << " feedback labels) to " << a.sim_out << "\n";
  return 0;
}

int run_infer(CliArgs& a) {
  const surf::Model model = parse_model(a.model);
  a.em.em_mode = parse_em_mode(a.em_mode);
  a.em.surf_adjustment_mode = parse_adjust_mode(a.adjustment);
  a.em.num_threads = env_workers();

  const surf::FeedbackDataset ds = surf::read_dataset_jsonl(a.dataset_path);
  const auto violations = surf::validate_dataset(ds);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw std::runtime_error("dataset " + a.dataset_path + " is invalid (item " +
                             std::to_string(v.item) + ", user " + std::to_string(v.user) +
                             "): " + v.reason +
                             (violations.size() > 1
                                  ? " (+" + std::to_string(violations.size() - 1) + " more)"
                                  : ""));
  }

  const surf::InferenceResult res = surf::run_model(ds, model, a.em);
  if (!a.result_out.empty()) {
    surf::write_result_json(res, a.result_out, a.with_posteriors);
  }
  if (ds.has_ground_truth()) {
    std::printf("accuracy: %.4f\n", surf::accuracy(res.hard_labels, ds.ground_truth()));
  }
  return 0;
}

int run_sweep_cmd(CliArgs& a, CLI::App* swp) {
  const bool seed_given = swp->count("--seed") > 0;
  bool has_seed = seed_given;
  if (!a.config_path.empty()) {
    // The file supplies defaults; flags given on the command line override it.
    surf::SweepConfig cfg;
    has_seed = apply_sweep_config(a.config_path, cfg) || seed_given;
    if (swp->count("--epsilon") == 0) a.sweep.epsilon_grid = cfg.epsilon_grid;
    if (swp->count("--m") == 0) a.sweep.m_grid = cfg.m_grid;
    if (swp->count("--pc") == 0) a.sweep.pc_grid = cfg.pc_grid;
    if (swp->count("--pu") == 0) a.sweep.pu_grid = cfg.pu_grid;
    if (swp->count("--repeats") == 0) a.sweep.repeats = cfg.repeats;
    if (swp->count("--n") == 0) a.sweep.num_items = cfg.num_items;
    if (swp->count("--k") == 0) a.sweep.num_users = cfg.num_users;
    if (swp->count("--l") == 0) a.sweep.label_count = cfg.label_count;
    if (swp->count("--models") == 0) a.sweep.models = cfg.models;
    if (swp->count("--max-iters") == 0) a.sweep.em.max_iterations = cfg.em.max_iterations;
    if (swp->count("--tol") == 0) a.sweep.em.convergence_tolerance = cfg.em.convergence_tolerance;
    if (swp->count("--alpha") == 0) a.sweep.em.smoothing_alpha = cfg.em.smoothing_alpha;
    if (swp->count("--em-mode") == 0) a.sweep.em.em_mode = cfg.em.em_mode;
    if (swp->count("--adjustment") == 0) {
      a.sweep.em.surf_adjustment_mode = cfg.em.surf_adjustment_mode;
    }
    a.sweep.flip_mode = cfg.flip_mode;
    a.sweep.em.epsilon_clamp = cfg.em.epsilon_clamp;
    if (!seed_given) a.sweep.master_seed = cfg.master_seed;
  }
  if (seed_given) a.sweep.master_seed = a.sweep_seed;
  if (swp->count("--em-mode") > 0) a.sweep.em.em_mode = parse_em_mode(a.sweep_em_mode);
  if (swp->count("--adjustment") > 0) {
    a.sweep.em.surf_adjustment_mode = parse_adjust_mode(a.sweep_adjustment);
  }
  if (swp->count("--models") > 0) a.sweep.models = parse_models(a.model_names);
  if (!has_seed) {
    std::cerr << "sweep: --seed is required (no wall-clock seeding)\n";
    return 1;
  }
  a.sweep.num_workers = env_workers();

  std::ofstream out(a.records_out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + a.records_out + " for writing");
  surf::CsvRecordSink sink(out);
  try {
    const surf::SweepCounts counts = surf::run_sweep(a.sweep, sink);
    std::cerr << "wrote " << counts.records << " records (" << counts.failures
              << " failures) to " << a.records_out << "\n";
  } catch (const std::exception& e) {
    out << "# PARTIAL OUTPUT: " << e.what() << "\n";
    throw;
  }
  return 0;
}

int run_summarize(CliArgs& a) {
  const auto records = surf::read_records_csv(a.records_in);
  const auto summaries = surf::summarize(records);
  if (!a.summary_out.empty()) {
    std::ofstream out(a.summary_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + a.summary_out + " for writing");
    surf::write_summary_csv(summaries, out);
  }
  surf::print_summary_table(summaries, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truth inference for classifier feedback: simulation, MV/DS/SURF, sweeps"};
  app.require_subcommand(1);
  CliArgs a;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic feedback dataset");
  sim->add_option("--n", a.sim.num_items, "number of items");
  sim->add_option("--k", a.sim.num_users, "number of users");
  sim->add_option("--m", a.sim.feedback_size, "users asked per item");
  sim->add_option("--pu", a.sim.user_error, "user error probability");
  sim->add_option("--pc", a.sim.classifier_error, "classifier error probability");
  sim->add_option("--epsilon", a.sim.busyness, "user busyness probability");
  sim->add_option("--l", a.sim.label_count, "label count");
  sim->add_option("--seed", a.sim.seed, "rng seed")->required();
  sim->add_option("--flip-mode", a.flip_mode, "pairwise|uniform");
  sim->add_option("--truth-file", a.truth_file, "IDX1 or text label file for ground truth");
  sim->add_option("--out", a.sim_out, "output dataset path")->required();

  auto* inf = app.add_subcommand("infer", "run a model on a dataset file");
  inf->add_option("--model", a.model, "mv|ds|surf")->required();
  inf->add_option("--dataset", a.dataset_path, "input dataset path")->required();
  inf->add_option("--out", a.result_out, "result JSON path");
  inf->add_flag("--posteriors", a.with_posteriors, "include posterior rows in the result");
  inf->add_option("--max-iters", a.em.max_iterations, "EM iteration cap");
  inf->add_option("--tol", a.em.convergence_tolerance, "posterior-change tolerance");
  inf->add_option("--alpha", a.em.smoothing_alpha, "count smoothing");
  inf->add_option("--em-mode", a.em_mode, "soft|hard");
  inf->add_option("--adjustment", a.adjustment, "literal|renormalized");
  inf->add_option("--seed", a.ignored_seed, "accepted for interface uniformity; unused");

  auto* swp = app.add_subcommand("sweep", "run the experiment grid to a records CSV");
  swp->add_option("--epsilon", a.sweep.epsilon_grid, "busyness grid")->delimiter(',');
  swp->add_option("--m", a.sweep.m_grid, "feedback-size grid")->delimiter(',');
  swp->add_option("--pc", a.sweep.pc_grid, "classifier-error grid")->delimiter(',');
  swp->add_option("--pu", a.sweep.pu_grid, "user-error grid")->delimiter(',');
  swp->add_option("--models", a.model_names, "subset of mv,ds,surf")->delimiter(',');
  swp->add_option("--repeats", a.sweep.repeats, "runs per cell");
  swp->add_option("--n", a.sweep.num_items, "items per run");
  swp->add_option("--k", a.sweep.num_users, "user pool size");
  swp->add_option("--l", a.sweep.label_count, "label count");
  swp->add_option("--seed", a.sweep_seed, "master seed");
  swp->add_option("--config", a.config_path, "JSON config mirroring the sweep fields");
  swp->add_option("--out", a.records_out, "records CSV path")->required();
  swp->add_option("--max-iters", a.sweep.em.max_iterations, "EM iteration cap");
  swp->add_option("--tol", a.sweep.em.convergence_tolerance, "posterior-change tolerance");
  swp->add_option("--alpha", a.sweep.em.smoothing_alpha, "count smoothing");
  swp->add_option("--em-mode", a.sweep_em_mode, "soft|hard");
  swp->add_option("--adjustment", a.sweep_adjustment, "literal|renormalized");

  auto* summ = app.add_subcommand("summarize", "per-cell mean/std of a records CSV");
  summ->add_option("--in", a.records_in, "records CSV path")->required();
  summ->add_option("--out", a.summary_out, "summary CSV path");
  summ->add_option("--seed", a.ignored_seed, "accepted for interface uniformity; unused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help/version exit 0, usage errors exit 1
  }

  try {
    if (sim->parsed()) return run_simulate(a);
    if (inf->parsed()) return run_infer(a);
    if (swp->parsed()) return run_sweep_cmd(a, swp);
    if (summ->parsed()) return run_summarize(a);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
