#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "surf/inference.hpp"
#include "surf/simulate.hpp"

namespace surf {

/// Full experiment grid: every (epsilon, M, p_c, p_u) cell is simulated
/// `repeats` times and every selected model runs on the same dataset within a
/// run, so model comparisons are paired.
struct SweepConfig {
  std::vector<double> epsilon_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<int> m_grid{5, 10, 15};
  std::vector<double> pc_grid{0.25, 0.5, 0.75};
  std::vector<double> pu_grid{0.25, 0.5, 0.75};
  int repeats = 10;
  std::size_t num_items = 1000;  // N
  int num_users = 15;            // K
  int label_count = 10;          // L
  std::vector<Model> models{Model::mv, Model::ds, Model::surf};
  std::uint64_t master_seed = 0;
  FlipMode flip_mode = FlipMode::pairwise;
  EmOptions em;
  int num_workers = 1;  // cell-level worker pool (SURF_THREADS)

  void validate() const;
};

struct SweepRecord {
  double epsilon = 0.0;
  int m = 0;
  double pc = 0.0;
  double pu = 0.0;
  Model model = Model::mv;
  int run_index = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;  // NaN for failed runs
  int iterations = 0;
  bool converged = false;
};

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void append(const SweepRecord& record) = 0;
};

/// Streams records as CSV with the fixed header
/// epsilon,m,pc,pu,model,run,seed,accuracy,iterations,converged.
/// Doubles use shortest round-trip formatting.
class CsvRecordSink : public RecordSink {
 public:
  explicit CsvRecordSink(std::ostream& out);
  void append(const SweepRecord& record) override;

 private:
  std::ostream& out_;
};

class CollectSink : public RecordSink {
 public:
  void append(const SweepRecord& record) override { records.push_back(record); }
  std::vector<SweepRecord> records;
};

struct SweepCounts {
  std::size_t records = 0;
  std::size_t failures = 0;
};

/// Runs the whole grid. Cells x runs execute on a pool of `num_workers`
/// threads; records are buffered and appended to the sink in deterministic
/// (cell, run, model) order, so output bytes never depend on the worker
/// count. Per-run seeds are derived from the master seed and the cell
/// parameter values, so any sub-grid reproduces the corresponding rows of the
/// full grid. Model failures become records with accuracy = NaN.
SweepCounts run_sweep(const SweepConfig& cfg, RecordSink& sink);

std::vector<SweepRecord> read_records_csv(std::istream& in);
std::vector<SweepRecord> read_records_csv(const std::string& path);

struct CellSummary {
  double epsilon = 0.0;
  int m = 0;
  double pc = 0.0;
  double pu = 0.0;
  Model model = Model::mv;
  int n = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation (n-1)
};

/// Groups records by (epsilon, m, pc, pu, model) and reports mean and sample
/// standard deviation of accuracy. Failed (NaN) records are dropped; groups
/// left empty are omitted with a warning on stderr.
std::vector<CellSummary> summarize(std::span<const SweepRecord> records);

/// Header: epsilon,m,pc,pu,model,n,mean_acc,std_acc (full precision).
void write_summary_csv(std::span<const CellSummary> summaries, std::ostream& out);

/// Human-readable table, values rounded to 3 decimals.
void print_summary_table(std::span<const CellSummary> summaries, std::ostream& out);

}  // namespace surf
