#include "surf/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <omp.h>

#include "surf/rng.hpp"

namespace surf {

void SweepConfig::validate() const {
  auto check_grid = [](const std::vector<double>& g, const char* name) {
    if (g.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (double v : g) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " grid value out of [0,1]");
      }
    }
  };
  check_grid(epsilon_grid, "epsilon");
  check_grid(pc_grid, "pc");
  check_grid(pu_grid, "pu");
  if (m_grid.empty()) throw std::invalid_argument("m grid is empty");
  for (int m : m_grid) {
    if (m < 1 || m > num_users) throw std::invalid_argument("m grid value outside 1..K");
  }
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (num_items < 1) throw std::invalid_argument("n must be >= 1");
  if (num_users < 1) throw std::invalid_argument("k must be >= 1");
  if (label_count < 2) throw std::invalid_argument("l must be >= 2");
  if (models.empty()) throw std::invalid_argument("no models selected");
  if (num_workers < 1) throw std::invalid_argument("num_workers must be >= 1");
  em.validate();
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

struct Cell {
  double epsilon;
  int m;
  double pc;
  double pu;
};

}  // namespace

CsvRecordSink::CsvRecordSink(std::ostream& out) : out_(out) {
  out_ << "epsilon,m,pc,pu,model,run,seed,accuracy,iterations,converged\n";
  if (!out_) throw std::runtime_error("record sink write failed");
}

void CsvRecordSink::append(const SweepRecord& r) {
  out_ << format_double(r.epsilon) << ',' << r.m << ',' << format_double(r.pc) << ','
       << format_double(r.pu) << ',' << to_string(r.model) << ',' << r.run_index << ','
       << r.seed << ',' << format_double(r.accuracy) << ',' << r.iterations << ','
       << (r.converged ? "true" : "false") << '\n';
  if (!out_) throw std::runtime_error("record sink write failed");
}

SweepCounts run_sweep(const SweepConfig& cfg, RecordSink& sink) {
  cfg.validate();

  std::vector<Cell> cells;
  for (double eps : cfg.epsilon_grid) {
    for (int m : cfg.m_grid) {
      for (double pc : cfg.pc_grid) {
        for (double pu : cfg.pu_grid) cells.push_back({eps, m, pc, pu});
      }
    }
  }

  const std::size_t runs = cells.size() * static_cast<std::size_t>(cfg.repeats);
  const std::size_t per_run = cfg.models.size();
  std::vector<SweepRecord> records(runs * per_run);
  std::size_t failures = 0;

#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.num_workers) \
    reduction(+ : failures)
  for (std::int64_t task = 0; task < static_cast<std::int64_t>(runs); ++task) {
    const Cell& cell = cells[static_cast<std::size_t>(task) / cfg.repeats];
    const int run = static_cast<int>(static_cast<std::size_t>(task) % cfg.repeats);

    const std::uint64_t seed = derive_seed(
        cfg.master_seed,
        {double_bits(cell.epsilon), static_cast<std::uint64_t>(cell.m),
         double_bits(cell.pc), double_bits(cell.pu), static_cast<std::uint64_t>(run)});

    SimConfig sim;
    sim.num_items = cfg.num_items;
    sim.num_users = cfg.num_users;
    sim.feedback_size = cell.m;
    sim.user_error = cell.pu;
    sim.classifier_error = cell.pc;
    sim.busyness = cell.epsilon;
    sim.label_count = cfg.label_count;
    sim.seed = seed;
    sim.flip_mode = cfg.flip_mode;

    const FeedbackDataset ds = generate_dataset(sim);

    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
      SweepRecord rec;
      rec.epsilon = cell.epsilon;
      rec.m = cell.m;
      rec.pc = cell.pc;
      rec.pu = cell.pu;
      rec.model = cfg.models[mi];
      rec.run_index = run;
      rec.seed = seed;
      try {
        const InferenceResult res = run_model(ds, cfg.models[mi], cfg.em);
        rec.accuracy = accuracy(res.hard_labels, ds.ground_truth());
        rec.iterations = res.iterations;
        rec.converged = res.converged;
      } catch (const std::exception&) {
        // Failures are data, not crashes; they surface as NaN-accuracy rows.
        rec.accuracy = std::nan("");
        rec.iterations = 0;
        rec.converged = false;
        ++failures;
      }
      records[static_cast<std::size_t>(task) * per_run + mi] = rec;
    }
  }

  for (const auto& rec : records) sink.append(rec);
  return {records.size(), failures};
}

namespace {

double parse_double(const std::string& field, std::size_t line) {
  // from_chars parses "nan" for failed records as well as plain numbers.
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error("records line " + std::to_string(line) +
                             ": bad number \"" + field + "\"");
  }
  return v;
}

std::int64_t parse_int(const std::string& field, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error("records line " + std::to_string(line) +
                             ": bad integer \"" + field + "\"");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& field, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error("records line " + std::to_string(line) +
                             ": bad seed \"" + field + "\"");
  }
  return v;
}

}  // namespace

std::vector<SweepRecord> read_records_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error("empty records file");
  ++line_no;
  if (line != "epsilon,m,pc,pu,model,run,seed,accuracy,iterations,converged") {
    throw std::runtime_error("records file has unexpected header: " + line);
  }

  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') continue;  // partial-output marker
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 10) {
      throw std::runtime_error("records line " + std::to_string(line_no) +
                               ": expected 10 fields, got " + std::to_string(fields.size()));
    }
    SweepRecord r;
    r.epsilon = parse_double(fields[0], line_no);
    r.m = static_cast<int>(parse_int(fields[1], line_no));
    r.pc = parse_double(fields[2], line_no);
    r.pu = parse_double(fields[3], line_no);
    auto model = model_from_string(fields[4]);
    if (!model) {
      throw std::runtime_error("records line " + std::to_string(line_no) +
                               ": unknown model \"" + fields[4] + "\"");
    }
    r.model = *model;
    r.run_index = static_cast<int>(parse_int(fields[5], line_no));
    r.seed = parse_u64(fields[6], line_no);
    r.accuracy = parse_double(fields[7], line_no);
    r.iterations = static_cast<int>(parse_int(fields[8], line_no));
    if (fields[9] != "true" && fields[9] != "false") {
      throw std::runtime_error("records line " + std::to_string(line_no) +
                               ": bad converged flag \"" + fields[9] + "\"");
    }
    r.converged = fields[9] == "true";
    out.push_back(r);
  }
  return out;
}

std::vector<SweepRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records_csv(in);
}

std::vector<CellSummary> summarize(std::span<const SweepRecord> records) {
  using Key = std::tuple<double, int, double, double, int>;
  std::map<Key, std::vector<double>> groups;
  std::map<Key, std::size_t> dropped;
  for (const auto& r : records) {
    Key key{r.epsilon, r.m, r.pc, r.pu, static_cast<int>(r.model)};
    if (std::isnan(r.accuracy)) {
      groups.try_emplace(key);
      ++dropped[key];
    } else {
      groups[key].push_back(r.accuracy);
    }
  }

  std::vector<CellSummary> out;
  for (const auto& [key, accs] : groups) {
    const auto& [eps, m, pc, pu, model] = key;
    if (accs.empty()) {
      std::cerr << "warning: cell (epsilon=" << eps << ", m=" << m << ", pc=" << pc
                << ", pu=" << pu << ", model=" << to_string(static_cast<Model>(model))
                << ") has no successful runs; omitted\n";
      continue;
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    if (accs.size() > 1) {
      for (double a : accs) var += (a - mean) * (a - mean);
      var /= static_cast<double>(accs.size() - 1);
    }
    CellSummary s;
    s.epsilon = eps;
    s.m = m;
    s.pc = pc;
    s.pu = pu;
    s.model = static_cast<Model>(model);
    s.n = static_cast<int>(accs.size());
    s.mean_acc = mean;
    s.std_acc = std::sqrt(var);
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(std::span<const CellSummary> summaries, std::ostream& out) {
  out << "epsilon,m,pc,pu,model,n,mean_acc,std_acc\n";
  for (const auto& s : summaries) {
    out << format_double(s.epsilon) << ',' << s.m << ',' << format_double(s.pc) << ','
        << format_double(s.pu) << ',' << to_string(s.model) << ',' << s.n << ','
        << format_double(s.mean_acc) << ',' << format_double(s.std_acc) << '\n';
  }
  if (!out) throw std::runtime_error("summary write failed");
}

void print_summary_table(std::span<const CellSummary> summaries, std::ostream& out) {
  char buf[128];
  out << "epsilon  m   pc    pu    model  n   accuracy\n";
  for (const auto& s : summaries) {
    std::snprintf(buf, sizeof(buf), "%-8g %-3d %-5g %-5g %-6s %-3d %.3f±%.3f\n",
                  s.epsilon, s.m, s.pc, s.pu, std::string(to_string(s.model)).c_str(),
                  s.n, s.mean_acc, s.std_acc);
    out << buf;
  }
}

}  // namespace surf
