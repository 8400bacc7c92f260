#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cache.hpp"
#include "carnn/eval.hpp"
#include "carnn/model.hpp"
#include "carnn/training.hpp"
#include "run_config.hpp"

namespace carnn::cli {

/// Reads the dataset, filters, splits, and annotates it. Writes the cache,
/// stats.txt, and config.txt under the output directory.
PreparedData cmd_prepare(const RunConfig& cfg, std::ostream& log);

PreparedData load_prepared(const RunConfig& cfg);

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> trace;
};

/// Trains cfg.variant on prepared data (no files written).
TrainResult train_variant(const PreparedData& data, const RunConfig& cfg, std::ostream* log = nullptr);

/// Trains from the cache and writes the model file, loss CSV, and config.txt.
TrainResult cmd_train(const RunConfig& cfg, std::ostream& log);

/// Scores the test positions with the model file (or the popularity
/// baseline for variant pop). Writes metrics.txt and prints the table.
MetricsReport cmd_eval(const RunConfig& cfg, std::ostream& log);

struct Recommendation {
  std::uint32_t item = 0;
  std::string id;
  double score = 0.0;
};

/// Forwards every cached event of `user`, then scores all items for an
/// interaction at `timestamp`. Ties go to the lower item index.
std::vector<Recommendation> cmd_predict(const RunConfig& cfg, const std::string& user, std::int64_t timestamp,
                                        std::size_t k, std::ostream& log);

struct GradcheckOptions {
  double epsilon = 1e-5;
  bool corrupt = false;  // perturbs one analytic W[1] entry; negative control
  double tolerance = 1e-4;
};

/// Gradient check on a tiny model (d=3, 5 items, 2 input contexts,
/// 3 transition bins, one length-6 sequence) seeded from cfg.seed.
GradientCheckReport cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opts, std::ostream& log);

struct SweepRow {
  Variant variant = Variant::carnn;
  std::size_t d = 0;
  std::string status;  // "ok" or "<error kind>: <message>"
  MetricsReport report;
};

/// Trains and evaluates every variant at every d. A failing cell is
/// recorded in its row and the sweep moves on. Writes sweep.csv.
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::vector<int>& d_values,
                                const std::vector<Variant>& variants, std::ostream& log);

std::string format_sweep_csv(const std::vector<SweepRow>& rows, const std::vector<int>& ks);

/// Writes a synthetic interaction log as TSV (user, item, timestamp).
SyntheticData cmd_synth(const SyntheticSpec& spec, const std::string& path);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace carnn::cli
