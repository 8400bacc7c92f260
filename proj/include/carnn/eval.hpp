#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carnn/context.hpp"
#include "carnn/data.hpp"
#include "carnn/model.hpp"

namespace carnn {

struct RankRecord {
  std::size_t sequence = 0;
  std::size_t position = 0;  // index of the test step within its sequence
  std::size_t rank = 0;      // 1-based

  bool operator==(const RankRecord&) const = default;
};

struct MetricsReport {
  std::vector<int> ks;
  std::map<int, double> recall_at;
  std::map<int, double> f1_at;
  double map_score = 0.0;
  double ndcg = 0.0;
  std::size_t n_positions = 0;

  bool operator==(const MetricsReport&) const = default;
};

inline const std::vector<int> kDefaultKs = {1, 5, 10};

/// 1 + #items scoring strictly higher + #equal-scored items with a lower index.
std::size_t rank_target(std::span<const double> scores, std::size_t target);

/// With one relevant item per query, precision@k = hits/k, so the harmonic
/// mean with recall collapses to 2·R/(k+1).
double f1_from_recall(double recall, int k);

/// Aggregates ranks: Recall@k, F1@k, MAP (mean 1/rank), NDCG (mean 1/log2(rank+1)).
MetricsReport summarize_ranks(std::span<const std::size_t> ranks, std::span<const int> ks = kDefaultKs);

/// Teacher-forced ranking of every test position: the train prefix primes
/// the hidden state, each test step is ranked under its own contexts, then
/// consumed. Sequences are split across `workers` threads; record order is
/// independent of the worker count.
std::vector<RankRecord> rank_test_positions(const SplitSet& split, const ModelParams& p, std::size_t workers = 1);

MetricsReport evaluate(const SplitSet& split, const ModelParams& p, std::span<const int> ks = kDefaultKs,
                       std::size_t workers = 1);

/// Training-set item frequencies.
std::vector<double> item_popularity(const SplitSet& split);

/// Ranks every test position by training popularity.
MetricsReport pop_baseline(const SplitSet& split, std::span<const int> ks = kDefaultKs);

/// key=value lines, doubles printed to round-trip exactly.
std::string format_report(const MetricsReport& report);
MetricsReport parse_report(std::string_view text);
/// Console table: Recall@1/5/10, F1@1/5/10, MAP, NDCG.
std::string format_report_table(const MetricsReport& report, std::string_view label);

enum class SyntheticSignal { none, input_ctx, transition_bin };

SyntheticSignal parse_synthetic_signal(std::string_view name);

struct SyntheticSpec {
  std::size_t n_users = 50;
  std::size_t n_items = 40;
  std::size_t seq_len = 60;
  std::size_t n_contexts = 4;
  SyntheticSignal signal = SyntheticSignal::input_ctx;
  double signal_strength = 0.9;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  SequenceSet sequences;  // unannotated
  ContextScheme scheme;
  /// planted[u][k]: the context value (input context or gap bin) that drove step k.
  std::vector<std::vector<std::uint32_t>> planted;
  /// Items [partition_begin(c), partition_begin(c+1)) belong to context value c.
  std::size_t partition_begin(std::size_t c) const;
  std::size_t n_items = 0;
  std::size_t n_contexts = 0;
};

/// Sequences whose items follow a planted context partition. Input-context
/// signal encodes the context as the hour of day; transition signal encodes
/// it as the whole-day gap to the previous event.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace carnn
