#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "carnn/context.hpp"
#include "carnn/data.hpp"

namespace carnn::cli {

struct DatasetStats {
  std::size_t users_before = 0;
  std::size_t items_before = 0;
  std::size_t interactions_before = 0;
  std::size_t rejects = 0;
  std::size_t users_after = 0;
  std::size_t items_after = 0;
  std::size_t interactions_after = 0;
  std::size_t train_steps = 0;
  std::size_t test_positions = 0;

  bool operator==(const DatasetStats&) const = default;
};

DatasetStats raw_stats(const InteractionLog& log);
std::string format_stats(const DatasetStats& stats);

/// Prepared data: annotated split, the scheme that produced it, and stats.
struct PreparedData {
  ContextScheme scheme;
  double split_ratio = 0.8;
  SplitSet split;
  DatasetStats stats;

  bool operator==(const PreparedData&) const = default;
};

// Cache file: "CRNC", u32 version 1, then scheme, ratio, stats, vocabularies,
// and every sequence with its train length and annotated steps.
std::string serialize_prepared(const PreparedData& data);
PreparedData deserialize_prepared(std::string_view bytes);

}  // namespace carnn::cli
