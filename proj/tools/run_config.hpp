#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "carnn/context.hpp"
#include "carnn/data.hpp"
#include "carnn/model.hpp"
#include "carnn/training.hpp"

namespace carnn::cli {

enum class Variant { carnn, input, transition, rnn, pop };

Variant parse_variant(std::string_view name);
const char* to_string(Variant v);

/// Everything a run needs, loaded from a key=value file and overridden from
/// the command line. to_text() writes every key, so the echoed file
/// reproduces the run when fed back in.
struct RunConfig {
  std::string dataset;
  LogFormat format = LogFormat::movielens_dat;
  std::string scheme = "movielens";
  std::string holidays;
  int max_interval_days = 30;
  std::int64_t timezone_offset = 0;
  std::size_t min_user = 10;
  std::size_t min_item = 3;
  double split_ratio = 0.8;

  Variant variant = Variant::carnn;
  std::size_t d = 10;
  double init_scale = 0.1;
  bool separate_prediction_banks = false;

  int epochs = 10;
  double lr = 0.01;
  double lambda = 0.01;
  int negatives = 1;
  std::size_t bptt_window = 0;
  bool shuffle = true;
  std::uint64_t seed = 1;

  std::vector<int> ks = {1, 5, 10};
  std::size_t eval_workers = 1;
  std::string out = "run";
  std::string cache;     // default: <out>/cache.bin
  std::string model;     // default: <out>/model.bin
  std::string loss_csv;  // default: <out>/loss.csv

  static RunConfig load(const std::string& path);
  void apply_text(std::string_view text);
  void set(std::string_view key, std::string_view value);
  std::string to_text() const;
  void validate() const;

  std::string cache_path() const;
  std::string model_path() const;
  std::string loss_csv_path() const;

  ContextScheme context_scheme() const;
  ModelConfig model_config(std::size_t n_items, const ContextScheme& scheme) const;
  TrainConfig train_config() const;
};

std::vector<int> parse_int_list(std::string_view text);

}  // namespace carnn::cli
