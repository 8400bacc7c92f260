#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carnn/data.hpp"
#include "carnn/linalg.hpp"

namespace carnn {

/// Identity exists only as a test hook for gradient checking.
enum class Activation { sigmoid, identity };

struct ModelConfig {
  std::size_t d = 10;
  std::size_t n_items = 0;
  std::size_t n_input_contexts = 1;
  std::size_t n_transition_bins = 1;
  bool use_input_contexts = true;
  bool use_transition_contexts = true;
  /// Scoring uses its own M'/W' banks instead of the hidden-layer ones.
  bool separate_prediction_banks = false;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
  Activation activation = Activation::sigmoid;

  void validate() const;
  /// A switched-off context family collapses to a single shared matrix.
  std::size_t input_bank_size() const { return use_input_contexts ? n_input_contexts : 1; }
  std::size_t transition_bank_size() const { return use_transition_contexts ? n_transition_bins : 1; }

  bool operator==(const ModelConfig&) const = default;
};

enum class Bank { items, input, transition, prediction_input, prediction_transition };

const char* to_string(Bank bank);

/// A contiguous parameter group: one item row or one d×d matrix.
struct BlockRef {
  Bank bank;
  std::size_t index;
  std::span<double> values;
};

struct ConstBlockRef {
  Bank bank;
  std::size_t index;
  std::span<const double> values;
};

struct ModelParams {
  ModelConfig config;
  std::vector<double> items;  // n_items × d, row-major
  std::vector<Mat> input_bank;
  std::vector<Mat> transition_bank;
  std::vector<Mat> prediction_input_bank;       // empty unless separate_prediction_banks
  std::vector<Mat> prediction_transition_bank;  // empty unless separate_prediction_banks

  ModelParams() = default;
  /// All-zero parameters with bank shapes from `config`. Switched-off
  /// context families are normalized to cardinality 1.
  explicit ModelParams(ModelConfig config);

  std::size_t dim() const { return config.d; }
  std::size_t n_items() const { return config.n_items; }

  std::span<const double> item(std::size_t i) const { return {items.data() + i * config.d, config.d}; }
  std::span<double> item(std::size_t i) { return {items.data() + i * config.d, config.d}; }

  /// Bank slot selected by a context id, honoring the ablation switches.
  /// Out-of-range ids raise a config error.
  std::size_t input_slot(std::uint32_t ctx) const;
  std::size_t transition_slot(std::uint32_t bin) const;

  const Mat& input_matrix(std::uint32_t ctx) const { return input_bank[input_slot(ctx)]; }
  const Mat& transition_matrix(std::uint32_t bin) const { return transition_bank[transition_slot(bin)]; }
  const Mat& prediction_input_matrix(std::uint32_t ctx) const;
  const Mat& prediction_transition_matrix(std::uint32_t bin) const;

  std::size_t parameter_count() const;

  /// Item rows, then M, W, M', W' matrices, in declaration order. The
  /// position in this list is the block id.
  std::vector<BlockRef> blocks();
  std::size_t block_count() const;
  std::size_t block_id(Bank bank, std::size_t index) const;
  BlockRef block(std::size_t id);
  ConstBlockRef block(std::size_t id) const;

  bool operator==(const ModelParams&) const = default;
};

/// Uniform [-init_scale, init_scale] draws from a generator seeded by config.seed.
ModelParams init_params(const ModelConfig& config);

using HiddenState = Vec;

/// Pre-activation of one recurrence step: r_item·M_ctx + h_prev·W_bin.
Vec hidden_preactivation(std::span<const double> h_prev, std::uint32_t item, std::uint32_t ctx,
                         std::uint32_t bin, const ModelParams& p);

HiddenState hidden_step(std::span<const double> h_prev, std::uint32_t item, std::uint32_t ctx,
                        std::uint32_t bin, const ModelParams& p);

/// Hidden states h_1..h_L from h_0 = 0.
std::vector<HiddenState> forward_sequence(std::span<const Step> steps, const ModelParams& p);

/// Hidden state after consuming `steps`, starting from `h` (zero if empty).
HiddenState advance(HiddenState h, std::span<const Step> steps, const ModelParams& p);

/// y = h·W'_bin·(r_item·M'_ctx)ᵀ
double score(std::span<const double> h, std::uint32_t item, std::uint32_t next_ctx,
             std::uint32_t next_bin, const ModelParams& p);

/// Scores for every item, via q = h·W'_bin·M'_ctxᵀ and R·qᵀ.
std::vector<double> score_all(std::span<const double> h, std::uint32_t next_ctx, std::uint32_t next_bin,
                              const ModelParams& p);

// Model file: "CARN", u32 version, u32 d, n_items, n_input_contexts,
// n_transition_bins, u8 use_input, u8 use_transition, then R, M bank, W bank
// as little-endian f64. Version 2 appends the M' and W' banks.
std::string serialize_model(const ModelParams& p);
ModelParams deserialize_model(std::string_view bytes);
void save_model(const std::string& path, const ModelParams& p);
ModelParams load_model(const std::string& path);

}  // namespace carnn
