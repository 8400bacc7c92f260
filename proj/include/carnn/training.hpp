#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "carnn/data.hpp"
#include "carnn/model.hpp"
#include "carnn/rng.hpp"

namespace carnn {

struct TrainConfig {
  double learning_rate = 0.01;
  double lambda = 0.01;
  int epochs = 10;
  int negatives_per_positive = 1;
  /// Steps back that gradients flow through the recurrence; 0 is unlimited.
  std::size_t bptt_window = 0;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

/// One BPR pair: the step at `position` (0-based) is predicted from the
/// hidden state before it, under that step's own contexts.
struct TrainingExample {
  std::size_t position = 0;
  std::uint32_t positive = 0;
  std::uint32_t negative = 0;
  std::uint32_t input_context = 0;
  std::uint32_t transition_bin = 0;
};

/// ln(1 + e^{-(y_pos - y_neg)}), stable for any margin.
double bpr_pair_loss(double y_pos, double y_neg);

/// Uniform over all items except `positive`.
std::uint32_t sample_negative(Rng& rng, std::uint32_t positive, std::size_t n_items);

std::vector<TrainingExample> make_examples(std::span<const Step> steps, Rng& rng, std::size_t n_items,
                                           int negatives_per_positive = 1);

/// Gradient accumulator shaped like a ModelParams. Tracks which blocks (item
/// rows and matrices) a backward pass touched so clearing and lazy
/// regularization only visit those.
class GradientBuffer {
 public:
  explicit GradientBuffer(const ModelParams& shape);

  std::span<double> item(std::size_t i);
  Mat& input(std::size_t slot);
  Mat& transition(std::size_t slot);
  /// Resolves to the shared hidden-layer bank unless the model keeps
  /// separate prediction banks.
  Mat& prediction_input(std::size_t slot);
  Mat& prediction_transition(std::size_t slot);

  const ModelParams& values() const { return grad_; }
  ModelParams& values() { return grad_; }
  bool touched(std::size_t block_id) const { return flags_[block_id] != 0; }
  const std::vector<std::size_t>& touched_blocks() const { return touched_; }

  void clear();

 private:
  void mark(std::size_t block_id);

  ModelParams grad_;
  std::vector<char> flags_;
  std::vector<std::size_t> touched_;
};

/// Adds the gradient of the summed pair losses over `examples` (no
/// regularizer) into `out` by backpropagation through time, and returns
/// that summed loss.
double accumulate_gradients(std::span<const Step> steps, std::span<const TrainingExample> examples,
                            const ModelParams& p, const TrainConfig& cfg, GradientBuffer& out);

GradientBuffer backprop_sequence(std::span<const Step> steps, std::span<const TrainingExample> examples,
                                 const ModelParams& p, const TrainConfig& cfg);

/// Summed pair loss of `examples` under `p`, by forward evaluation only.
double sequence_loss(std::span<const Step> steps, std::span<const TrainingExample> examples,
                     const ModelParams& p);

/// θ ← θ − lr·(g + λθ) on touched blocks only. A non-finite gradient raises
/// a numerical error naming the bank, before any parameter changes.
void sgd_step(ModelParams& p, const GradientBuffer& g, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double mean_pair_loss = 0.0;
  double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Per-sequence SGD over the train prefixes of `split`. Returns the mean pair
/// loss of every epoch; parameters are updated in place.
std::vector<EpochRecord> train(const SplitSet& split, ModelParams& p, const TrainConfig& cfg,
                               const EpochCallback& on_epoch = {});

std::string format_loss_csv(std::span<const EpochRecord> trace);
void write_loss_csv(const std::string& path, std::span<const EpochRecord> trace);

struct GradientCheckReport {
  double epsilon = 0.0;
  double max_relative_error = 0.0;
  double mean_relative_error = 0.0;
  std::size_t n_coordinates = 0;
  // Coordinate with the largest error.
  Bank worst_bank = Bank::items;
  std::size_t worst_block = 0;
  std::size_t worst_offset = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tolerance = 1e-4) const { return max_relative_error < tolerance; }
};

/// Hook applied to the analytic gradient before comparison (negative controls).
using GradientTamper = std::function<void(GradientBuffer&)>;

/// Compares backprop gradients against central differences on every
/// parameter coordinate, with negatives frozen from cfg.seed.
GradientCheckReport gradient_check(const ModelParams& p, std::span<const Step> steps, const TrainConfig& cfg,
                                   double epsilon = 1e-5, const GradientTamper& tamper = {});

}  // namespace carnn
