#include "carnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "carnn/binary_io.hpp"
#include "carnn/error.hpp"

namespace carnn {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(ErrorKind::config, "learning_rate must be >= 0");
  if (!(lambda >= 0.0)) throw Error(ErrorKind::config, "lambda must be >= 0");
  if (epochs < 1) throw Error(ErrorKind::config, "epochs must be >= 1");
  if (negatives_per_positive < 1) throw Error(ErrorKind::config, "negatives_per_positive must be >= 1");
}

double bpr_pair_loss(double y_pos, double y_neg) {
  const double x = y_pos - y_neg;
  if (x < -30.0) return -x;  // log1p(e^{-x}) = -x + log1p(e^{x}), and e^{x} < 1e-13
  return std::log1p(std::exp(-x));
}

std::uint32_t sample_negative(Rng& rng, std::uint32_t positive, std::size_t n_items) {
  if (n_items < 2) throw Error(ErrorKind::config, "negative sampling needs at least 2 items");
  std::uniform_int_distribution<std::uint32_t> dist(0, static_cast<std::uint32_t>(n_items - 2));
  const auto v = dist(rng);
  return v >= positive ? v + 1 : v;
}

std::vector<TrainingExample> make_examples(std::span<const Step> steps, Rng& rng, std::size_t n_items,
                                           int negatives_per_positive) {
  std::vector<TrainingExample> out;
  out.reserve(steps.size() * static_cast<std::size_t>(negatives_per_positive));
  for (std::size_t j = 0; j < steps.size(); ++j) {
    for (int n = 0; n < negatives_per_positive; ++n) {
      out.push_back({j, steps[j].item, sample_negative(rng, steps[j].item, n_items), steps[j].input_context,
                     steps[j].transition_bin});
    }
  }
  return out;
}

GradientBuffer::GradientBuffer(const ModelParams& shape)
    : grad_(shape.config), flags_(grad_.block_count(), 0) {}

void GradientBuffer::mark(std::size_t block_id) {
  if (!flags_[block_id]) {
    flags_[block_id] = 1;
    touched_.push_back(block_id);
  }
}

std::span<double> GradientBuffer::item(std::size_t i) {
  mark(grad_.block_id(Bank::items, i));
  return grad_.item(i);
}

Mat& GradientBuffer::input(std::size_t slot) {
  mark(grad_.block_id(Bank::input, slot));
  return grad_.input_bank[slot];
}

Mat& GradientBuffer::transition(std::size_t slot) {
  mark(grad_.block_id(Bank::transition, slot));
  return grad_.transition_bank[slot];
}

Mat& GradientBuffer::prediction_input(std::size_t slot) {
  if (!grad_.config.separate_prediction_banks) return input(slot);
  mark(grad_.block_id(Bank::prediction_input, slot));
  return grad_.prediction_input_bank[slot];
}

Mat& GradientBuffer::prediction_transition(std::size_t slot) {
  if (!grad_.config.separate_prediction_banks) return transition(slot);
  mark(grad_.block_id(Bank::prediction_transition, slot));
  return grad_.prediction_transition_bank[slot];
}

void GradientBuffer::clear() {
  for (auto id : touched_) {
    auto b = grad_.block(id);
    std::fill(b.values.begin(), b.values.end(), 0.0);
    flags_[id] = 0;
  }
  touched_.clear();
}

namespace {

double activation_derivative(double h, Activation a) { return a == Activation::sigmoid ? h * (1.0 - h) : 1.0; }

// Backward through recurrence step j given dL/dh_{j+1} (the state step j
// produces); returns dL/dh_j.
Vec backward_step(std::size_t j, std::span<const double> d_out, std::span<const Step> steps,
                  const std::vector<HiddenState>& states, const Vec& zero, const ModelParams& p,
                  GradientBuffer& out) {
  const auto& s = steps[j];
  const auto& h_out = states[j];
  const auto& h_in = j == 0 ? zero : states[j - 1];
  Vec delta(p.dim());
  for (std::size_t i = 0; i < delta.dim(); ++i) delta[i] = d_out[i] * activation_derivative(h_out[i], p.config.activation);

  const auto in_slot = p.input_slot(s.input_context);
  const auto tr_slot = p.transition_slot(s.transition_bin);
  add_outer(out.input(in_slot), p.item(s.item), delta);
  axpy(1.0, vec_mat_t(delta, p.input_bank[in_slot]), out.item(s.item));
  add_outer(out.transition(tr_slot), h_in, delta);
  return vec_mat_t(delta, p.transition_bank[tr_slot]);
}

}  // namespace

double accumulate_gradients(std::span<const Step> steps, std::span<const TrainingExample> examples,
                            const ModelParams& p, const TrainConfig& cfg, GradientBuffer& out) {
  const std::size_t L = steps.size();
  const std::size_t d = p.dim();
  const auto states = forward_sequence(steps, p);
  const Vec zero(d);
  auto state_before = [&](std::size_t j) -> const Vec& { return j == 0 ? zero : states[j - 1]; };

  // dh[j]: gradient w.r.t. the hidden state before step j, from scoring only.
  std::vector<Vec> dh(L, Vec(d));
  double loss = 0.0;
  for (const auto& e : examples) {
    const auto& h = state_before(e.position);
    const auto ctx_slot = p.input_slot(e.input_context);
    const auto bin_slot = p.transition_slot(e.transition_bin);
    const Mat& Wp = p.prediction_transition_matrix(e.transition_bin);
    const Mat& Mp = p.prediction_input_matrix(e.input_context);

    const Vec left = vec_mat(h, Wp);
    const Vec q_pos = vec_mat(p.item(e.positive), Mp);
    const Vec q_neg = vec_mat(p.item(e.negative), Mp);
    const double margin = dot(left, q_pos) - dot(left, q_neg);
    loss += bpr_pair_loss(margin, 0.0);
    const double g = -sigmoid(-margin);  // dℓ/d(margin)

    const Vec dq = q_pos - q_neg;
    axpy(g, vec_mat_t(dq, Wp), dh[e.position].values());
    add_outer(out.prediction_transition(bin_slot), h, dq, g);
    const Vec dr = vec_mat_t(left, Mp);
    axpy(g, dr, out.item(e.positive));
    axpy(-g, dr, out.item(e.negative));
    const Vec dr_diff = Vec(p.item(e.positive)) - Vec(p.item(e.negative));
    add_outer(out.prediction_input(ctx_slot), dr_diff, left, g);
  }

  if (L == 0) return loss;
  const std::size_t window = cfg.bptt_window == 0 ? L : cfg.bptt_window;
  if (window >= L) {
    // Full sweep: carry dL/dh backwards once, adding each position's scoring term.
    Vec carry(d);
    for (std::size_t j = L; j-- > 0;) {
      // carry holds dL/dh_{j+1} from positions after j; add the direct term.
      if (j + 1 < L) axpy(1.0, dh[j + 1].values(), carry.values());
      carry = backward_step(j, carry, steps, states, zero, p, out);
    }
  } else {
    // Truncated: each position's gradient flows back at most `window` steps.
    for (std::size_t j = 1; j < L; ++j) {
      Vec carry = dh[j];
      const std::size_t stop = j > window ? j - window : 0;
      for (std::size_t s = j; s-- > stop;) carry = backward_step(s, carry, steps, states, zero, p, out);
    }
  }
  return loss;
}

GradientBuffer backprop_sequence(std::span<const Step> steps, std::span<const TrainingExample> examples,
                                 const ModelParams& p, const TrainConfig& cfg) {
  GradientBuffer g(p);
  accumulate_gradients(steps, examples, p, cfg, g);
  return g;
}

double sequence_loss(std::span<const Step> steps, std::span<const TrainingExample> examples,
                     const ModelParams& p) {
  const auto states = forward_sequence(steps, p);
  const Vec zero(p.dim());
  double loss = 0.0;
  for (const auto& e : examples) {
    const auto& h = e.position == 0 ? zero : states[e.position - 1];
    loss += bpr_pair_loss(score(h, e.positive, e.input_context, e.transition_bin, p),
                          score(h, e.negative, e.input_context, e.transition_bin, p));
  }
  return loss;
}

void sgd_step(ModelParams& p, const GradientBuffer& g, const TrainConfig& cfg) {
  const auto& grad = g.values();
  for (auto id : g.touched_blocks()) {
    const auto gb = grad.block(id);
    if (!all_finite(gb.values)) {
      throw Error(ErrorKind::numerical, std::string("non-finite gradient in bank ") + to_string(gb.bank) + "[" +
                                            std::to_string(gb.index) + "]");
    }
  }
  for (auto id : g.touched_blocks()) {
    const auto gb = grad.block(id);
    auto pb = p.block(id);
    for (std::size_t i = 0; i < pb.values.size(); ++i) {
      pb.values[i] -= cfg.learning_rate * (gb.values[i] + cfg.lambda * pb.values[i]);
    }
  }
}

std::vector<EpochRecord> train(const SplitSet& split, ModelParams& p, const TrainConfig& cfg,
                               const EpochCallback& on_epoch) {
  cfg.validate();
  if (!split.data.annotated) throw Error(ErrorKind::data, "training needs an annotated split");
  if (split.data.n_items() != p.n_items()) {
    throw Error(ErrorKind::compatibility, "model has " + std::to_string(p.n_items()) + " items, data has " +
                                              std::to_string(split.data.n_items()));
  }
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng negative_rng(derive_seed(cfg.seed, "negatives"));
  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  GradientBuffer grad(p);
  std::vector<EpochRecord> trace;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss = 0.0;
    std::size_t n_pairs = 0;
    for (auto u : order) {
      const auto steps = split.train_steps(u);
      if (steps.empty()) continue;
      const auto examples = make_examples(steps, negative_rng, p.n_items(), cfg.negatives_per_positive);
      grad.clear();
      loss += accumulate_gradients(steps, examples, p, cfg, grad);
      n_pairs += examples.size();
      try {
        sgd_step(p, grad, cfg);
      } catch (const Error& e) {
        throw Error(e.kind(), "epoch " + std::to_string(epoch) + ", user " +
                                  split.data.users.id(split.data.sequences[u].user) + ": " + e.what());
      }
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    EpochRecord rec{epoch, n_pairs ? loss / static_cast<double>(n_pairs) : 0.0, elapsed.count()};
    trace.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return trace;
}

std::string format_loss_csv(std::span<const EpochRecord> trace) {
  std::string out = "epoch,mean_pair_loss,wall_seconds\n";
  char buf[96];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.3f\n", r.epoch, r.mean_pair_loss, r.wall_seconds);
    out += buf;
  }
  return out;
}

void write_loss_csv(const std::string& path, std::span<const EpochRecord> trace) {
  write_file(path, format_loss_csv(trace));
}

GradientCheckReport gradient_check(const ModelParams& p, std::span<const Step> steps, const TrainConfig& cfg,
                                   double epsilon, const GradientTamper& tamper) {
  Rng rng(derive_seed(cfg.seed, "negatives"));
  const auto examples = make_examples(steps, rng, p.n_items(), cfg.negatives_per_positive);

  TrainConfig full = cfg;
  full.bptt_window = 0;
  GradientBuffer analytic = backprop_sequence(steps, examples, p, full);
  if (tamper) tamper(analytic);

  GradientCheckReport report;
  report.epsilon = epsilon;
  ModelParams probe = p;
  double sum = 0.0;
  for (std::size_t id = 0; id < probe.block_count(); ++id) {
    auto block = probe.block(id);
    const auto agrad = analytic.values().block(id);
    for (std::size_t k = 0; k < block.values.size(); ++k) {
      const double saved = block.values[k];
      block.values[k] = saved + epsilon;
      const double up = sequence_loss(steps, examples, probe);
      block.values[k] = saved - epsilon;
      const double down = sequence_loss(steps, examples, probe);
      block.values[k] = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = agrad.values[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      sum += rel;
      ++report.n_coordinates;
      if (rel > report.max_relative_error || report.n_coordinates == 1) {
        report.max_relative_error = rel;
        report.worst_bank = block.bank;
        report.worst_block = block.index;
        report.worst_offset = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.mean_relative_error = report.n_coordinates ? sum / static_cast<double>(report.n_coordinates) : 0.0;
  return report;
}

}  // namespace carnn
