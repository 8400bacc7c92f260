#include "carnn/model.hpp"

#include <random>

#include "carnn/binary_io.hpp"
#include "carnn/error.hpp"
#include "carnn/rng.hpp"

namespace carnn {

void ModelConfig::validate() const {
  if (d < 1) throw Error(ErrorKind::config, "d must be >= 1");
  if (n_items < 1) throw Error(ErrorKind::config, "n_items must be >= 1");
  if (n_input_contexts < 1 || n_transition_bins < 1) {
    throw Error(ErrorKind::config, "context cardinalities must be >= 1");
  }
  if (!(init_scale >= 0.0)) throw Error(ErrorKind::config, "init_scale must be >= 0");
}

const char* to_string(Bank bank) {
  switch (bank) {
    case Bank::items: return "R";
    case Bank::input: return "M";
    case Bank::transition: return "W";
    case Bank::prediction_input: return "M'";
    case Bank::prediction_transition: return "W'";
  }
  return "?";
}

ModelParams::ModelParams(ModelConfig cfg) : config(cfg) {
  config.validate();
  config.n_input_contexts = config.input_bank_size();
  config.n_transition_bins = config.transition_bank_size();
  items.assign(config.n_items * config.d, 0.0);
  input_bank.assign(config.n_input_contexts, Mat(config.d));
  transition_bank.assign(config.n_transition_bins, Mat(config.d));
  if (config.separate_prediction_banks) {
    prediction_input_bank.assign(config.n_input_contexts, Mat(config.d));
    prediction_transition_bank.assign(config.n_transition_bins, Mat(config.d));
  }
}

std::size_t ModelParams::input_slot(std::uint32_t ctx) const {
  if (!config.use_input_contexts) return 0;
  if (ctx >= input_bank.size()) {
    throw Error(ErrorKind::config, "input context " + std::to_string(ctx) + " out of range [0, " +
                                       std::to_string(input_bank.size()) + ")");
  }
  return ctx;
}

std::size_t ModelParams::transition_slot(std::uint32_t bin) const {
  if (!config.use_transition_contexts) return 0;
  if (bin >= transition_bank.size()) {
    throw Error(ErrorKind::config, "transition bin " + std::to_string(bin) + " out of range [0, " +
                                       std::to_string(transition_bank.size()) + ")");
  }
  return bin;
}

const Mat& ModelParams::prediction_input_matrix(std::uint32_t ctx) const {
  const auto slot = input_slot(ctx);
  return config.separate_prediction_banks ? prediction_input_bank[slot] : input_bank[slot];
}

const Mat& ModelParams::prediction_transition_matrix(std::uint32_t bin) const {
  const auto slot = transition_slot(bin);
  return config.separate_prediction_banks ? prediction_transition_bank[slot] : transition_bank[slot];
}

std::size_t ModelParams::parameter_count() const {
  const std::size_t mats = input_bank.size() + transition_bank.size() + prediction_input_bank.size() +
                           prediction_transition_bank.size();
  return items.size() + mats * config.d * config.d;
}

std::size_t ModelParams::block_count() const {
  return config.n_items + input_bank.size() + transition_bank.size() + prediction_input_bank.size() +
         prediction_transition_bank.size();
}

std::size_t ModelParams::block_id(Bank bank, std::size_t index) const {
  std::size_t base = 0;
  switch (bank) {
    case Bank::prediction_transition: base += prediction_input_bank.size(); [[fallthrough]];
    case Bank::prediction_input: base += transition_bank.size(); [[fallthrough]];
    case Bank::transition: base += input_bank.size(); [[fallthrough]];
    case Bank::input: base += config.n_items; [[fallthrough]];
    case Bank::items: break;
  }
  return base + index;
}

std::vector<BlockRef> ModelParams::blocks() {
  std::vector<BlockRef> out;
  out.reserve(block_count());
  for (std::size_t i = 0; i < config.n_items; ++i) out.push_back({Bank::items, i, item(i)});
  auto add_bank = [&](Bank b, std::vector<Mat>& bank) {
    for (std::size_t i = 0; i < bank.size(); ++i) out.push_back({b, i, bank[i].values()});
  };
  add_bank(Bank::input, input_bank);
  add_bank(Bank::transition, transition_bank);
  add_bank(Bank::prediction_input, prediction_input_bank);
  add_bank(Bank::prediction_transition, prediction_transition_bank);
  return out;
}

BlockRef ModelParams::block(std::size_t id) {
  if (id < config.n_items) return {Bank::items, id, item(id)};
  id -= config.n_items;
  for (auto [b, bank] : {std::pair{Bank::input, &input_bank}, std::pair{Bank::transition, &transition_bank},
                         std::pair{Bank::prediction_input, &prediction_input_bank},
                         std::pair{Bank::prediction_transition, &prediction_transition_bank}}) {
    if (id < bank->size()) return {b, id, (*bank)[id].values()};
    id -= bank->size();
  }
  throw Error(ErrorKind::config, "parameter block id out of range");
}

ConstBlockRef ModelParams::block(std::size_t id) const {
  const auto b = const_cast<ModelParams*>(this)->block(id);
  return {b.bank, b.index, b.values};
}

ModelParams init_params(const ModelConfig& config) {
  ModelParams p(config);
  if (config.init_scale == 0.0) return p;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> dist(-config.init_scale, config.init_scale);
  for (auto& block : p.blocks())
    for (double& x : block.values) x = dist(rng);
  return p;
}

Vec hidden_preactivation(std::span<const double> h_prev, std::uint32_t item, std::uint32_t ctx,
                         std::uint32_t bin, const ModelParams& p) {
  if (item >= p.n_items()) {
    throw Error(ErrorKind::config, "item index " + std::to_string(item) + " out of range");
  }
  Vec a = vec_mat(p.item(item), p.input_matrix(ctx));
  const Vec rec = vec_mat(h_prev, p.transition_matrix(bin));
  axpy(1.0, rec, a.values());
  return a;
}

HiddenState hidden_step(std::span<const double> h_prev, std::uint32_t item, std::uint32_t ctx,
                        std::uint32_t bin, const ModelParams& p) {
  Vec h = hidden_preactivation(h_prev, item, ctx, bin, p);
  if (p.config.activation == Activation::sigmoid) sigmoid_inplace(h.values());
  return h;
}

std::vector<HiddenState> forward_sequence(std::span<const Step> steps, const ModelParams& p) {
  std::vector<HiddenState> states;
  states.reserve(steps.size());
  Vec h(p.dim());
  for (const auto& s : steps) {
    h = hidden_step(h, s.item, s.input_context, s.transition_bin, p);
    states.push_back(h);
  }
  return states;
}

HiddenState advance(HiddenState h, std::span<const Step> steps, const ModelParams& p) {
  if (h.dim() == 0) h = Vec(p.dim());
  for (const auto& s : steps) h = hidden_step(h, s.item, s.input_context, s.transition_bin, p);
  return h;
}

double score(std::span<const double> h, std::uint32_t item, std::uint32_t next_ctx,
             std::uint32_t next_bin, const ModelParams& p) {
  if (item >= p.n_items()) {
    throw Error(ErrorKind::config, "item index " + std::to_string(item) + " out of range");
  }
  const Vec left = vec_mat(h, p.prediction_transition_matrix(next_bin));
  const Vec right = vec_mat(p.item(item), p.prediction_input_matrix(next_ctx));
  return dot(left, right);
}

std::vector<double> score_all(std::span<const double> h, std::uint32_t next_ctx, std::uint32_t next_bin,
                              const ModelParams& p) {
  const Vec left = vec_mat(h, p.prediction_transition_matrix(next_bin));
  const Vec q = vec_mat_t(left, p.prediction_input_matrix(next_ctx));
  std::vector<double> out(p.n_items());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = dot(p.item(v), q);
  return out;
}

namespace {

constexpr std::string_view kModelMagic = "CARN";

std::size_t expected_model_bytes(std::uint32_t version, std::size_t d, std::size_t n_items, std::size_t n_ic,
                                 std::size_t n_tb) {
  std::size_t mats = n_ic + n_tb;
  if (version == 2) mats *= 2;
  return 4 + 4 + 4 * 4 + 2 + 8 * (n_items * d + mats * d * d);
}

}  // namespace

std::string serialize_model(const ModelParams& p) {
  const auto& c = p.config;
  const std::uint32_t version = c.separate_prediction_banks ? 2 : 1;
  ByteWriter w;
  w.raw(kModelMagic);
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(c.d));
  w.u32(static_cast<std::uint32_t>(c.n_items));
  w.u32(static_cast<std::uint32_t>(p.input_bank.size()));
  w.u32(static_cast<std::uint32_t>(p.transition_bank.size()));
  w.u8(c.use_input_contexts ? 1 : 0);
  w.u8(c.use_transition_contexts ? 1 : 0);
  for (double x : p.items) w.f64(x);
  auto write_bank = [&](const std::vector<Mat>& bank) {
    for (const auto& m : bank)
      for (double x : m.values()) w.f64(x);
  };
  write_bank(p.input_bank);
  write_bank(p.transition_bank);
  if (version == 2) {
    write_bank(p.prediction_input_bank);
    write_bank(p.prediction_transition_bank);
  }
  return w.take();
}

ModelParams deserialize_model(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != kModelMagic) throw Error(ErrorKind::format, "not a model file (bad magic)");
  const auto version = r.u32();
  if (version != 1 && version != 2) {
    throw Error(ErrorKind::format, "unsupported model file version " + std::to_string(version));
  }
  ModelConfig c;
  c.d = r.u32();
  c.n_items = r.u32();
  c.n_input_contexts = r.u32();
  c.n_transition_bins = r.u32();
  c.use_input_contexts = r.u8() != 0;
  c.use_transition_contexts = r.u8() != 0;
  c.separate_prediction_banks = version == 2;
  c.init_scale = 0.0;
  const auto want = expected_model_bytes(version, c.d, c.n_items, c.n_input_contexts, c.n_transition_bins);
  if (bytes.size() != want) {
    throw Error(ErrorKind::format, "model file length " + std::to_string(bytes.size()) + " does not match header (" +
                                       std::to_string(want) + " bytes expected)");
  }
  ModelParams p(c);
  for (auto& block : p.blocks())
    for (double& x : block.values) x = r.f64();
  return p;
}

void save_model(const std::string& path, const ModelParams& p) { write_file(path, serialize_model(p)); }

ModelParams load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace carnn
