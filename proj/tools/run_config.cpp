#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "carnn/binary_io.hpp"
#include "carnn/error.hpp"
#include "carnn/rng.hpp"

namespace carnn::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorKind::config, "bad value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::config, "bad boolean '" + std::string(v) + "' for " + std::string(key));
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  if (name == "carnn") return Variant::carnn;
  if (name == "input") return Variant::input;
  if (name == "transition") return Variant::transition;
  if (name == "rnn") return Variant::rnn;
  if (name == "pop") return Variant::pop;
  throw Error(ErrorKind::config, "unknown variant '" + std::string(name) + "'");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::carnn: return "carnn";
    case Variant::input: return "input";
    case Variant::transition: return "transition";
    case Variant::rnn: return "rnn";
    case Variant::pop: return "pop";
  }
  return "?";
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = trim(text.substr(0, comma));
    if (!item.empty()) out.push_back(parse_number<int>("list", item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

RunConfig RunConfig::load(const std::string& path) {
  RunConfig cfg;
  cfg.apply_text(read_file(path));
  return cfg;
}

void RunConfig::apply_text(std::string_view text) {
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::config, "config line without '=': " + std::string(line));
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(std::string_view key, std::string_view v) {
  if (key == "dataset") dataset = v;
  else if (key == "format") format = parse_log_format(v);
  else if (key == "scheme") { parse_factor_list(v); scheme = v; }
  else if (key == "holidays") holidays = v;
  else if (key == "max_interval_days") max_interval_days = parse_number<int>(key, v);
  else if (key == "timezone_offset") timezone_offset = parse_number<std::int64_t>(key, v);
  else if (key == "min_user") min_user = parse_number<std::size_t>(key, v);
  else if (key == "min_item") min_item = parse_number<std::size_t>(key, v);
  else if (key == "split_ratio") split_ratio = parse_number<double>(key, v);
  else if (key == "variant") variant = parse_variant(v);
  else if (key == "d") d = parse_number<std::size_t>(key, v);
  else if (key == "init_scale") init_scale = parse_number<double>(key, v);
  else if (key == "separate_prediction_banks") separate_prediction_banks = parse_bool(key, v);
  else if (key == "epochs") epochs = parse_number<int>(key, v);
  else if (key == "lr") lr = parse_number<double>(key, v);
  else if (key == "lambda") lambda = parse_number<double>(key, v);
  else if (key == "negatives") negatives = parse_number<int>(key, v);
  else if (key == "bptt_window") bptt_window = parse_number<std::size_t>(key, v);
  else if (key == "shuffle") shuffle = parse_bool(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "ks") ks = parse_int_list(v);
  else if (key == "eval_workers") eval_workers = parse_number<std::size_t>(key, v);
  else if (key == "out") out = v;
  else if (key == "cache") cache = v;
  else if (key == "model") model = v;
  else if (key == "loss_csv") loss_csv = v;
  else throw Error(ErrorKind::config, "unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::to_text() const {
  std::string ks_text;
  for (int k : ks) ks_text += (ks_text.empty() ? "" : ",") + std::to_string(k);
  std::string s;
  auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
  kv("dataset", dataset);
  kv("format", carnn::to_string(format));
  kv("scheme", scheme);
  kv("holidays", holidays);
  kv("max_interval_days", std::to_string(max_interval_days));
  kv("timezone_offset", std::to_string(timezone_offset));
  kv("min_user", std::to_string(min_user));
  kv("min_item", std::to_string(min_item));
  kv("split_ratio", fmt_double(split_ratio));
  kv("variant", cli::to_string(variant));
  kv("d", std::to_string(d));
  kv("init_scale", fmt_double(init_scale));
  kv("separate_prediction_banks", separate_prediction_banks ? "true" : "false");
  kv("epochs", std::to_string(epochs));
  kv("lr", fmt_double(lr));
  kv("lambda", fmt_double(lambda));
  kv("negatives", std::to_string(negatives));
  kv("bptt_window", std::to_string(bptt_window));
  kv("shuffle", shuffle ? "true" : "false");
  kv("seed", std::to_string(seed));
  kv("ks", ks_text);
  kv("eval_workers", std::to_string(eval_workers));
  kv("out", out);
  kv("cache", cache);
  kv("model", model);
  kv("loss_csv", loss_csv);
  return s;
}

void RunConfig::validate() const {
  if (ks.empty()) throw Error(ErrorKind::config, "ks must be non-empty");
  if (!std::is_sorted(ks.begin(), ks.end()) || ks.front() < 1) {
    throw Error(ErrorKind::config, "ks must be positive and sorted");
  }
  if (d < 1) throw Error(ErrorKind::config, "d must be >= 1");
  if (out.empty()) throw Error(ErrorKind::config, "out must be set");
  context_scheme().validate();
  train_config().validate();
}

std::string RunConfig::cache_path() const { return cache.empty() ? out + "/cache.bin" : cache; }
std::string RunConfig::model_path() const { return model.empty() ? out + "/model.bin" : model; }
std::string RunConfig::loss_csv_path() const { return loss_csv.empty() ? out + "/loss.csv" : loss_csv; }

ContextScheme RunConfig::context_scheme() const {
  ContextScheme s;
  s.factors = parse_factor_list(scheme);
  s.max_interval_days = max_interval_days;
  s.timezone_offset_seconds = timezone_offset;
  if (!holidays.empty()) s.holiday_days = load_holiday_file(holidays);
  return s;
}

ModelConfig RunConfig::model_config(std::size_t n_items, const ContextScheme& s) const {
  ModelConfig c;
  c.d = d;
  c.n_items = n_items;
  c.n_input_contexts = s.input_cardinality();
  c.n_transition_bins = s.transition_cardinality();
  c.use_input_contexts = variant == Variant::carnn || variant == Variant::input;
  c.use_transition_contexts = variant == Variant::carnn || variant == Variant::transition;
  c.separate_prediction_banks = separate_prediction_banks;
  c.seed = derive_seed(seed, "init");
  c.init_scale = init_scale;
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = lr;
  t.lambda = lambda;
  t.epochs = epochs;
  t.negatives_per_positive = negatives;
  t.bptt_window = bptt_window;
  t.seed = seed;
  t.shuffle = shuffle;
  return t;
}

}  // namespace carnn::cli
