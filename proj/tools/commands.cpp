#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <random>

#include "carnn/binary_io.hpp"
#include "carnn/context.hpp"
#include "carnn/error.hpp"
#include "carnn/rng.hpp"

namespace carnn::cli {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory '" + dir + "': " + ec.message());
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

void echo_config(const RunConfig& cfg) {
  ensure_dir(cfg.out);
  write_file(cfg.out + "/config.txt", cfg.to_text());
}

// Context cardinalities the model was trained with must match the cache
// before any index is looked up.
void check_compatible(const ModelParams& p, const PreparedData& data) {
  if (p.n_items() != data.split.data.n_items()) {
    throw Error(ErrorKind::compatibility, "model has " + std::to_string(p.n_items()) + " items, cache has " +
                                              std::to_string(data.split.data.n_items()));
  }
  const auto& c = p.config;
  if (c.use_input_contexts && c.n_input_contexts != data.scheme.input_cardinality()) {
    throw Error(ErrorKind::compatibility, "model has " + std::to_string(c.n_input_contexts) +
                                              " input contexts, cache scheme has " +
                                              std::to_string(data.scheme.input_cardinality()));
  }
  if (c.use_transition_contexts && c.n_transition_bins != data.scheme.transition_cardinality()) {
    throw Error(ErrorKind::compatibility, "model has " + std::to_string(c.n_transition_bins) +
                                              " transition bins, cache scheme has " +
                                              std::to_string(data.scheme.transition_cardinality()));
  }
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

}  // namespace

PreparedData cmd_prepare(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.dataset.empty()) throw Error(ErrorKind::config, "dataset path is not set");
  if (!std::filesystem::exists(cfg.dataset)) throw Error(ErrorKind::io, "dataset '" + cfg.dataset + "' does not exist");

  const auto raw = parse_interactions(cfg.dataset, cfg.format);
  PreparedData data;
  data.stats = raw_stats(raw);
  data.scheme = cfg.context_scheme();
  data.split_ratio = cfg.split_ratio;

  SequenceSet seqs;
  try {
    seqs = build_sequences(raw, cfg.min_user, cfg.min_item);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (" + std::to_string(data.stats.interactions_before) +
                              " interactions read, " + std::to_string(data.stats.rejects) + " lines rejected)");
  }
  data.split = split_sequences(annotate_sequences(std::move(seqs), data.scheme), cfg.split_ratio);
  data.stats.users_after = data.split.data.users.size();
  data.stats.items_after = data.split.data.n_items();
  data.stats.interactions_after = data.split.data.n_interactions();
  data.stats.train_steps = data.split.n_train_steps();
  data.stats.test_positions = data.split.n_test_positions();

  const auto cache = cfg.cache_path();
  ensure_parent(cache);
  write_file(cache, serialize_prepared(data));
  echo_config(cfg);
  const auto stats = format_stats(data.stats);
  write_file(cfg.out + "/stats.txt", stats);
  log << stats;
  return data;
}

PreparedData load_prepared(const RunConfig& cfg) { return deserialize_prepared(read_file(cfg.cache_path())); }

TrainResult train_variant(const PreparedData& data, const RunConfig& cfg, std::ostream* log) {
  if (cfg.variant == Variant::pop) throw Error(ErrorKind::config, "variant pop has no trainable parameters");
  TrainResult r;
  r.params = init_params(cfg.model_config(data.split.data.n_items(), data.scheme));
  r.trace = train(data.split, r.params, cfg.train_config(), [&](const EpochRecord& e) {
    if (log) *log << "epoch " << e.epoch << " mean_pair_loss " << fmt("%.6f", e.mean_pair_loss) << "\n";
  });
  return r;
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto data = load_prepared(cfg);
  auto r = train_variant(data, cfg, &log);
  const auto model = cfg.model_path();
  ensure_parent(model);
  save_model(model, r.params);
  const auto loss = cfg.loss_csv_path();
  ensure_parent(loss);
  write_loss_csv(loss, r.trace);
  echo_config(cfg);
  return r;
}

MetricsReport cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto data = load_prepared(cfg);
  MetricsReport report;
  if (cfg.variant == Variant::pop) {
    report = pop_baseline(data.split, cfg.ks);
  } else {
    const auto p = load_model(cfg.model_path());
    check_compatible(p, data);
    report = carnn::evaluate(data.split, p, cfg.ks, cfg.eval_workers);
  }
  echo_config(cfg);
  write_file(cfg.out + "/metrics.txt", format_report(report));
  log << format_report_table(report, to_string(cfg.variant));
  return report;
}

std::vector<Recommendation> cmd_predict(const RunConfig& cfg, const std::string& user, std::int64_t timestamp,
                                        std::size_t k, std::ostream& log) {
  cfg.validate();
  if (k < 1) throw Error(ErrorKind::config, "k must be >= 1");
  const auto data = load_prepared(cfg);
  const auto p = load_model(cfg.model_path());
  check_compatible(p, data);

  const auto uid = data.split.data.users.find(user);
  if (!uid) throw Error(ErrorKind::lookup, "unknown user '" + user + "'");
  const auto& seqs = data.split.data.sequences;
  const auto it = std::find_if(seqs.begin(), seqs.end(), [&](const UserSequence& s) { return s.user == *uid; });
  if (it == seqs.end()) throw Error(ErrorKind::lookup, "user '" + user + "' has no cached sequence");

  const auto& steps = it->steps;
  const HiddenState h = advance(HiddenState(p.dim()), steps, p);
  std::optional<std::int64_t> last;
  if (!steps.empty()) last = steps.back().timestamp;
  const auto ctx = input_context(timestamp, data.scheme);
  const auto bin = transition_bin(timestamp, last, data.scheme);
  const auto scores = score_all(h, ctx, bin, p);

  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });

  std::vector<Recommendation> out;
  log << "# user=" << user << " timestamp=" << timestamp << " input_context=" << ctx << " transition_bin=" << bin
      << "\n";
  for (std::size_t r = 0; r < k; ++r) {
    const auto v = order[r];
    out.push_back({v, data.split.data.items.id(v), scores[v]});
    log << r + 1 << "\t" << out.back().id << "\t" << fmt("%.17g", scores[v]) << "\n";
  }
  return out;
}

GradientCheckReport cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opts, std::ostream& log) {
  if (!(opts.epsilon > 0.0)) throw Error(ErrorKind::config, "epsilon must be > 0");
  ModelConfig mc;
  mc.d = 3;
  mc.n_items = 5;
  mc.n_input_contexts = 2;
  mc.n_transition_bins = 3;
  mc.init_scale = 0.5;
  mc.seed = derive_seed(cfg.seed, "init");
  mc.separate_prediction_banks = cfg.separate_prediction_banks;
  const auto p = init_params(mc);

  Rng rng(derive_seed(cfg.seed, "synthetic"));
  std::uniform_int_distribution<std::uint32_t> item(0, 4), ctx(0, 1), bin(0, 2);
  std::vector<Step> steps;
  for (int k = 0; k < 6; ++k) steps.push_back({item(rng), k * 3600, ctx(rng), bin(rng)});

  GradientTamper tamper;
  if (opts.corrupt) tamper = [](GradientBuffer& g) { g.transition(1)(0, 0) += 1e-3; };
  const auto r = gradient_check(p, steps, cfg.train_config(), opts.epsilon, tamper);

  log << "epsilon=" << fmt("%.3g", r.epsilon) << "\n"
      << "coordinates=" << r.n_coordinates << "\n"
      << "max_relative_error=" << fmt("%.3e", r.max_relative_error) << "\n"
      << "mean_relative_error=" << fmt("%.3e", r.mean_relative_error) << "\n"
      << "worst=" << to_string(r.worst_bank) << "[" << r.worst_block << "] offset " << r.worst_offset
      << " analytic=" << fmt("%.10g", r.worst_analytic) << " numeric=" << fmt("%.10g", r.worst_numeric) << "\n"
      << (r.passed(opts.tolerance) ? "PASS" : "FAIL") << "\n";
  return r;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows, const std::vector<int>& ks) {
  std::string out = "variant,d,status";
  for (int k : ks) out += ",recall@" + std::to_string(k);
  for (int k : ks) out += ",f1@" + std::to_string(k);
  out += ",map,ndcg\n";
  for (const auto& row : rows) {
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out += std::string(to_string(row.variant)) + "," + std::to_string(row.d) + "," + status;
    const bool ok = row.status == "ok";
    for (int k : ks) out += "," + (ok ? fmt("%.17g", row.report.recall_at.at(k)) : std::string());
    for (int k : ks) out += "," + (ok ? fmt("%.17g", row.report.f1_at.at(k)) : std::string());
    out += "," + (ok ? fmt("%.17g", row.report.map_score) : std::string());
    out += "," + (ok ? fmt("%.17g", row.report.ndcg) : std::string());
    out += "\n";
  }
  return out;
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::vector<int>& d_values,
                                const std::vector<Variant>& variants, std::ostream& log) {
  cfg.validate();
  if (d_values.empty() || variants.empty()) throw Error(ErrorKind::config, "sweep needs d values and variants");
  const auto data = load_prepared(cfg);
  std::vector<SweepRow> rows;
  for (auto v : variants) {
    for (int d : d_values) {
      SweepRow row;
      row.variant = v;
      row.d = static_cast<std::size_t>(std::max(d, 0));
      try {
        if (d < 1) throw Error(ErrorKind::config, "d must be >= 1");
        RunConfig cell = cfg;
        cell.variant = v;
        cell.d = row.d;
        if (v == Variant::pop) {
          row.report = pop_baseline(data.split, cfg.ks);
        } else {
          const auto trained = train_variant(data, cell);
          row.report = carnn::evaluate(data.split, trained.params, cfg.ks, cfg.eval_workers);
        }
        row.status = "ok";
      } catch (const Error& e) {
        row.status = std::string(to_string(e.kind())) + ": " + e.what();
      }
      log << to_string(v) << " d=" << d << " " << row.status << "\n";
      rows.push_back(std::move(row));
    }
  }
  echo_config(cfg);
  write_file(cfg.out + "/sweep.csv", format_sweep_csv(rows, cfg.ks));
  return rows;
}

SyntheticData cmd_synth(const SyntheticSpec& spec, const std::string& path) {
  auto data = generate_synthetic(spec);
  std::string out = "user\titem\ttimestamp\n";
  for (const auto& seq : data.sequences.sequences) {
    for (const auto& s : seq.steps) {
      out += data.sequences.users.id(seq.user) + "\t" + data.sequences.items.id(s.item) + "\t" +
             std::to_string(s.timestamp) + "\n";
    }
  }
  ensure_parent(path);
  write_file(path, out);
  return data;
}

}  // namespace carnn::cli
