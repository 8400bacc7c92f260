#include <ostream>

#include "CLI11.hpp"
#include "carnn/error.hpp"
#include "commands.hpp"

namespace carnn::cli {

namespace {

std::vector<Variant> parse_variant_list(const std::string& text) {
  std::vector<Variant> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    if (comma > start) out.push_back(parse_variant(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware recurrent recommender: prepare, train, eval, predict, gradcheck, sweep"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  // Flags that map one-to-one onto config keys, applied after the config file.
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--seed", "seed"},       {"--variant", "variant"}, {"--d", "d"},           {"--epochs", "epochs"},
      {"--lr", "lr"},           {"--lambda", "lambda"},   {"--out", "out"},       {"--dataset", "dataset"},
      {"--format", "format"},   {"--scheme", "scheme"},   {"--cache", "cache"},   {"--model", "model"},
  };
  std::map<std::string, std::string> flag_values;
  app.add_option("--config", config_path, "key=value config file");
  for (const auto& [flag, key] : flag_keys) app.add_option(flag, flag_values[key], "config key " + key);
  app.add_option("--set", overrides, "extra key=value override (repeatable)");

  auto* prepare = app.add_subcommand("prepare", "parse, filter, split and annotate a log into a cache");
  auto* train = app.add_subcommand("train", "train a model from the cache");
  auto* eval = app.add_subcommand("eval", "evaluate a model (or pop) on the test split");

  auto* predict = app.add_subcommand("predict", "top-k items for a user at a timestamp");
  std::string user;
  std::int64_t timestamp = 0;
  std::size_t k = 10;
  predict->add_option("--user", user, "user id as it appears in the log")->required();
  predict->add_option("--timestamp", timestamp, "Unix seconds")->required();
  predict->add_option("--k", k, "number of items to list");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of backprop on a tiny model");
  GradcheckOptions gc;
  gradcheck->add_option("--epsilon", gc.epsilon, "central difference step");
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt, "test hook: perturb one analytic gradient entry");

  auto* sweep = app.add_subcommand("sweep", "train and evaluate variants over hidden sizes");
  std::string d_values = "5,10,15,20";
  std::string variants = "carnn,input,transition,rnn";
  sweep->add_option("--d-values", d_values, "comma-separated hidden sizes");
  sweep->add_option("--variants", variants, "comma-separated variants");

  auto* synth = app.add_subcommand("synth", "write a synthetic TSV log with a planted signal");
  SyntheticSpec spec;
  std::string signal = "input_ctx", synth_path;
  synth->add_option("--signal", signal, "none|input_ctx|transition_bin");
  synth->add_option("--users", spec.n_users);
  synth->add_option("--items", spec.n_items);
  synth->add_option("--seq-len", spec.seq_len);
  synth->add_option("--contexts", spec.n_contexts);
  synth->add_option("--strength", spec.signal_strength);
  synth->add_option("--path", synth_path, "output TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::config);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::load(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::config, "--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [flag, key] : flag_keys) {
      if (app.get_option(flag)->count() > 0) cfg.set(key, flag_values[key]);
    }

    if (prepare->parsed()) {
      cmd_prepare(cfg, out);
    } else if (train->parsed()) {
      cmd_train(cfg, out);
    } else if (eval->parsed()) {
      cmd_eval(cfg, out);
    } else if (predict->parsed()) {
      cmd_predict(cfg, user, timestamp, k, out);
    } else if (gradcheck->parsed()) {
      if (!cmd_gradcheck(cfg, gc, out).passed(gc.tolerance)) return 1;
    } else if (sweep->parsed()) {
      cmd_sweep(cfg, parse_int_list(d_values), parse_variant_list(variants), out);
    } else if (synth->parsed()) {
      spec.signal = parse_synthetic_signal(signal);
      spec.seed = cfg.seed;
      cmd_synth(spec, synth_path);
      out << "wrote " << synth_path << " (prepare with --scheme hour_of_day --format tsv)\n";
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return 0;
}

}  // namespace carnn::cli
