#include <filesystem>
#include <sstream>

#include "carnn/binary_io.hpp"
#include "carnn/error.hpp"
#include "commands.hpp"
#include "doctest.h"

using namespace carnn;
using namespace carnn::cli;

namespace {

std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("carnn_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// A small prepared run directory over a synthetic input-signal log.
RunConfig fixture(const std::string& name, SyntheticSignal signal = SyntheticSignal::input_ctx) {
  RunConfig cfg;
  cfg.out = scratch_dir(name);
  SyntheticSpec spec;
  spec.n_users = 20;
  spec.n_items = 16;
  spec.seq_len = 20;
  spec.signal = signal;
  cmd_synth(spec, cfg.out + "/log.tsv");
  cfg.dataset = cfg.out + "/log.tsv";
  cfg.format = LogFormat::tsv;
  cfg.scheme = "hour_of_day";
  cfg.d = 4;
  cfg.epochs = 2;
  cfg.lr = 0.05;
  return cfg;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::vector<const char*> argv = {"carnn"};
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

}  // namespace

TEST_CASE("config text round trip") {
  RunConfig a;
  a.dataset = "data/ratings.dat";
  a.scheme = "day_of_week,is_holiday";
  a.variant = Variant::transition;
  a.d = 17;
  a.lr = 0.1 + 0.2;
  a.ks = {2, 3, 50};
  a.shuffle = false;
  a.seed = 123456789012345ull;
  a.separate_prediction_banks = true;
  RunConfig b;
  b.apply_text(a.to_text());
  CHECK(b.to_text() == a.to_text());
  CHECK(b.lr == a.lr);
  CHECK(b.ks == a.ks);

  RunConfig c;
  c.apply_text("# comment\n\n d = 3 \nvariant=rnn\r\n");
  CHECK(c.d == 3);
  CHECK(c.variant == Variant::rnn);
  CHECK_THROWS_AS(c.set("nope", "1"), Error);
  CHECK_THROWS_AS(c.set("d", "three"), Error);
  CHECK_THROWS_AS(c.set("variant", "lstm"), Error);

  RunConfig bad;
  bad.ks = {10, 5};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.ks = {};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("variant switches") {
  RunConfig cfg;
  const auto s = ContextScheme::movielens();
  cfg.variant = Variant::rnn;
  auto m = cfg.model_config(10, s);
  CHECK(!m.use_input_contexts);
  CHECK(!m.use_transition_contexts);
  cfg.variant = Variant::input;
  m = cfg.model_config(10, s);
  CHECK(m.use_input_contexts);
  CHECK(!m.use_transition_contexts);
  CHECK(m.n_input_contexts == 168);
  CHECK(m.n_transition_bins == 32);
  cfg.variant = Variant::transition;
  m = cfg.model_config(10, s);
  CHECK(!m.use_input_contexts);
  CHECK(m.use_transition_contexts);
}

TEST_CASE("prepare is deterministic and writes stats") {
  auto cfg = fixture("prepare");
  std::ostringstream log;
  const auto data = cmd_prepare(cfg, log);
  const auto first = read_file(cfg.cache_path());
  cmd_prepare(cfg, log);
  CHECK(read_file(cfg.cache_path()) == first);
  CHECK(load_prepared(cfg) == data);
  CHECK(data.stats.users_before == 20);
  CHECK(data.stats.interactions_before == 400);
  CHECK(data.stats.test_positions == 20 * 4);
  CHECK(read_file(cfg.out + "/stats.txt").find("users_before=20\n") != std::string::npos);
  CHECK(data.split.data.annotated);
}

TEST_CASE("prepare on an empty file is a data error") {
  RunConfig cfg;
  cfg.out = scratch_dir("empty");
  cfg.dataset = cfg.out + "/empty.dat";
  write_file(cfg.dataset, "");
  std::ostringstream log;
  try {
    cmd_prepare(cfg, log);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
  CHECK(run({"prepare", "--dataset", cfg.dataset, "--out", cfg.out}) == exit_code(ErrorKind::data));
  CHECK(run({"prepare", "--dataset", cfg.out + "/missing.dat", "--out", cfg.out}) == exit_code(ErrorKind::io));
}

TEST_CASE("cache rejects corruption") {
  auto cfg = fixture("cache_corrupt");
  std::ostringstream log;
  cmd_prepare(cfg, log);
  auto bytes = read_file(cfg.cache_path());
  CHECK_THROWS_AS(deserialize_prepared(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(deserialize_prepared(bytes + "x"), Error);
  bytes[0] = 'X';
  CHECK_THROWS_AS(deserialize_prepared(bytes), Error);
}

TEST_CASE("train writes models that are deterministic per seed") {
  auto cfg = fixture("train");
  std::ostringstream log;
  cmd_prepare(cfg, log);
  cfg.variant = Variant::rnn;
  cmd_train(cfg, log);
  const auto model = load_model(cfg.model_path());
  CHECK(model.input_bank.size() == 1);
  CHECK(model.transition_bank.size() == 1);
  const auto bytes = read_file(cfg.model_path());
  // n_input_contexts and n_transition_bins as stored in the header
  ByteReader r(bytes);
  r.raw(4);
  r.u32();
  r.u32();
  r.u32();
  CHECK(r.u32() == 1);
  CHECK(r.u32() == 1);

  cmd_train(cfg, log);
  CHECK(read_file(cfg.model_path()) == bytes);
  cfg.seed = 99;
  cmd_train(cfg, log);
  CHECK(read_file(cfg.model_path()) != bytes);

  const auto csv = read_file(cfg.loss_csv_path());
  CHECK(csv.rfind("epoch,mean_pair_loss,wall_seconds\n", 0) == 0);
  RunConfig echoed = RunConfig::load(cfg.out + "/config.txt");
  CHECK(echoed.to_text() == cfg.to_text());

  cfg.variant = Variant::pop;
  CHECK_THROWS_AS(cmd_train(cfg, log), Error);
}

TEST_CASE("eval report round trip, pop without a model, mismatch") {
  auto cfg = fixture("eval");
  std::ostringstream log;
  cmd_prepare(cfg, log);
  cmd_train(cfg, log);
  const auto report = cmd_eval(cfg, log);
  CHECK(parse_report(read_file(cfg.out + "/metrics.txt")) == report);
  const auto table = log.str();
  CHECK(table.find("Recall@1") < table.find("F1@1"));
  CHECK(table.find("F1@10") < table.find("MAP"));
  CHECK(table.find("MAP") < table.find("NDCG"));
  for (int k : report.ks) CHECK(std::abs(report.f1_at.at(k) - 2.0 * report.recall_at.at(k) / (k + 1)) < 1e-12);

  // determinism of the report bytes
  const auto text = read_file(cfg.out + "/metrics.txt");
  cmd_eval(cfg, log);
  CHECK(read_file(cfg.out + "/metrics.txt") == text);

  RunConfig pop = cfg;
  pop.variant = Variant::pop;
  pop.model = cfg.out + "/no_such_model.bin";
  const auto pr = cmd_eval(pop, log);
  CHECK(pr == pop_baseline(load_prepared(cfg).split, cfg.ks));

  ModelConfig small = cfg.model_config(3, load_prepared(cfg).scheme);
  save_model(cfg.out + "/small.bin", init_params(small));
  RunConfig mismatch = cfg;
  mismatch.model = cfg.out + "/small.bin";
  try {
    cmd_eval(mismatch, log);
    FAIL("expected a compatibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::compatibility);
    const std::string what = e.what();
    CHECK(what.find("3") != std::string::npos);
    CHECK(what.find("16") != std::string::npos);
  }
}

TEST_CASE("predict") {
  auto cfg = fixture("predict");
  std::ostringstream log;
  const auto data = cmd_prepare(cfg, log);
  cmd_train(cfg, log);
  const auto p = load_model(cfg.model_path());
  const auto& seq = data.split.data.sequences[0];
  const std::string user = data.split.data.users.id(seq.user);
  const auto last = seq.steps.back().timestamp;

  const auto t = last + 2 * 86400 + 3600;
  const auto top1 = cmd_predict(cfg, user, t, 1, log);
  REQUIRE(top1.size() == 1);
  const HiddenState h = advance(HiddenState(p.dim()), seq.steps, p);
  const auto scores = score_all(h, input_context(t, data.scheme), transition_bin(t, last, data.scheme), p);
  const auto argmax = std::max_element(scores.begin(), scores.end()) - scores.begin();
  CHECK(top1[0].item == static_cast<std::uint32_t>(argmax));
  CHECK(top1[0].score == scores[top1[0].item]);

  const auto top5 = cmd_predict(cfg, user, t, 5, log);
  CHECK(top5.size() == 5);
  for (std::size_t i = 1; i < top5.size(); ++i) CHECK(top5[i - 1].score >= top5[i].score);
  // same context cell, same ranking
  const auto again = cmd_predict(cfg, user, t + 60, 5, log);
  for (std::size_t i = 0; i < 5; ++i) CHECK(again[i].item == top5[i].item);

  const auto far = last + 40 * 86400;
  CHECK(transition_bin(far, last, data.scheme) == 30);
  const auto far_scores = score_all(h, input_context(far, data.scheme), 30, p);
  const auto top_far = cmd_predict(cfg, user, far, 3, log);
  CHECK(top_far[0].score == far_scores[top_far[0].item]);

  try {
    cmd_predict(cfg, "nobody", t, 1, log);
    FAIL("expected a lookup error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::lookup);
  }
  CHECK_THROWS_AS(cmd_predict(cfg, user, last - 1, 1, log), Error);
  CHECK(run({"predict", "--out", cfg.out, "--scheme", "hour_of_day", "--user", "nobody", "--timestamp", "0"}) ==
        exit_code(ErrorKind::lookup));
}

TEST_CASE("gradcheck command") {
  RunConfig cfg;
  cfg.out = scratch_dir("gradcheck");
  std::ostringstream log;
  GradcheckOptions opts;
  const auto r = cmd_gradcheck(cfg, opts, log);
  CHECK(r.passed());
  CHECK(log.str().find("PASS") != std::string::npos);

  opts.corrupt = true;
  std::ostringstream bad;
  const auto rc = cmd_gradcheck(cfg, opts, bad);
  CHECK(!rc.passed());
  CHECK(rc.worst_bank == Bank::transition);
  CHECK(bad.str().find("worst=W[1] offset 0") != std::string::npos);

  opts.corrupt = false;
  opts.epsilon = 1e-4;
  std::ostringstream eps;
  CHECK(cmd_gradcheck(cfg, opts, eps).epsilon == 1e-4);
  CHECK(eps.str().find("epsilon=0.0001") != std::string::npos);

  CHECK(run({"gradcheck"}) == 0);
  std::string text;
  CHECK(run({"gradcheck", "--corrupt-gradient"}, &text) == 1);
  CHECK(text.find("FAIL") != std::string::npos);
  CHECK(run({"gradcheck", "--epsilon", "-1"}) == exit_code(ErrorKind::config));
}

TEST_CASE("sweep") {
  auto cfg = fixture("sweep");
  cfg.epochs = 1;
  std::ostringstream log;
  cmd_prepare(cfg, log);
  const auto rows = cmd_sweep(cfg, {2, 3}, {Variant::carnn, Variant::rnn, Variant::pop}, log);
  CHECK(rows.size() == 6);
  const auto csv = read_file(cfg.out + "/sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(csv.rfind("variant,d,status,recall@1", 0) == 0);

  // a failing cell is recorded and the rest still runs
  const auto mixed = cmd_sweep(cfg, {0, 2}, {Variant::input}, log);
  REQUIRE(mixed.size() == 2);
  CHECK(mixed[0].status.rfind("config", 0) == 0);
  CHECK(mixed[1].status == "ok");

  // a single-d sweep matches train + eval
  RunConfig single = cfg;
  single.d = 3;
  cmd_train(single, log);
  const auto report = cmd_eval(single, log);
  CHECK(cmd_sweep(cfg, {3}, {Variant::carnn}, log)[0].report == report);
}

TEST_CASE("command line flags") {
  auto cfg = fixture("flags");
  write_file(cfg.out + "/run.cfg", cfg.to_text());
  CHECK(run({"prepare", "--config", cfg.out + "/run.cfg"}) == 0);
  CHECK(run({"train", "--config", cfg.out + "/run.cfg", "--variant", "transition", "--epochs", "1"}) == 0);
  const auto echoed = RunConfig::load(cfg.out + "/config.txt");
  CHECK(echoed.variant == Variant::transition);
  CHECK(echoed.epochs == 1);
  CHECK(run({"eval", "--config", cfg.out + "/run.cfg", "--variant", "transition"}) == 0);
  CHECK(run({"train", "--config", cfg.out + "/run.cfg", "--lr", "abc"}) == exit_code(ErrorKind::config));
  CHECK(run({"train", "--config", cfg.out + "/missing.cfg"}) == exit_code(ErrorKind::io));
  CHECK(run({"bogus"}) != 0);
}

TEST_CASE("context model beats plain RNN on the planted input signal") {
  RunConfig cfg;
  cfg.out = scratch_dir("planted_sweep");
  SyntheticSpec spec;  // 50 users, 40 items, 4 contexts, strength 0.9, length 60
  spec.seed = 3;
  cmd_synth(spec, cfg.out + "/log.tsv");
  cfg.dataset = cfg.out + "/log.tsv";
  cfg.format = LogFormat::tsv;
  cfg.scheme = "hour_of_day";
  cfg.epochs = 30;
  cfg.seed = 3;
  std::ostringstream log;
  cmd_prepare(cfg, log);
  const auto rows = cmd_sweep(cfg, {4, 8, 12}, {Variant::carnn, Variant::rnn}, log);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    CAPTURE(rows[i].d);
    CHECK(rows[i].report.recall_at.at(1) >= rows[i + 3].report.recall_at.at(1));
  }
  CHECK(rows[1].report.recall_at.at(1) > rows[4].report.recall_at.at(1));
}
