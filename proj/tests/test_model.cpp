#include <cmath>
#include <random>

#include "carnn/error.hpp"
#include "carnn/model.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace carnn;

namespace {

ModelParams scalar_model(double r, double m, double w) {
  ModelConfig c;
  c.d = 1;
  c.n_items = 1;
  ModelParams p(c);
  p.items[0] = r;
  p.input_bank[0](0, 0) = m;
  p.transition_bank[0](0, 0) = w;
  return p;
}

}  // namespace

TEST_CASE("init_params") {
  ModelConfig c;
  c.d = 10;
  c.n_items = 100;
  c.n_input_contexts = 42;
  c.n_transition_bins = 32;
  c.seed = 3;
  const auto a = init_params(c);
  CHECK(a.parameter_count() == 8400);
  CHECK(serialize_model(init_params(c)) == serialize_model(a));
  for (double x : a.items) CHECK(std::abs(x) <= 0.1);

  c.init_scale = 0.0;
  const auto z = init_params(c);
  for (double x : z.items) CHECK(x == 0.0);
  for (const auto& m : z.input_bank) CHECK(m == Mat(10));

  auto plain = c;
  plain.use_input_contexts = false;
  plain.use_transition_contexts = false;
  const ModelParams pp(plain);
  CHECK(pp.input_bank.size() == 1);
  CHECK(pp.transition_bank.size() == 1);
  CHECK(pp.config.n_input_contexts == 1);
  CHECK(pp.parameter_count() == 1000 + 200);
}

TEST_CASE("hidden_step") {
  ModelConfig c = testing::tiny_config();
  auto p = init_params(c);
  std::fill(p.items.begin(), p.items.end(), 0.0);
  const auto h = hidden_step(Vec(3), 2, 1, 0, p);
  for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == 0.5);

  const auto s = scalar_model(1.0, 2.0, -1.0);
  const auto h1 = hidden_step(Vec{0.5}, 0, 0, 0, s);
  CHECK(h1[0] == doctest::Approx(0.8175744761936437).epsilon(1e-14));
}

TEST_CASE("hidden_step range checks follow the ablation switches") {
  auto c = testing::tiny_config();
  const auto p = init_params(c);
  CHECK_THROWS_AS(hidden_step(Vec(3), 0, 2, 0, p), Error);
  CHECK_THROWS_AS(hidden_step(Vec(3), 0, 0, 3, p), Error);
  CHECK_THROWS_AS(hidden_step(Vec(3), 5, 0, 0, p), Error);
  c.use_input_contexts = false;
  c.use_transition_contexts = false;
  const auto plain = init_params(c);
  CHECK_NOTHROW(hidden_step(Vec(3), 0, 99, 99, plain));
}

TEST_CASE("score") {
  auto p = init_params(testing::tiny_config());
  for (std::uint32_t v = 0; v < 5; ++v) CHECK(score(Vec(3), v, 1, 2, p) == 0.0);
  // Items 1 and 3 share an embedding.
  std::copy(p.item(1).begin(), p.item(1).end(), p.item(3).begin());
  const Vec h{0.2, 0.7, 0.4};
  CHECK(score(h, 1, 0, 1, p) == score(h, 3, 0, 1, p));

  // d=1: h·W'·(r·M')ᵀ = 1·2·(3·1)
  const auto s = scalar_model(3.0, 1.0, 2.0);
  CHECK(score(Vec{1.0}, 0, 0, 0, s) == 6.0);
}

TEST_CASE("score_all agrees with per-item scoring") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = testing::tiny_config(static_cast<std::uint64_t>(trial));
    c.n_items = 3 + trial % 9;
    c.separate_prediction_banks = trial % 3 == 0;
    const auto p = init_params(c);
    const auto steps = testing::random_steps(rng, 4, c.n_items, 2, 3);
    const auto h = forward_sequence(steps, p).back();
    const auto all = score_all(h, 1, 2, p);
    REQUIRE(all.size() == c.n_items);
    std::size_t best_loop = 0;
    for (std::uint32_t v = 0; v < c.n_items; ++v) {
      const double y = score(h, v, 1, 2, p);
      CHECK(std::abs(all[v] - y) < 1e-9);
      if (y > score(h, static_cast<std::uint32_t>(best_loop), 1, 2, p)) best_loop = v;
    }
    CHECK(std::max_element(all.begin(), all.end()) - all.begin() == static_cast<std::ptrdiff_t>(best_loop));
  }
  const auto p = init_params(testing::tiny_config());
  for (double y : score_all(Vec(3), 0, 0, p)) CHECK(y == 0.0);
}

TEST_CASE("forward_sequence") {
  const auto p = init_params(testing::tiny_config());
  CHECK(forward_sequence({}, p).empty());

  Rng rng(8);
  auto steps = testing::random_steps(rng, 3, 5, 2, 3);
  const auto one = forward_sequence(std::span(steps).first(1), p);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == hidden_step(Vec(3), steps[0].item, steps[0].input_context, steps[0].transition_bin, p));

  const auto base = forward_sequence(steps, p);
  CHECK(base.size() == 3);
  auto changed = steps;
  changed[0].item = (changed[0].item + 1) % 5;
  CHECK(forward_sequence(changed, p)[2] != base[2]);
}

TEST_CASE("hidden states stay inside (0,1) and forward is causal") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = testing::tiny_config(static_cast<std::uint64_t>(100 + trial));
    c.init_scale = 3.0;
    const auto p = init_params(c);
    auto steps = testing::random_steps(rng, 8, 5, 2, 3);
    const auto states = forward_sequence(steps, p);
    for (const auto& h : states)
      for (std::size_t i = 0; i < h.dim(); ++i) CHECK((h[i] > 0.0 && h[i] < 1.0));

    const std::size_t k = static_cast<std::size_t>(trial % 7);
    auto tail = steps;
    for (std::size_t j = k + 1; j < tail.size(); ++j) tail[j] = {static_cast<std::uint32_t>((j * 3) % 5), 0, 1, 2};
    const auto states2 = forward_sequence(tail, p);
    for (std::size_t j = 0; j <= k; ++j) CHECK(states2[j] == states[j]);
  }
}

TEST_CASE("ablation switches reduce to the conventional RNN") {
  Rng rng(10);
  auto c = testing::tiny_config();
  c.n_input_contexts = 7;
  c.n_transition_bins = 9;
  c.use_input_contexts = false;
  c.use_transition_contexts = false;
  const auto p = init_params(c);
  const testing::PlainRnnReference ref{p.dim(), p.items, std::vector<double>(p.input_bank[0].values().begin(), p.input_bank[0].values().end()),
                                       std::vector<double>(p.transition_bank[0].values().begin(), p.transition_bank[0].values().end())};
  auto steps = testing::random_steps(rng, 10, 5, 7, 9);
  const auto states = forward_sequence(steps, p);
  std::vector<double> h(3, 0.0);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    h = ref.step(h, steps[k].item);
    for (std::size_t i = 0; i < 3; ++i) CHECK(states[k][i] == h[i]);
    for (std::uint32_t v = 0; v < 5; ++v) CHECK(score(states[k], v, steps[k].input_context, 4, p) == ref.score(h, v));
  }
}

TEST_CASE("model file round trip and validation") {
  auto c = testing::tiny_config();
  const auto p = init_params(c);
  const auto bytes = serialize_model(p);
  CHECK(bytes.substr(0, 4) == "CARN");
  CHECK(bytes.size() == 4 + 4 + 16 + 2 + 8 * (15 + 5 * 9));
  const auto back = deserialize_model(bytes);
  CHECK(back.items == p.items);
  CHECK(back.input_bank == p.input_bank);
  CHECK(back.transition_bank == p.transition_bank);
  CHECK(serialize_model(back) == bytes);

  auto expect_format_error = [](std::string b) {
    try {
      deserialize_model(b);
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::format);
    }
  };
  expect_format_error(bytes.substr(0, bytes.size() - 8));
  expect_format_error(bytes + "x");
  expect_format_error("CARX" + bytes.substr(4));
  auto v9 = bytes;
  v9[4] = 9;
  expect_format_error(v9);

  c.use_input_contexts = false;
  c.use_transition_contexts = false;
  const auto plain = deserialize_model(serialize_model(init_params(c)));
  CHECK(plain.config.n_input_contexts == 1);
  CHECK(plain.config.n_transition_bins == 1);
  CHECK_FALSE(plain.config.use_input_contexts);

  auto sep = testing::tiny_config();
  sep.separate_prediction_banks = true;
  const auto ps = init_params(sep);
  const auto sb = serialize_model(ps);
  const auto sback = deserialize_model(sb);
  CHECK(sback.config.separate_prediction_banks);
  CHECK(sback.prediction_input_bank == ps.prediction_input_bank);
  CHECK(sback.prediction_transition_bank == ps.prediction_transition_bank);
}
