#include <random>

#include "carnn/error.hpp"
#include "carnn/eval.hpp"
#include "carnn/rng.hpp"

namespace carnn {

SyntheticSignal parse_synthetic_signal(std::string_view name) {
  if (name == "none") return SyntheticSignal::none;
  if (name == "input_ctx" || name == "input") return SyntheticSignal::input_ctx;
  if (name == "transition_bin" || name == "transition") return SyntheticSignal::transition_bin;
  throw Error(ErrorKind::config, "unknown synthetic signal '" + std::string(name) + "'");
}

std::size_t SyntheticData::partition_begin(std::size_t c) const { return c * n_items / n_contexts; }

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kFirstDay = 18267;  // Monday 2020-01-06

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_contexts < 1 || spec.n_items < 2 * spec.n_contexts) {
    throw Error(ErrorKind::config, "synthetic data needs n_items >= 2·n_contexts (got " +
                                       std::to_string(spec.n_items) + " items, " + std::to_string(spec.n_contexts) +
                                       " contexts)");
  }
  if (spec.n_users < 1 || spec.seq_len < 1) throw Error(ErrorKind::config, "synthetic data needs users and steps");

  SyntheticData out;
  out.n_items = spec.n_items;
  out.n_contexts = spec.n_contexts;
  out.scheme.factors = {ContextFactor::hour_of_day};
  if (spec.signal == SyntheticSignal::transition_bin) {
    if (spec.n_contexts > static_cast<std::size_t>(out.scheme.max_interval_days) + 1) {
      throw Error(ErrorKind::config, "transition signal supports at most max_interval_days + 1 gap values");
    }
  } else if (spec.n_contexts > cardinality(ContextFactor::hour_of_day)) {
    throw Error(ErrorKind::config, "input-context signal supports at most 24 context values");
  }

  Rng rng(derive_seed(spec.seed, "synthetic"));
  std::uniform_int_distribution<std::uint32_t> pick_ctx(0, static_cast<std::uint32_t>(spec.n_contexts - 1));
  std::uniform_int_distribution<std::uint32_t> pick_item(0, static_cast<std::uint32_t>(spec.n_items - 1));
  std::uniform_int_distribution<std::int64_t> pick_day_gap(1, 3);
  std::uniform_int_distribution<std::int64_t> pick_second(0, 3599);
  std::bernoulli_distribution follow(spec.signal_strength);

  auto draw_from = [&](std::uint32_t c) {
    const auto lo = out.partition_begin(c);
    const auto hi = out.partition_begin(c + 1);
    std::uniform_int_distribution<std::size_t> d(lo, hi - 1);
    return static_cast<std::uint32_t>(d(rng));
  };

  for (std::size_t i = 0; i < spec.n_items; ++i) out.sequences.items.add("i" + std::to_string(i));
  out.planted.resize(spec.n_users);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    UserSequence seq;
    seq.user = out.sequences.users.add("u" + std::to_string(u));
    std::int64_t day = kFirstDay + static_cast<std::int64_t>(u % 7);
    std::int64_t t = day * kDay + 12 * 3600;
    for (std::size_t k = 0; k < spec.seq_len; ++k) {
      std::uint32_t planted = 0;
      std::uint32_t item = 0;
      if (spec.signal == SyntheticSignal::transition_bin) {
        if (k == 0) {
          planted = out.scheme.start_bin();
          item = pick_item(rng);
        } else {
          planted = pick_ctx(rng);
          t += static_cast<std::int64_t>(planted) * kDay;
          item = follow(rng) ? draw_from(planted) : pick_item(rng);
        }
      } else {
        // One event per day, at the hour that encodes its input context.
        planted = pick_ctx(rng);
        if (k > 0) day += pick_day_gap(rng);
        t = day * kDay + static_cast<std::int64_t>(planted) * 3600 + pick_second(rng);
        if (spec.signal == SyntheticSignal::input_ctx && follow(rng)) {
          item = draw_from(planted);
        } else {
          item = pick_item(rng);
        }
      }
      seq.steps.push_back({item, t, 0, 0});
      out.planted[u].push_back(planted);
    }
    out.sequences.sequences.push_back(std::move(seq));
  }
  return out;
}

}  // namespace carnn
