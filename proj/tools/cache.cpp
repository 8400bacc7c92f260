#include "cache.hpp"

#include <set>

#include "carnn/binary_io.hpp"
#include "carnn/error.hpp"

namespace carnn::cli {

namespace {

constexpr char kMagic[4] = {'C', 'R', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_vocab(ByteWriter& w, const Vocab& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& id : v.ids()) w.str(id);
}

Vocab read_vocab(ByteReader& r) {
  Vocab v;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    if (v.add(r.str()) != i) throw Error(ErrorKind::format, "duplicate id in cached vocabulary");
  }
  return v;
}

}  // namespace

DatasetStats raw_stats(const InteractionLog& log) {
  std::set<std::string_view> users, items;
  for (const auto& x : log.interactions) {
    users.insert(x.user);
    items.insert(x.item);
  }
  DatasetStats s;
  s.users_before = users.size();
  s.items_before = items.size();
  s.interactions_before = log.interactions.size();
  s.rejects = log.rejects;
  return s;
}

std::string format_stats(const DatasetStats& s) {
  std::string out;
  auto kv = [&](const char* k, std::size_t v) { out += std::string(k) + "=" + std::to_string(v) + "\n"; };
  kv("users_before", s.users_before);
  kv("items_before", s.items_before);
  kv("interactions_before", s.interactions_before);
  kv("rejects", s.rejects);
  kv("users", s.users_after);
  kv("items", s.items_after);
  kv("interactions", s.interactions_after);
  kv("train_steps", s.train_steps);
  kv("test_positions", s.test_positions);
  return out;
}

std::string serialize_prepared(const PreparedData& d) {
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.str(format_factor_list(d.scheme.factors));
  w.u32(static_cast<std::uint32_t>(d.scheme.max_interval_days));
  w.i64(d.scheme.timezone_offset_seconds);
  w.u32(static_cast<std::uint32_t>(d.scheme.holiday_days.size()));
  for (auto day : d.scheme.holiday_days) w.i64(day);
  w.f64(d.split_ratio);
  for (auto v : {d.stats.users_before, d.stats.items_before, d.stats.interactions_before, d.stats.rejects,
                 d.stats.users_after, d.stats.items_after, d.stats.interactions_after, d.stats.train_steps,
                 d.stats.test_positions})
    w.u64(v);
  write_vocab(w, d.split.data.items);
  write_vocab(w, d.split.data.users);
  w.u8(d.split.data.annotated ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(d.split.size()));
  for (std::size_t i = 0; i < d.split.size(); ++i) {
    const auto& seq = d.split.data.sequences[i];
    w.u32(seq.user);
    w.u32(static_cast<std::uint32_t>(seq.steps.size()));
    w.u32(static_cast<std::uint32_t>(d.split.train_lengths[i]));
    for (const auto& s : seq.steps) {
      w.u32(s.item);
      w.i64(s.timestamp);
      w.u32(s.input_context);
      w.u32(s.transition_bin);
    }
  }
  return w.take();
}

PreparedData deserialize_prepared(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorKind::format, "not a prepared-data cache (bad magic)");
  }
  const auto version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorKind::format, "unsupported cache version " + std::to_string(version));
  }
  PreparedData d;
  d.scheme.factors = parse_factor_list(r.str());
  d.scheme.max_interval_days = static_cast<int>(r.u32());
  d.scheme.timezone_offset_seconds = r.i64();
  const auto n_holidays = r.u32();
  for (std::uint32_t i = 0; i < n_holidays; ++i) d.scheme.holiday_days.insert(r.i64());
  d.split_ratio = r.f64();
  for (auto* v : {&d.stats.users_before, &d.stats.items_before, &d.stats.interactions_before, &d.stats.rejects,
                  &d.stats.users_after, &d.stats.items_after, &d.stats.interactions_after, &d.stats.train_steps,
                  &d.stats.test_positions})
    *v = static_cast<std::size_t>(r.u64());
  d.split.data.items = read_vocab(r);
  d.split.data.users = read_vocab(r);
  d.split.data.annotated = r.u8() != 0;
  const auto n_seq = r.u32();
  const auto n_items = d.split.data.items.size();
  const auto n_users = d.split.data.users.size();
  for (std::uint32_t i = 0; i < n_seq; ++i) {
    UserSequence seq;
    seq.user = r.u32();
    const auto len = r.u32();
    const auto train_len = r.u32();
    if (seq.user >= n_users || train_len > len) throw Error(ErrorKind::format, "corrupt sequence header in cache");
    if (static_cast<std::size_t>(len) * 20 > r.remaining()) throw Error(ErrorKind::format, "truncated binary input");
    seq.steps.resize(len);
    for (auto& s : seq.steps) {
      s.item = r.u32();
      s.timestamp = r.i64();
      s.input_context = r.u32();
      s.transition_bin = r.u32();
      if (s.item >= n_items) throw Error(ErrorKind::format, "cached step references unknown item");
    }
    d.split.data.sequences.push_back(std::move(seq));
    d.split.train_lengths.push_back(train_len);
  }
  if (r.remaining() != 0) throw Error(ErrorKind::format, "trailing bytes in cache");
  return d;
}

}  // namespace carnn::cli
