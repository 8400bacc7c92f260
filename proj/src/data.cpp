#include "carnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>

#include "carnn/error.hpp"

namespace carnn {

LogFormat parse_log_format(std::string_view name) {
  if (name == "tsv") return LogFormat::tsv;
  if (name == "csv") return LogFormat::csv;
  if (name == "movielens_dat" || name == "dat") return LogFormat::movielens_dat;
  throw Error(ErrorKind::config, "unknown log format '" + std::string(name) + "'");
}

const char* to_string(LogFormat format) {
  switch (format) {
    case LogFormat::tsv: return "tsv";
    case LogFormat::csv: return "csv";
    case LogFormat::movielens_dat: return "movielens_dat";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + sep.size();
  }
  return fields;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

InteractionLog parse_interactions(std::istream& in, LogFormat format, std::string source) {
  InteractionLog log;
  log.source = std::move(source);
  log.format = format;

  const std::string_view sep = format == LogFormat::csv ? "," : format == LogFormat::tsv ? "\t" : "::";
  const std::size_t n_fields = format == LogFormat::movielens_dat ? 4 : 3;
  const std::size_t ts_field = n_fields - 1;

  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    auto view = trim(line);
    if (view.empty()) continue;
    auto fields = split(view, sep);
    const bool header_candidate = first && format != LogFormat::movielens_dat;
    first = false;
    if (fields.size() != n_fields || fields[0].empty() || fields[1].empty()) {
      if (!header_candidate) ++log.rejects;
      continue;
    }
    auto ts = parse_int(fields[ts_field]);
    if (!ts || *ts < 0) {
      if (!header_candidate) ++log.rejects;
      continue;
    }
    log.interactions.push_back({std::string(fields[0]), std::string(fields[1]), *ts});
  }
  if (in.bad()) throw Error(ErrorKind::io, "read failed: " + log.source);

  const std::size_t total = log.rejects + log.interactions.size();
  if (total > 0 && 2 * log.rejects > total) {
    throw Error(ErrorKind::format, log.source + ": " + std::to_string(log.rejects) + " of " +
                                       std::to_string(total) + " records malformed for format " +
                                       to_string(format));
  }
  return log;
}

InteractionLog parse_interactions(const std::string& path, LogFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return parse_interactions(in, format, path);
}

std::uint32_t Vocab::add(const std::string& id) {
  auto [it, inserted] = index_.try_emplace(id, static_cast<std::uint32_t>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::optional<std::uint32_t> Vocab::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t SequenceSet::n_interactions() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.steps.size();
  return n;
}

SequenceSet build_sequences(const InteractionLog& log, std::size_t min_user, std::size_t min_item) {
  if (log.interactions.empty()) throw Error(ErrorKind::data, "interaction log is empty");

  const auto& events = log.interactions;
  std::unordered_map<std::string_view, std::size_t> item_counts;
  for (const auto& e : events) ++item_counts[e.item];

  std::vector<char> keep(events.size(), 0);
  std::unordered_map<std::string_view, std::size_t> user_counts;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (item_counts[events[i].item] >= min_item) {
      keep[i] = 1;
      ++user_counts[events[i].user];
    }
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (keep[i] && user_counts[events[i].user] < min_user) keep[i] = 0;
  }

  SequenceSet out;
  std::vector<std::vector<std::size_t>> per_user;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!keep[i]) continue;
    const auto u = out.users.add(events[i].user);
    out.items.add(events[i].item);
    if (u == per_user.size()) per_user.emplace_back();
    per_user[u].push_back(i);
  }
  if (per_user.empty()) {
    throw Error(ErrorKind::data, "no interactions survive filtering (min_user=" + std::to_string(min_user) +
                                     ", min_item=" + std::to_string(min_item) + ")");
  }

  out.sequences.reserve(per_user.size());
  for (std::uint32_t u = 0; u < per_user.size(); ++u) {
    auto& idx = per_user[u];
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return events[a].timestamp < events[b].timestamp; });
    UserSequence seq;
    seq.user = u;
    seq.steps.reserve(idx.size());
    for (auto i : idx) seq.steps.push_back({*out.items.find(events[i].item), events[i].timestamp, 0, 0});
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

std::size_t SplitSet::n_train_steps() const {
  return std::accumulate(train_lengths.begin(), train_lengths.end(), std::size_t{0});
}

std::size_t SplitSet::n_test_positions() const {
  return data.n_interactions() - n_train_steps();
}

std::size_t train_prefix_length(std::size_t length, double ratio) {
  // The tolerance keeps exact products such as 0.8·10 from rounding up.
  auto n = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(length) - 1e-9));
  return std::min(n, length);
}

SplitSet split_sequences(SequenceSet seqs, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorKind::config, "split ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  SplitSet split;
  split.train_lengths.reserve(seqs.sequences.size());
  for (const auto& s : seqs.sequences) split.train_lengths.push_back(train_prefix_length(s.steps.size(), ratio));
  split.data = std::move(seqs);
  return split;
}

}  // namespace carnn
