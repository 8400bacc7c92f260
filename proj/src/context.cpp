#include "carnn/context.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "carnn/error.hpp"

namespace carnn {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::size_t cardinality(ContextFactor factor) {
  switch (factor) {
    case ContextFactor::day_of_week: return 7;
    case ContextFactor::hour_of_day: return 24;
    case ContextFactor::ten_day_period: return 3;
    case ContextFactor::is_holiday: return 2;
  }
  return 0;
}

const char* to_string(ContextFactor factor) {
  switch (factor) {
    case ContextFactor::day_of_week: return "day_of_week";
    case ContextFactor::hour_of_day: return "hour_of_day";
    case ContextFactor::ten_day_period: return "ten_day_period";
    case ContextFactor::is_holiday: return "is_holiday";
  }
  return "?";
}

ContextFactor parse_context_factor(std::string_view name) {
  for (auto f : {ContextFactor::day_of_week, ContextFactor::hour_of_day, ContextFactor::ten_day_period,
                 ContextFactor::is_holiday}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorKind::config, "unknown context factor '" + std::string(name) + "'");
}

ContextScheme ContextScheme::movielens() {
  ContextScheme s;
  s.factors = {ContextFactor::day_of_week, ContextFactor::hour_of_day};
  return s;
}

ContextScheme ContextScheme::taobao() {
  ContextScheme s;
  s.factors = {ContextFactor::day_of_week, ContextFactor::ten_day_period, ContextFactor::is_holiday};
  return s;
}

void ContextScheme::validate() const {
  if (factors.empty()) throw Error(ErrorKind::config, "context scheme needs at least one factor");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    for (std::size_t j = i + 1; j < factors.size(); ++j) {
      if (factors[i] == factors[j]) {
        throw Error(ErrorKind::config, std::string("duplicate context factor ") + to_string(factors[i]));
      }
    }
  }
  if (max_interval_days < 0) throw Error(ErrorKind::config, "max_interval_days must be >= 0");
}

std::size_t ContextScheme::input_cardinality() const {
  std::size_t n = 1;
  for (auto f : factors) n *= cardinality(f);
  return n;
}

std::vector<ContextFactor> parse_factor_list(std::string_view spec) {
  if (spec == "movielens") return ContextScheme::movielens().factors;
  if (spec == "taobao") return ContextScheme::taobao().factors;
  std::vector<ContextFactor> out;
  while (!spec.empty()) {
    auto comma = spec.find(',');
    auto name = spec.substr(0, comma);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) out.push_back(parse_context_factor(name));
    if (comma == std::string_view::npos) break;
    spec.remove_prefix(comma + 1);
  }
  return out;
}

std::string format_factor_list(const std::vector<ContextFactor>& factors) {
  std::string out;
  for (auto f : factors) {
    if (!out.empty()) out += ',';
    out += to_string(f);
  }
  return out;
}

std::int64_t parse_iso_date(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { return Error(ErrorKind::format, "bad ISO date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (ec != std::errc() || p != text.data() + pos + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw bad();
  return sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(std::int64_t days) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::set<std::int64_t> load_holiday_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open holiday file " + path);
  std::set<std::int64_t> days;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = line;
    while (!v.empty() && (v.back() == '\r' || v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    if (v.empty() || v.front() == '#') continue;
    days.insert(parse_iso_date(v));
  }
  return days;
}

std::vector<std::uint32_t> factor_values(std::int64_t t, const ContextScheme& scheme) {
  using namespace std::chrono;
  const std::int64_t local = t + scheme.timezone_offset_seconds;
  const std::int64_t day_number = floor_div(local, kSecondsPerDay);
  const std::int64_t second_of_day = local - day_number * kSecondsPerDay;
  const sys_days date{std::chrono::days{day_number}};

  std::vector<std::uint32_t> values;
  values.reserve(scheme.factors.size());
  for (auto f : scheme.factors) {
    switch (f) {
      case ContextFactor::day_of_week:
        values.push_back(weekday{date}.iso_encoding() - 1);
        break;
      case ContextFactor::hour_of_day:
        values.push_back(static_cast<std::uint32_t>(second_of_day / 3600));
        break;
      case ContextFactor::ten_day_period: {
        const unsigned dom = static_cast<unsigned>(year_month_day{date}.day());
        values.push_back(dom <= 10 ? 0u : dom <= 20 ? 1u : 2u);
        break;
      }
      case ContextFactor::is_holiday:
        values.push_back(scheme.holiday_days.contains(day_number) ? 1u : 0u);
        break;
    }
  }
  return values;
}

std::vector<std::uint32_t> decompose_input_context(std::uint32_t id, const ContextScheme& scheme) {
  std::vector<std::uint32_t> values(scheme.factors.size());
  for (std::size_t i = scheme.factors.size(); i-- > 0;) {
    const auto radix = static_cast<std::uint32_t>(cardinality(scheme.factors[i]));
    values[i] = id % radix;
    id /= radix;
  }
  return values;
}

std::uint32_t input_context(std::int64_t t, const ContextScheme& scheme) {
  const auto values = factor_values(t, scheme);
  std::uint32_t id = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    id = id * static_cast<std::uint32_t>(cardinality(scheme.factors[i])) + values[i];
  }
  return id;
}

std::uint32_t transition_bin(std::int64_t t_curr, std::optional<std::int64_t> t_prev,
                             const ContextScheme& scheme) {
  if (!t_prev) return scheme.start_bin();
  if (t_curr < *t_prev) {
    throw Error(ErrorKind::ordering, "timestamp " + std::to_string(t_curr) + " precedes predecessor " +
                                         std::to_string(*t_prev));
  }
  const std::int64_t gap_days = (t_curr - *t_prev) / kSecondsPerDay;
  return static_cast<std::uint32_t>(std::min<std::int64_t>(gap_days, scheme.max_interval_days));
}

SequenceSet annotate_sequences(SequenceSet seqs, const ContextScheme& scheme) {
  scheme.validate();
  for (auto& seq : seqs.sequences) {
    std::optional<std::int64_t> prev;
    for (auto& step : seq.steps) {
      step.input_context = input_context(step.timestamp, scheme);
      step.transition_bin = transition_bin(step.timestamp, prev, scheme);
      prev = step.timestamp;
    }
  }
  seqs.annotated = true;
  return seqs;
}

}  // namespace carnn
