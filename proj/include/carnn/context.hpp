#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "carnn/data.hpp"

namespace carnn {

enum class ContextFactor {
  day_of_week,     // 7, Monday = 0
  hour_of_day,     // 24
  ten_day_period,  // 3: days 1-10, 11-20, 21-end
  is_holiday,      // 2
};

std::size_t cardinality(ContextFactor factor);
const char* to_string(ContextFactor factor);
ContextFactor parse_context_factor(std::string_view name);

/// How timestamps map to input-context ids and gaps map to transition bins.
///
/// The input-context id is the mixed-radix composition of the factor values,
/// first factor most significant. Transition bins are whole days of gap,
/// capped at max_interval_days, plus one reserved bin (max_interval_days + 1)
/// for the first step of a sequence.
struct ContextScheme {
  std::vector<ContextFactor> factors;
  std::set<std::int64_t> holiday_days;  // days since 1970-01-01
  int max_interval_days = 30;
  std::int64_t timezone_offset_seconds = 0;

  /// {day_of_week, hour_of_day}: 168 input contexts.
  static ContextScheme movielens();
  /// {day_of_week, ten_day_period, is_holiday}: 42 input contexts.
  static ContextScheme taobao();

  void validate() const;
  std::size_t input_cardinality() const;
  std::size_t transition_cardinality() const { return static_cast<std::size_t>(max_interval_days) + 2; }
  std::uint32_t start_bin() const { return static_cast<std::uint32_t>(max_interval_days) + 1; }

  bool operator==(const ContextScheme&) const = default;
};

/// Parses "day_of_week,hour_of_day" or a preset name ("movielens", "taobao").
std::vector<ContextFactor> parse_factor_list(std::string_view spec);
std::string format_factor_list(const std::vector<ContextFactor>& factors);

/// Days since the epoch for a YYYY-MM-DD date.
std::int64_t parse_iso_date(std::string_view text);
std::string format_iso_date(std::int64_t days);
/// One ISO date per line; blank lines and '#' comments are skipped.
std::set<std::int64_t> load_holiday_file(const std::string& path);

/// Per-factor values of timestamp t in the scheme's local civil time.
std::vector<std::uint32_t> factor_values(std::int64_t t, const ContextScheme& scheme);

/// Inverse of the mixed-radix composition.
std::vector<std::uint32_t> decompose_input_context(std::uint32_t id, const ContextScheme& scheme);

std::uint32_t input_context(std::int64_t t, const ContextScheme& scheme);

/// Whole-day gap bin; no predecessor selects the start bin. Raises an
/// ordering error if t_curr < t_prev.
std::uint32_t transition_bin(std::int64_t t_curr, std::optional<std::int64_t> t_prev,
                             const ContextScheme& scheme);

SequenceSet annotate_sequences(SequenceSet seqs, const ContextScheme& scheme);

}  // namespace carnn
