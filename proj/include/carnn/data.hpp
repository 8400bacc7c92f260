#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace carnn {

enum class LogFormat { tsv, csv, movielens_dat };

LogFormat parse_log_format(std::string_view name);
const char* to_string(LogFormat format);

struct Interaction {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;  // Unix seconds, UTC

  bool operator==(const Interaction&) const = default;
};

struct InteractionLog {
  std::vector<Interaction> interactions;
  std::string source;
  LogFormat format = LogFormat::tsv;
  std::size_t rejects = 0;
};

/// Reads a log file. Malformed lines are counted in `rejects`; a reject rate
/// above one half raises a format error. For tsv/csv a leading line whose
/// timestamp field is not an integer is taken as a header.
InteractionLog parse_interactions(const std::string& path, LogFormat format);
InteractionLog parse_interactions(std::istream& in, LogFormat format, std::string source = "<stream>");

/// Bijection between opaque string ids and dense indices, in insertion order.
class Vocab {
 public:
  std::uint32_t add(const std::string& id);
  std::optional<std::uint32_t> find(const std::string& id) const;
  const std::string& id(std::uint32_t index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  std::span<const std::string> ids() const { return ids_; }

  bool operator==(const Vocab& other) const { return ids_ == other.ids_; }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> ids_;
};

/// One behavior in a user's sequence. The context fields are filled in by
/// annotate_sequences().
struct Step {
  std::uint32_t item = 0;
  std::int64_t timestamp = 0;
  std::uint32_t input_context = 0;
  std::uint32_t transition_bin = 0;

  bool operator==(const Step&) const = default;
};

struct UserSequence {
  std::uint32_t user = 0;
  std::vector<Step> steps;

  bool operator==(const UserSequence&) const = default;
};

struct SequenceSet {
  std::vector<UserSequence> sequences;
  Vocab items;
  Vocab users;
  bool annotated = false;

  std::size_t n_items() const { return items.size(); }
  std::size_t n_interactions() const;

  bool operator==(const SequenceSet&) const = default;
};

/// Drops items with fewer than `min_item` interactions, then users with fewer
/// than `min_user` remaining ones (one pass, in that order). Each surviving
/// user's events are sorted by timestamp, stable in file order.
SequenceSet build_sequences(const InteractionLog& log, std::size_t min_user = 10,
                            std::size_t min_item = 3);

/// Full sequences plus the per-sequence train prefix length. The first
/// train_lengths[i] steps of sequence i are training data, the rest is test.
struct SplitSet {
  SequenceSet data;
  std::vector<std::size_t> train_lengths;

  std::span<const Step> train_steps(std::size_t i) const {
    return std::span<const Step>(data.sequences[i].steps).first(train_lengths[i]);
  }
  std::span<const Step> test_steps(std::size_t i) const {
    return std::span<const Step>(data.sequences[i].steps).subspan(train_lengths[i]);
  }
  std::size_t size() const { return data.sequences.size(); }
  std::size_t n_train_steps() const;
  std::size_t n_test_positions() const;

  bool operator==(const SplitSet&) const = default;
};

/// Train prefix length ⌈ratio·L⌉ (clamped to L).
std::size_t train_prefix_length(std::size_t length, double ratio);

SplitSet split_sequences(SequenceSet seqs, double ratio = 0.8);

}  // namespace carnn
