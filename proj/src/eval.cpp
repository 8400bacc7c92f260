#include "carnn/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <thread>

#include "carnn/error.hpp"

namespace carnn {

std::size_t rank_target(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size()) {
    throw Error(ErrorKind::config, "target " + std::to_string(target) + " outside " +
                                       std::to_string(scores.size()) + " scores");
  }
  const double t = scores[target];
  std::size_t rank = 1;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (scores[v] > t || (scores[v] == t && v < target)) ++rank;
  }
  return rank;
}

double f1_from_recall(double recall, int k) { return 2.0 * recall / (static_cast<double>(k) + 1.0); }

MetricsReport summarize_ranks(std::span<const std::size_t> ranks, std::span<const int> ks) {
  if (ranks.empty()) throw Error(ErrorKind::data, "no test positions to evaluate");
  MetricsReport r;
  r.ks.assign(ks.begin(), ks.end());
  r.n_positions = ranks.size();
  const double n = static_cast<double>(ranks.size());
  double map_sum = 0.0, ndcg_sum = 0.0;
  for (auto rank : ranks) {
    map_sum += 1.0 / static_cast<double>(rank);
    ndcg_sum += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  for (int k : ks) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t rank) {
      return rank <= static_cast<std::size_t>(k);
    });
    const double recall = static_cast<double>(hits) / n;
    r.recall_at[k] = recall;
    r.f1_at[k] = f1_from_recall(recall, k);
  }
  r.map_score = map_sum / n;
  r.ndcg = ndcg_sum / n;
  return r;
}

namespace {

void rank_sequence(const SplitSet& split, const ModelParams& p, std::size_t i, std::vector<RankRecord>& out) {
  const auto train = split.train_steps(i);
  const auto test = split.test_steps(i);
  HiddenState h = advance(HiddenState(p.dim()), train, p);
  for (std::size_t k = 0; k < test.size(); ++k) {
    const auto& s = test[k];
    const auto scores = score_all(h, s.input_context, s.transition_bin, p);
    out.push_back({i, train.size() + k, rank_target(scores, s.item)});
    h = hidden_step(h, s.item, s.input_context, s.transition_bin, p);
  }
}

std::vector<std::size_t> ranks_of(const std::vector<RankRecord>& records) {
  std::vector<std::size_t> ranks;
  ranks.reserve(records.size());
  for (const auto& r : records) ranks.push_back(r.rank);
  return ranks;
}

}  // namespace

std::vector<RankRecord> rank_test_positions(const SplitSet& split, const ModelParams& p, std::size_t workers) {
  if (!split.data.annotated) throw Error(ErrorKind::data, "evaluation needs an annotated split");
  if (split.data.n_items() != p.n_items()) {
    throw Error(ErrorKind::compatibility, "model has " + std::to_string(p.n_items()) + " items, data has " +
                                              std::to_string(split.data.n_items()));
  }
  const std::size_t n = split.size();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  std::vector<std::vector<RankRecord>> per_worker(workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) rank_sequence(split, p, i, per_worker[0]);
  } else {
    // Contiguous chunks keep the concatenated order identical to the serial one.
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) rank_sequence(split, p, i, per_worker[w]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::vector<RankRecord> records;
  for (auto& part : per_worker) records.insert(records.end(), part.begin(), part.end());
  return records;
}

MetricsReport evaluate(const SplitSet& split, const ModelParams& p, std::span<const int> ks, std::size_t workers) {
  const auto records = rank_test_positions(split, p, workers);
  const auto ranks = ranks_of(records);
  return summarize_ranks(ranks, ks);
}

std::vector<double> item_popularity(const SplitSet& split) {
  std::vector<double> freq(split.data.n_items(), 0.0);
  for (std::size_t i = 0; i < split.size(); ++i)
    for (const auto& s : split.train_steps(i)) freq[s.item] += 1.0;
  return freq;
}

MetricsReport pop_baseline(const SplitSet& split, std::span<const int> ks) {
  const auto freq = item_popularity(split);
  std::vector<std::size_t> ranks;
  ranks.reserve(split.n_test_positions());
  for (std::size_t i = 0; i < split.size(); ++i)
    for (const auto& s : split.test_steps(i)) ranks.push_back(rank_target(freq, s.item));
  return summarize_ranks(ranks, ks);
}

std::string format_report(const MetricsReport& report) {
  std::string out;
  char buf[128];
  auto line = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key.c_str(), v);
    out += buf;
  };
  out += "n_positions=" + std::to_string(report.n_positions) + "\n";
  for (int k : report.ks) line("recall@" + std::to_string(k), report.recall_at.at(k));
  for (int k : report.ks) line("f1@" + std::to_string(k), report.f1_at.at(k));
  line("map", report.map_score);
  line("ndcg", report.ndcg);
  return out;
}

MetricsReport parse_report(std::string_view text) {
  MetricsReport r;
  auto to_double = [](std::string_view v) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw Error(ErrorKind::format, "bad metric value '" + std::string(v) + "'");
    return x;
  };
  auto to_int = [](std::string_view v) {
    long long x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw Error(ErrorKind::format, "bad integer '" + std::string(v) + "'");
    return x;
  };
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::format, "bad report line '" + std::string(line) + "'");
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    if (key == "n_positions") {
      r.n_positions = static_cast<std::size_t>(to_int(value));
    } else if (key == "map") {
      r.map_score = to_double(value);
    } else if (key == "ndcg") {
      r.ndcg = to_double(value);
    } else if (key.starts_with("recall@")) {
      const int k = static_cast<int>(to_int(key.substr(7)));
      r.recall_at[k] = to_double(value);
      r.ks.push_back(k);
    } else if (key.starts_with("f1@")) {
      r.f1_at[static_cast<int>(to_int(key.substr(3)))] = to_double(value);
    } else {
      throw Error(ErrorKind::format, "unknown report key '" + std::string(key) + "'");
    }
  }
  return r;
}

std::string format_report_table(const MetricsReport& report, std::string_view label) {
  std::string header = "Method        ";
  std::string row(label);
  row.resize(std::max<std::size_t>(row.size(), 13), ' ');
  row += ' ';
  char buf[64];
  auto cell = [&](const std::string& name, double v) {
    std::snprintf(buf, sizeof buf, "%-11s", name.c_str());
    header += buf;
    std::snprintf(buf, sizeof buf, "%-11.4f", v);
    row += buf;
  };
  for (int k : report.ks) cell("Recall@" + std::to_string(k), report.recall_at.at(k));
  for (int k : report.ks) cell("F1@" + std::to_string(k), report.f1_at.at(k));
  cell("MAP", report.map_score);
  cell("NDCG", report.ndcg);
  return header + "\n" + row + "\n";
}

}  // namespace carnn
