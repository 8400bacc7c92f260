#pragma once

// Test-only fixtures and reference implementations. Nothing here calls the
// library's forward, scoring, or gradient code.

#include <cmath>
#include <random>
#include <vector>

#include "carnn/data.hpp"
#include "carnn/linalg.hpp"
#include "carnn/model.hpp"
#include "carnn/rng.hpp"

namespace carnn::testing {

inline std::vector<Step> random_steps(Rng& rng, std::size_t length, std::size_t n_items, std::size_t n_ctx,
                                      std::size_t n_bins) {
  std::uniform_int_distribution<std::uint32_t> item(0, static_cast<std::uint32_t>(n_items - 1));
  std::uniform_int_distribution<std::uint32_t> ctx(0, static_cast<std::uint32_t>(n_ctx - 1));
  std::uniform_int_distribution<std::uint32_t> bin(0, static_cast<std::uint32_t>(n_bins - 1));
  std::vector<Step> steps;
  for (std::size_t k = 0; k < length; ++k) steps.push_back({item(rng), static_cast<std::int64_t>(k) * 3600, ctx(rng), bin(rng)});
  return steps;
}

inline ModelConfig tiny_config(std::uint64_t seed = 7) {
  ModelConfig c;
  c.d = 3;
  c.n_items = 5;
  c.n_input_contexts = 2;
  c.n_transition_bins = 3;
  c.seed = seed;
  c.init_scale = 0.5;
  return c;
}

// Conventional RNN written out with raw loops: h = σ(r·M + h·W),
// y = (h·W)·(r_v·M). Summation order matches a left-to-right row-vector
// product so results are comparable bit for bit.
struct PlainRnnReference {
  std::size_t d;
  std::vector<double> R;
  std::vector<double> M;
  std::vector<double> W;

  std::vector<double> row_times(const double* v, const std::vector<double>& m) const {
    std::vector<double> out(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += v[i] * m[i * d + j];
      out[j] = s;
    }
    return out;
  }

  std::vector<double> step(const std::vector<double>& h, std::uint32_t item) const {
    auto a = row_times(&R[item * d], M);
    auto b = row_times(h.data(), W);
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) out[j] = carnn::sigmoid(a[j] + b[j]);
    return out;
  }

  double score(const std::vector<double>& h, std::uint32_t item) const {
    auto left = row_times(h.data(), W);
    auto right = row_times(&R[item * d], M);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += left[j] * right[j];
    return s;
  }
};

// Summed BPR loss of a CA-RNN written independently of the library:
// hidden states from context-selected matrices, scores through the shared
// banks, loss ln(1 + e^{-(y+ - y-)}).
struct Pair {
  std::size_t position;
  std::uint32_t positive, negative;
};

inline double reference_loss(const ModelParams& p, const std::vector<Step>& steps, const std::vector<Pair>& pairs,
                             bool identity_activation = false) {
  const std::size_t d = p.dim();
  auto mat_of = [&](const std::vector<Mat>& bank, std::uint32_t id, bool use) -> const Mat& {
    return bank[use ? id : 0];
  };
  auto times = [&](const std::vector<double>& v, const Mat& m) {
    std::vector<double> o(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < d; ++i) o[j] += v[i] * m(i, j);
    return o;
  };
  auto row = [&](std::uint32_t item) {
    return std::vector<double>(p.items.begin() + item * d, p.items.begin() + (item + 1) * d);
  };
  std::vector<std::vector<double>> before(steps.size() + 1, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    auto a = times(row(s.item), mat_of(p.input_bank, s.input_context, p.config.use_input_contexts));
    auto b = times(before[k], mat_of(p.transition_bank, s.transition_bin, p.config.use_transition_contexts));
    for (std::size_t j = 0; j < d; ++j) {
      const double x = a[j] + b[j];
      before[k + 1][j] = identity_activation ? x : 1.0 / (1.0 + std::exp(-x));
    }
  }
  double loss = 0.0;
  for (const auto& pr : pairs) {
    const auto& s = steps[pr.position];
    const Mat& Wp = mat_of(p.config.separate_prediction_banks ? p.prediction_transition_bank : p.transition_bank,
                           s.transition_bin, p.config.use_transition_contexts);
    const Mat& Mp = mat_of(p.config.separate_prediction_banks ? p.prediction_input_bank : p.input_bank,
                           s.input_context, p.config.use_input_contexts);
    auto left = times(before[pr.position], Wp);
    auto qp = times(row(pr.positive), Mp);
    auto qn = times(row(pr.negative), Mp);
    double y = 0.0;
    for (std::size_t j = 0; j < d; ++j) y += left[j] * (qp[j] - qn[j]);
    loss += std::log(1.0 + std::exp(-y));
  }
  return loss;
}

}  // namespace carnn::testing
