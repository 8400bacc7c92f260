#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace carnn {

/// Dense length-d vector (hidden states, embeddings, projections).
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  Vec(std::initializer_list<double> values) : values_(values) {}
  explicit Vec(std::span<const double> values) : values_(values.begin(), values.end()) {}

  std::size_t dim() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  operator std::span<const double>() const { return values_; }

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> values_;
};

/// Square d×d matrix, row-major.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t dim, double fill = 0.0) : dim_(dim), values_(dim * dim, fill) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t dim);

  std::size_t dim() const { return dim_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * dim_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Row vector times matrix: v·m.
Vec vec_mat(std::span<const double> v, const Mat& m);

/// Row vector times transposed matrix: v·mᵀ.
Vec vec_mat_t(std::span<const double> v, const Mat& m);

Mat outer(std::span<const double> a, std::span<const double> b);

/// acc += scale · a bᵀ
void add_outer(Mat& acc, std::span<const double> a, std::span<const double> b, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);

/// y += a·x
void axpy(double a, std::span<const double> x, std::span<double> y);

Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);

/// Logistic sigmoid, evaluated without overflow for any finite x.
double sigmoid(double x);

void sigmoid_inplace(std::span<double> v);

bool all_finite(std::span<const double> v);

}  // namespace carnn
