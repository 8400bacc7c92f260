#include "carnn/linalg.hpp"

#include <cmath>
#include <string>

#include "carnn/error.hpp"

namespace carnn {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorKind::config, std::string(what) + ": dimension mismatch (" +
                                       std::to_string(got) + " vs " + std::to_string(want) + ")");
  }
}

}  // namespace

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) : dim_(rows.size()) {
  values_.reserve(dim_ * dim_);
  for (const auto& r : rows) {
    require_dim(r.size(), dim_, "Mat");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t dim) {
  Mat m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

Vec vec_mat(std::span<const double> v, const Mat& m) {
  const std::size_t d = m.dim();
  require_dim(v.size(), d, "vec_mat");
  Vec out(d);
  auto o = out.values();
  for (std::size_t i = 0; i < d; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const auto r = m.row(i);
    for (std::size_t j = 0; j < d; ++j) o[j] += vi * r[j];
  }
  return out;
}

Vec vec_mat_t(std::span<const double> v, const Mat& m) {
  const std::size_t d = m.dim();
  require_dim(v.size(), d, "vec_mat_t");
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = dot(m.row(i), v);
  return out;
}

Mat outer(std::span<const double> a, std::span<const double> b) {
  require_dim(b.size(), a.size(), "outer");
  Mat m(a.size());
  add_outer(m, a, b, 1.0);
  return m;
}

void add_outer(Mat& acc, std::span<const double> a, std::span<const double> b, double scale) {
  const std::size_t d = acc.dim();
  require_dim(a.size(), d, "add_outer");
  require_dim(b.size(), d, "add_outer");
  for (std::size_t i = 0; i < d; ++i) {
    const double ai = scale * a[i];
    if (ai == 0.0) continue;
    auto r = acc.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] += ai * b[j];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_dim(b.size(), a.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_dim(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec operator+(const Vec& a, const Vec& b) {
  require_dim(b.dim(), a.dim(), "Vec +");
  Vec out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec operator-(const Vec& a, const Vec& b) {
  require_dim(b.dim(), a.dim(), "Vec -");
  Vec out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] - b[i];
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void sigmoid_inplace(std::span<double> v) {
  for (double& x : v) x = sigmoid(x);
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace carnn
