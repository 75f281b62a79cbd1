#pragma once
// Small statistics helpers shared by the test programs. Independent of the library code.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace testsupport {

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / double(a.size() - 1);
}

// Standard error of the sample covariance, from the spread of centered products.
inline double covariance_se(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
  return std::sqrt(variance(prod) / double(a.size()));
}

inline double excess_kurtosis(const std::vector<double>& v) {
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double c = (x - m) * (x - m);
    m2 += c;
    m4 += c * c;
  }
  m2 /= double(v.size());
  m4 /= double(v.size());
  return m4 / (m2 * m2) - 3.0;
}

struct Line {
  double slope, intercept;
};

inline Line ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return {sxy / sxx, my - sxy / sxx * mx};
}

// Asymptotic two-sample Kolmogorov-Smirnov p-value with Stephens' small-sample adjustment.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double dmax = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    dmax = std::max(dmax, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  const double ne = double(a.size()) * b.size() / double(a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * dmax;
  if (lambda < 1e-3) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Upper tail of the F distribution via the regularized incomplete beta (continued fraction).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  if (x > (a + 1) / (a + b + 2)) return 1.0 - incomplete_beta(b, a, 1 - x);
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(std::log(x) * a + std::log(1 - x) * b + lbeta) / a;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    double num;
    if (i == 0) num = 1.0;
    else if (i % 2 == 0) num = (m * (b - m) * x) / ((a + 2.0 * m - 1) * (a + 2.0 * m));
    else num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1));
    d = 1.0 + num * d;
    d = std::abs(d) < 1e-300 ? 1e-300 : d;
    d = 1.0 / d;
    c = 1.0 + num / c;
    c = std::abs(c) < 1e-300 ? 1e-300 : c;
    const double cd = c * d;
    f *= cd;
    if (std::abs(1.0 - cd) < 1e-14) break;
  }
  return front * (f - 1.0);
}

inline double f_upper_tail(double F, double d1, double d2) {
  return incomplete_beta(d2 / 2, d1 / 2, d2 / (d2 + d1 * F));
}

}  // namespace testsupport
