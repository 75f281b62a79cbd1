#include "occuriesz/limits.hpp"

#include "occuriesz/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace occuriesz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// int_a^b r^q dr, zero when the range is empty
double power_integral(double a, double b, double q) {
  if (!(b > a)) return 0.0;
  if (std::abs(q + 1.0) < 1e-12) return std::log(b / a);
  return (std::pow(b, q + 1.0) - std::pow(a, q + 1.0)) / (q + 1.0);
}

// Gauss rule for E f(R), R the norm of a standard Gaussian vector in R^d.
struct ChiRule {
  Eigen::VectorXd nodes, weights;
};

const ChiRule& chi_rule(int d) {
  static std::mutex mutex;
  static std::map<int, ChiRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  const QuadratureRule& gl = gauss_legendre(24);
  const int panels = 8;
  const double top = std::sqrt(double(d)) + 9.0, width = top / panels;
  const double lognorm = (1.0 - 0.5 * d) * std::log(2.0) - std::lgamma(0.5 * d);
  ChiRule rule;
  rule.nodes.resize(panels * gl.nodes.size());
  rule.weights.resize(rule.nodes.size());
  Eigen::Index k = 0;
  for (int p = 0; p < panels; ++p)
    for (Eigen::Index i = 0; i < gl.nodes.size(); ++i, ++k) {
      const double rho = width * (p + 0.5 * (gl.nodes(i) + 1.0));
      rule.nodes(k) = rho;
      rule.weights(k) = 0.5 * width * gl.weights(i) * std::exp(lognorm + (d - 1) * std::log(rho) - 0.5 * rho * rho);
    }
  rule.weights /= rule.weights.sum();
  return cache.emplace(d, std::move(rule)).first->second;
}

void check_point(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != occ.dim()) throw ParameterError("evaluation point has wrong dimension");
}

void check_decreasing(const std::vector<double>& grid, double lo, double hi, const char* what) {
  if (grid.empty()) throw ParameterError(std::string(what) + " grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > lo && grid[i] < hi)) throw ParameterError(std::string(what) + " grid leaves its allowed range");
    if (i && !(grid[i] < grid[i - 1])) throw ParameterError(std::string(what) + " grid must be strictly decreasing");
  }
}

void finish(DensityLimitReport& rep, double extrapolated) {
  rep.extrapolated = extrapolated;
  for (std::size_t i = 1; i < rep.values.size(); ++i)
    rep.stability = std::max(rep.stability, std::abs(rep.values[i] - rep.values[i - 1]));
  if (rep.values.size() > 1) rep.last_difference = std::abs(rep.values.back() - rep.values[rep.values.size() - 2]);
  for (double v : rep.values) rep.divergent = rep.divergent || !std::isfinite(v);
  if (rep.divergent) rep.extrapolated = kInf;
}

}  // namespace

double DensityLimitReport::relative_last_difference() const {
  const double ref = values.empty() ? 0.0 : std::abs(values.back());
  return ref > 0 ? last_difference / ref : kInf;
}

std::vector<double> default_order_grid() {
  std::vector<double> g;
  for (int k = 2; k <= 9; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

std::vector<double> default_u_grid() {
  std::vector<double> g;
  for (int k = 4; k <= 16; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

double extrapolate_to_zero(const std::vector<double>& parameters, const std::vector<double>& values, int points) {
  const int n = int(std::min(parameters.size(), values.size()));
  const int k = std::min(points, n);
  if (k == 0) return 0.0;
  double out = 0.0;
  for (int i = n - k; i < n; ++i) {
    double li = 1.0;
    for (int j = n - k; j < n; ++j)
      if (j != i) li *= parameters[std::size_t(j)] / (parameters[std::size_t(j)] - parameters[std::size_t(i)]);
    out += li * values[std::size_t(i)];
  }
  return out;
}

DensityLimitReport potential_limit_alpha_to_zero(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x,
                                                 std::vector<double> alpha_grid) {
  check_point(occ, x);
  check_decreasing(alpha_grid, 0.0, double(occ.dim()), "alpha");
  DensityLimitReport rep;
  rep.kind = "alpha_to_zero";
  rep.x = x;
  rep.parameters = alpha_grid;
  for (double a : alpha_grid) rep.values.push_back(rescaled_potential(occ, a, x, {false}).value);
  finish(rep, extrapolate_to_zero(rep.parameters, rep.values));
  return rep;
}

double ball_mass(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x, double r) {
  check_point(occ, x);
  if (!(r > 0)) return 0.0;
  const Eigen::Index m = occ.size(), d = occ.dim();
  double mass = 0.0;
  if (d == 1) {
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
      const double p = occ.positions(k, 0) - x(0), q = occ.positions(k + 1, 0) - x(0);
      const double dt = occ.times(k + 1) - occ.times(k);
      const double lo = std::min(p, q), hi = std::max(p, q);
      if (hi == lo) {
        if (std::abs(p) < r) mass += dt;
        continue;
      }
      const double overlap = std::min(hi, r) - std::max(lo, -r);
      if (overlap > 0) mass += dt * overlap / (hi - lo);
    }
    return mass;
  }
  const auto [left, right] = half_cells(occ);
  const Eigen::ArrayXd eta = singular_radius(occ);
  const double H = occ.hurst;
  const ChiRule& chi = chi_rule(int(d));
  for (Eigen::Index k = 0; k < m; ++k) {
    const double dist = (occ.positions.row(k).transpose() - x).norm();
    if (dist >= eta(k)) {
      if (dist < r) mass += occ.weights(k);
      continue;
    }
    // time within the cell spent in B(x, r) under the centered Gaussian model
    const double sigma = occ.local_scale(k);
    for (Eigen::Index i = 0; i < chi.nodes.size(); ++i) {
      const double reach = std::pow(r / (sigma * chi.nodes(i)), 1.0 / H);
      mass += chi.weights(i) * (std::min(left(k), reach) + std::min(right(k), reach));
    }
  }
  return mass;
}

double ball_mass_integral(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x, double s, double u) {
  check_point(occ, x);
  const Eigen::Index m = occ.size(), d = occ.dim();
  const double q = -s - 1.0;
  double total = 0.0;
  if (d == 1) {
    // a segment spreads dt / |dX| per unit length over its range; per side of x the overlap with
    // (x - r, x + r) is clamp(r - c, 0, e - c) for the distance range [c, e]
    auto side = [&](double c, double e, double density) {
      if (!(e > c)) return 0.0;
      const double a = std::max(u, c), b = std::min(1.0, e);
      double v = power_integral(a, b, q + 1.0) - c * power_integral(a, b, q);
      v += (e - c) * power_integral(std::max(u, e), 1.0, q);
      return density * v;
    };
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
      const double p = occ.positions(k, 0) - x(0), r = occ.positions(k + 1, 0) - x(0);
      const double dt = occ.times(k + 1) - occ.times(k);
      const double lo = std::min(p, r), hi = std::max(p, r);
      if (hi - lo <= 1e-14 * std::max(1.0, std::abs(lo))) {
        total += dt * power_integral(std::max(u, std::abs(p)), 1.0, q);
        continue;
      }
      const double density = dt / (hi - lo);
      total += side(std::max(lo, 0.0), std::max(hi, 0.0), density);
      total += side(std::max(-hi, 0.0), std::max(-lo, 0.0), density);
    }
    return total;
  }
  const auto [left, right] = half_cells(occ);
  const Eigen::ArrayXd eta = singular_radius(occ);
  const double H = occ.hurst;
  const ChiRule& chi = chi_rule(int(d));
  for (Eigen::Index k = 0; k < m; ++k) {
    const double dist = (occ.positions.row(k).transpose() - x).norm();
    if (dist >= eta(k)) {
      total += occ.weights(k) * power_integral(std::max(u, dist), 1.0, q);
      continue;
    }
    const double sigma = occ.local_scale(k);
    for (Eigen::Index i = 0; i < chi.nodes.size(); ++i) {
      const double sr = sigma * chi.nodes(i);
      for (double a : {left(k), right(k)}) {
        if (a <= 0) continue;
        // time in B(x, r) is min(a, (r / sr)^{1/H}); it saturates at r_a = sr a^H
        const double ra = sr * std::pow(a, H);
        double v = std::pow(sr, -1.0 / H) * power_integral(u, std::min(1.0, ra), q + 1.0 / H);
        v += a * power_integral(std::max(u, ra), 1.0, q);
        total += chi.weights(i) * v;
      }
    }
  }
  return total;
}

DensityLimitReport average_density(const OccupationMeasure& occ, double s, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   std::vector<double> u_grid) {
  check_point(occ, x);
  if (!(s > 0 && s <= double(occ.dim()))) throw ParameterError("average_density: s must lie in (0, d]");
  check_decreasing(u_grid, 0.0, 1.0, "u");
  DensityLimitReport rep;
  rep.kind = "average_density";
  rep.x = x;
  rep.order = s;
  rep.parameters = u_grid;
  std::vector<double> inv_log;
  for (double u : u_grid) {
    rep.values.push_back(ball_mass_integral(occ, x, s, u) / std::abs(std::log(u)));
    inv_log.push_back(1.0 / std::abs(std::log(u)));
  }
  finish(rep, extrapolate_to_zero(inv_log, rep.values, 2));
  return rep;
}

DensityLimitReport potential_limit_varying_order(const OccupationMeasure& occ, double s,
                                                 const Eigen::Ref<const Eigen::VectorXd>& x, std::vector<double> eps_grid,
                                                 std::vector<double> u_grid) {
  check_point(occ, x);
  const double d = double(occ.dim());
  if (!(s > 0 && s <= d)) throw ParameterError("potential_limit_varying_order: s must lie in (0, d]");
  check_decreasing(eps_grid, 0.0, s, "eps");
  DensityLimitReport rep;
  rep.kind = "varying_order";
  rep.x = x;
  rep.order = s;
  rep.parameters = eps_grid;
  for (double e : eps_grid) rep.values.push_back(e * riesz_potential(occ, d - s + e, x, {false}).value);
  finish(rep, extrapolate_to_zero(rep.parameters, rep.values));
  const DensityLimitReport ad = average_density(occ, s, x, std::move(u_grid));
  rep.comparison = s * ad.extrapolated;
  const double scale = std::max(std::abs(*rep.comparison), std::abs(rep.extrapolated));
  rep.relative_difference = scale > 0 ? std::abs(rep.extrapolated - *rep.comparison) / scale : 0.0;
  return rep;
}

double kernel_k_eps(double eps, double u) {
  if (!(eps > 0)) throw ParameterError("kernel_k_eps: eps must be positive");
  if (!(u > 0 && u < 1)) return 0.0;
  return eps * eps * std::pow(u, eps - 1.0) * std::abs(std::log(u));
}

KernelIdentityReport kernel_identities(double eps, double r) {
  if (!(eps > 0)) throw ParameterError("kernel_identities: eps must be positive");
  if (!(r >= 0 && r < 1)) throw ParameterError("kernel_identities: r must lie in [0, 1)");
  KernelIdentityReport rep;
  rep.eps = eps;
  rep.r = r;
  rep.specific_exact = eps * std::pow(r, eps);
  // u = c w^{1/eps} removes the power singularity at 0; du = u / (eps w) dw. Evaluated through
  // log u = log c + log(w) / eps so that tiny u never forms.
  auto pulled_back = [eps](double c, bool divide_log) {
    const double log_c = c > 0 ? std::log(c) : 0.0;
    return [=](double w) {
      if (!(w > 0)) return 0.0;
      const double log_u = log_c + std::log(w) / eps;
      if (!(log_u < 0)) return 0.0;
      // k_eps(u) u / (eps w) = eps u^eps |log u| / w with u^eps = c^eps w
      const double base = eps * std::exp(eps * log_c);
      return divide_log ? base : base * -log_u;
    };
  };
  rep.normalization = integrate_graded(pulled_back(1.0, false), 0.0, 1.0);
  if (r > 0) rep.specific = integrate_graded(pulled_back(r, true), 0.0, 1.0);
  return rep;
}

double kernel_tail_mass(double eps, double u0) {
  if (!(eps > 0)) throw ParameterError("kernel_tail_mass: eps must be positive");
  if (u0 >= 1) return 0.0;
  if (u0 <= 0) return kernel_identities(eps, 0.0).normalization;
  const double w0 = std::pow(u0, eps);
  double sum = 0.0;
  const int panels = 8;
  for (int p = 0; p < panels; ++p) {
    const double a = w0 + (1.0 - w0) * p / panels, b = w0 + (1.0 - w0) * (p + 1) / panels;
    sum += integrate(
        [eps](double w) {
          const double u = std::pow(w, 1.0 / eps);
          return kernel_k_eps(eps, u) * u / (eps * w);
        },
        a, b, 20);
  }
  return sum;
}

BallMassEnvelope ball_mass_envelope(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x, double s,
                                    int k_min, int k_max) {
  check_point(occ, x);
  if (!(s > 0 && s <= double(occ.dim()))) throw ParameterError("ball_mass_envelope: s must lie in (0, d]");
  if (k_min < 1 || k_max < k_min) throw ParameterError("ball_mass_envelope: need 1 <= k_min <= k_max");
  BallMassEnvelope env;
  env.x = x;
  env.order = s;
  std::vector<double> lx, ly;
  for (int k = k_min; k <= k_max; ++k) {
    const double r = std::ldexp(1.0, -k);
    const double mass = ball_mass(occ, x, r);
    const double ratio = mass / (std::pow(r, s) * std::abs(std::log(r)));
    env.radii.push_back(r);
    env.masses.push_back(mass);
    env.ratios.push_back(ratio);
    env.sup = std::max(env.sup, ratio);
    if (ratio > 0) {
      lx.push_back(-std::log(r));
      ly.push_back(std::log(ratio));
    }
  }
  if (lx.size() > 1) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    env.trend = sxy / sxx;
  }
  env.diverging = env.ratios.front() > 0 && env.ratios.back() > 10.0 * env.ratios.front();
  return env;
}

}  // namespace occuriesz
