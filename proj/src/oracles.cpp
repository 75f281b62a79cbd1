#include "occuriesz/oracles.hpp"

#include "occuriesz/parallel.hpp"
#include "occuriesz/process_sim.hpp"
#include "occuriesz/quadrature.hpp"
#include "occuriesz/regularity.hpp"
#include "occuriesz/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

namespace occuriesz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

void check_partition(const std::vector<double>& partition) {
  if (partition.size() < 2) throw ParameterError("partition needs at least two times");
  if (partition.front() != 0.0) throw ParameterError("partition must start at 0");
  for (std::size_t j = 1; j < partition.size(); ++j)
    if (!(partition[j] > partition[j - 1])) throw ParameterError("partition must be strictly increasing");
}

void check_xi(const Eigen::MatrixXd& xi, std::size_t n, int d) {
  if (xi.rows() != Eigen::Index(n) || xi.cols() != d)
    throw ParameterError(format("xi must be %g x %g", double(n), double(d)));
  if (!((xi.array() != 0.0).all() && xi.allFinite())) throw ParameterError("xi coordinates must be finite and nonzero");
}

// Per coordinate quadratic forms xi_l^T G xi_l.
Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& xi) {
  return (xi.transpose() * gram * xi).diagonal();
}

struct Config {
  std::vector<double> partition;
  Eigen::MatrixXd xi;
};

Config random_config(CounterRng& rng, int n, int d, double T) {
  Config c;
  c.partition.resize(std::size_t(n) + 1);
  c.partition[0] = 0.0;
  std::vector<double> u(static_cast<std::size_t>(n));
  for (double& v : u) v = rng.uniform() * T;
  std::sort(u.begin(), u.end());
  std::copy(u.begin(), u.end(), c.partition.begin() + 1);
  c.xi.resize(n, d);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < d; ++l) {
      const double mag = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
      c.xi(j, l) = (rng() & 1) ? mag : -mag;
    }
  return c;
}

bool strictly_increasing(const std::vector<double>& p) {
  for (std::size_t j = 1; j < p.size(); ++j)
    if (!(p[j] > p[j - 1])) return false;
  return true;
}

// Gram without the PSD exception; nullopt when numerically singular or indefinite.
std::optional<Eigen::MatrixXd> gram_if_regular(const CovarianceModel& model, const std::vector<double>& partition) {
  Eigen::MatrixXd g;
  try {
    g = increment_gram(model, partition);
  } catch (const ModelError&) {
    return std::nullopt;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 1e-12 * es.eigenvalues().maxCoeff())) return std::nullopt;
  return g;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

}  // namespace

CovarianceModel fbm_model(double H, int d) {
  if (!(H > 0 && H < 1)) throw ParameterError(format("Hurst index %g must lie in (0, 1)", H));
  if (d < 1) throw ParameterError("dimension must be positive");
  CovarianceModel m;
  m.kernel = [H](double s, double t) { return fbm_covariance(H, s, t); };
  m.dim = d;
  m.hurst = H;
  m.name = "fbm";
  return m;
}

CovarianceModel brownian_model(int d) {
  if (d < 1) throw ParameterError("dimension must be positive");
  CovarianceModel m;
  m.kernel = [](double s, double t) { return std::min(s, t); };
  m.dim = d;
  m.hurst = 0.5;
  m.name = "brownian";
  return m;
}

Eigen::MatrixXd increment_gram(const CovarianceModel& model, const std::vector<double>& partition) {
  check_partition(partition);
  const Eigen::Index n = Eigen::Index(partition.size()) - 1;
  Eigen::MatrixXd R(n + 1, n + 1);
  for (Eigen::Index i = 0; i <= n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) R(i, j) = R(j, i) = model.kernel(partition[i], partition[j]);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 1; j <= n; ++j)
    for (Eigen::Index k = 1; k <= n; ++k) g(j - 1, k - 1) = R(j, k) - R(j - 1, k) - R(j, k - 1) + R(j - 1, k - 1);
  g = 0.5 * (g + g.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  if (es.eigenvalues().minCoeff() < -1e-10 * top)
    throw ModelError(format("increment Gram matrix is not positive semidefinite (eigenvalue %g, scale %g)",
                            es.eigenvalues().minCoeff(), top));
  return g;
}

double gaussian_charfun_exact(const CovarianceModel& model, const std::vector<double>& partition,
                              const Eigen::MatrixXd& xi) {
  check_partition(partition);
  check_xi(xi, partition.size() - 1, model.dim);
  const Eigen::MatrixXd g = increment_gram(model, partition);
  return std::exp(-0.5 * quadratic_forms(g, xi).sum());
}

CharfunSample empirical_charfun(const ProcessSpec& spec, const std::vector<double>& partition, const Eigen::MatrixXd& xi,
                                std::size_t samples, int workers) {
  validate(spec);
  check_partition(partition);
  check_xi(xi, partition.size() - 1, spec.dim);
  if (samples < 2) throw ParameterError("need at least two samples");
  const double dt = spec.horizon / double(spec.n_steps);
  std::vector<Eigen::Index> idx;
  for (double t : partition) {
    const double k = std::round(t / dt);
    if (std::abs(k * dt - t) > 1e-9 * spec.horizon || k > double(spec.n_steps))
      throw ParameterError(format("partition time %g is not on the simulation grid (step %g)", t, dt));
    idx.push_back(Eigen::Index(k));
  }
  std::vector<double> re(samples), im(samples);
  parallel_for(samples, workers, [&](std::size_t r) {
    const SamplePath p = simulate(spec, r);
    double phase = 0.0;
    for (std::size_t j = 1; j < idx.size(); ++j)
      phase += xi.row(Eigen::Index(j) - 1).dot(p.point(idx[j]) - p.point(idx[j - 1]));
    re[r] = std::cos(phase);
    im[r] = std::sin(phase);
  });
  auto mean_se = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / double(v.size() - 1) / double(v.size()))};
  };
  CharfunSample out;
  std::tie(out.real, out.real_se) = mean_se(re);
  std::tie(out.imag, out.imag_se) = mean_se(im);
  out.modulus = std::hypot(out.real, out.imag);
  return out;
}

LndReport lnd_constant_estimate(const CovarianceModel& model, int m, const SweepOptions& options) {
  if (m < 1 || m > 6) throw ParameterError("lnd_constant_estimate needs 1 <= m <= 6");
  const int d = model.dim;
  struct Trial {
    bool skipped = false;
    double sum_ratio = kInf, product_ratio = kInf;
    Config config;
  };
  std::vector<Trial> trials(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t r) {
    CounterRng rng(options.seed, r, 0x1d);
    Trial& tr = trials[r];
    tr.config = random_config(rng, m, d, options.horizon);
    if (!strictly_increasing(tr.config.partition)) {
      tr.skipped = true;
      return;
    }
    const auto g = gram_if_regular(model, tr.config.partition);
    if (!g) {
      tr.skipped = true;
      return;
    }
    const Eigen::VectorXd q = quadratic_forms(*g, tr.config.xi);
    const Eigen::VectorXd s = (tr.config.xi.array().square().colwise() * g->diagonal().array()).colwise().sum().transpose();
    tr.sum_ratio = q.sum() / s.sum();
    tr.product_ratio = q.sum() / s.prod();
  });
  LndReport rep;
  rep.trials = options.trials;
  rep.c_hat = rep.c_hat_product = kInf;
  for (const Trial& tr : trials) {
    if (tr.skipped) {
      ++rep.skipped;
      continue;
    }
    if (tr.sum_ratio < rep.c_hat) {
      rep.c_hat = tr.sum_ratio;
      rep.witness_partition = tr.config.partition;
      rep.witness_xi = tr.config.xi;
    }
    rep.c_hat_product = std::min(rep.c_hat_product, tr.product_ratio);
  }
  return rep;
}

BoundReport assumption_i_sweep(const CovarianceModel& model, int n_max, const SweepOptions& options,
                               std::optional<double> lnd_constant) {
  if (n_max < 1 || n_max > 4) throw ParameterError("assumption_i_sweep needs 1 <= n_max <= 4");
  const int d = model.dim;
  const double H = model.hurst;
  BoundReport rep;
  rep.name = "assumption-i";

  // Per coordinate LND constant: coordinates are independent, so the one-dimensional ratio governs.
  CovarianceModel one = model;
  one.dim = 1;
  double C = 0.0;
  if (lnd_constant) {
    C = *lnd_constant;
  } else {
    SweepOptions lo = options;
    lo.seed = derive_seed(options.seed, 0x14d);
    C = kInf;
    for (int m = 1; m <= n_max; ++m) C = std::min(C, lnd_constant_estimate(one, m, lo).c_hat);
  }

  struct Trial {
    bool skipped = false;
    double lnd_ratio = kInf;   // smallest per coordinate LND ratio seen in this configuration
    double log_lhs = 0.0;
    Eigen::ArrayXXd log_scale;  // log(|xi| tau^H) per entry
    Config config;
  };
  std::vector<Trial> trials(options.trials);
  parallel_for(options.trials, options.workers, [&](std::size_t r) {
    CounterRng rng(options.seed, r, 0xa1);
    const int n = 1 + int(rng() % std::uint64_t(n_max));
    Trial& tr = trials[r];
    tr.config = random_config(rng, n, d, options.horizon);
    if (!strictly_increasing(tr.config.partition)) {
      tr.skipped = true;
      return;
    }
    Eigen::MatrixXd g;
    try {
      g = increment_gram(model, tr.config.partition);
    } catch (const ModelError&) {
      tr.skipped = true;
      return;
    }
    const Eigen::VectorXd q = quadratic_forms(g, tr.config.xi);
    tr.log_lhs = -0.5 * q.sum();
    const Eigen::ArrayXd diag = g.diagonal().array();
    for (int l = 0; l < d; ++l) {
      const double s = (tr.config.xi.col(l).array().square() * diag).sum();
      tr.lnd_ratio = std::min(tr.lnd_ratio, q(l) / s);
    }
    tr.log_scale.resize(n, d);
    for (int j = 0; j < n; ++j) {
      const double tau = tr.config.partition[std::size_t(j) + 1] - tr.config.partition[std::size_t(j)];
      for (int l = 0; l < d; ++l) tr.log_scale(j, l) = std::log(std::abs(tr.config.xi(j, l))) + H * std::log(tau);
    }
  });

  double observed = kInf;
  for (const Trial& tr : trials) observed = std::min(observed, tr.lnd_ratio);
  const double C_ref = std::min(C, observed);
  const double c0_ref = std::pow(std::max(1.0, 16.0 * std::exp(-2.0) / (C_ref * C_ref)), d);
  const double log_c0_ref = std::log(c0_ref);

  double log_c0_hat = -kInf;
  rep.worst_ratio = 0.0;
  for (const Trial& tr : trials) {
    if (tr.skipped) {
      ++rep.skipped;
      continue;
    }
    const int n = int(tr.log_scale.rows());
    const int entries = n * d;
    for (std::uint32_t mask = 0; mask < (1u << entries); ++mask) {
      // rhs without c0^n: prod |xi|^{-k} tau^{-H k}; theta = 0
      double log_rhs = 0.0;
      for (int e = 0; e < entries; ++e)
        if (mask >> e & 1u) log_rhs -= 4.0 * tr.log_scale(e / d, e % d);
      ++rep.n_configs;
      const double excess = tr.log_lhs - log_rhs;  // log(lhs / rhs')
      log_c0_hat = std::max(log_c0_hat, excess / n);
      const double log_ratio = excess - n * log_c0_ref;
      const double ratio = std::exp(log_ratio);
      if (log_ratio > 1e-12) ++rep.violations;
      if (ratio > rep.worst_ratio || rep.partition.empty()) {
        rep.worst_ratio = ratio;
        rep.partition = tr.config.partition;
        rep.xi = tr.config.xi;
        rep.k.assign(std::size_t(entries), 0);
        for (int e = 0; e < entries; ++e) rep.k[std::size_t(e)] = (mask >> e & 1u) ? 4 : 0;
      }
    }
  }
  rep.constants["c0_hat"] = std::exp(log_c0_hat);
  rep.constants["c0_reference"] = c0_ref;
  rep.constants["lnd_C"] = C_ref;
  rep.constants["lnd_C_independent"] = C;
  rep.constants["theta"] = 0.0;
  rep.notes.push_back(format("n <= %g only; the assumption quantifies over every n", double(n_max)));
  rep.notes.push_back("k_{j,l} in {0, 4} enumerated exhaustively per configuration");
  return rep;
}

BoundReport moment_bound_check(const ProcessSpec& spec, const MomentOptions& options) {
  validate(spec);
  if (options.p_grid.empty()) throw ParameterError("p grid is empty");
  for (double p : options.p_grid)
    if (!(p >= 1 && p <= 12)) throw ParameterError(format("moment order %g outside [1, 12]", p));
  for (double f : options.lags)
    if (!(f > 0 && f <= 1)) throw ParameterError("lags are fractions of the horizon in (0, 1]");
  const ProcessTraits traits = process_traits(spec);
  const double iota = options.iota.value_or(traits.iota);
  const double H = traits.hurst;
  const int d = spec.dim;
  const double pmax = *std::max_element(options.p_grid.begin(), options.p_grid.end());

  bool exact = spec.kind == ProcessKind::FBM || spec.kind == ProcessKind::BROWNIAN;
  double gauss_scale = 1.0;
  if (spec.kind == ProcessKind::STABLE_SYM) {
    if (spec.beta_stable < 2.0 && pmax >= spec.beta_stable)
      throw ParameterError(format("moments of order %g are infinite for stability index %g", pmax, spec.beta_stable));
    if (spec.beta_stable == 2.0) {
      exact = true;
      gauss_scale = std::sqrt(2.0);
    }
  }

  BoundReport rep;
  rep.name = "moment-bound";
  const std::size_t P = options.p_grid.size(), L = options.lags.size();
  std::vector<std::vector<double>> m(L, std::vector<double>(P));
  if (exact) {
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < P; ++b) {
        const double p = options.p_grid[b];
        m[a][b] = gauss_scale * std::pow(gaussian_norm_moment(d, p), 1.0 / p) / std::pow(p, iota);
      }
    rep.notes.push_back("exact Gaussian absolute moments");
  } else {
    const double dt = spec.horizon / double(spec.n_steps);
    std::vector<Eigen::Index> idx(L);
    std::vector<double> tau(L);
    for (std::size_t a = 0; a < L; ++a) {
      idx[a] = std::max<Eigen::Index>(1, Eigen::Index(std::llround(options.lags[a] * spec.horizon / dt)));
      tau[a] = double(idx[a]) * dt;
    }
    std::vector<std::vector<double>> norms(options.n_reps, std::vector<double>(L));
    parallel_for(options.n_reps, options.workers, [&](std::size_t r) {
      const SamplePath p = simulate(spec, r);
      for (std::size_t a = 0; a < L; ++a) norms[r][a] = (p.point(idx[a]) - p.point(0)).norm();
    });
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < P; ++b) {
        const double p = options.p_grid[b];
        double acc = 0.0;
        for (std::size_t r = 0; r < options.n_reps; ++r) acc += std::pow(norms[r][a], p);
        const double moment = std::pow(acc / double(options.n_reps), 1.0 / p);
        m[a][b] = moment / (std::pow(p, iota) * std::pow(tau[a], H));
      }
    rep.notes.push_back(format("Monte Carlo over %g paths", double(options.n_reps)));
  }

  double c1 = 0.0;
  rep.worst_ratio = 0.0;
  for (std::size_t a = 0; a < L; ++a) {
    double low = 0.0;
    for (std::size_t b = 0; b < P; ++b)
      if (options.p_grid[b] <= 2.0) low = std::max(low, m[a][b]);
    if (low == 0.0) low = m[a][0];
    for (std::size_t b = 0; b < P; ++b) {
      ++rep.n_configs;
      c1 = std::max(c1, m[a][b]);
      const double ratio = m[a][b] / (options.growth_factor * low);
      if (ratio > 1.0) ++rep.violations;
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.partition = {0.0, options.lags[a] * spec.horizon};
        rep.k = {int(b)};
        rep.constants["worst_p"] = options.p_grid[b];
      }
    }
  }
  rep.constants["c1_hat"] = c1;
  rep.constants["iota"] = iota;
  rep.constants["growth_factor"] = options.growth_factor;
  return rep;
}

TailReport tail_bound_check(const ProcessSpec& spec, double alpha, const TailOptions& options) {
  validate(spec);
  const ProcessTraits traits = process_traits(spec);
  const double H = traits.hurst;
  const int d = spec.dim;
  require_admissible(H, d, alpha);
  if (!(alpha > 0)) throw ParameterError("tail_bound_check needs alpha > 0");
  const double a = options.interval_start, b = options.interval_end;
  if (!(a >= 0 && b > a && b <= spec.horizon)) throw ParameterError("interval must lie in [0, T]");
  if (options.u_grid.size() < 2) throw ParameterError("u grid needs at least two points");
  if (options.n_reps < 10) throw ParameterError("need at least 10 replications");
  Eigen::VectorXd x = options.x.size() ? options.x : Eigen::VectorXd::Zero(d);
  if (x.size() != d) throw ParameterError("x has the wrong dimension");
  if (options.shift_time && !(*options.shift_time >= 0 && *options.shift_time <= spec.horizon))
    throw ParameterError("shift time must lie in [0, T]");

  TailReport rep;
  rep.n_reps = options.n_reps;
  rep.zeta = options.beta_incr < alpha ? 1.0 : 0.0;
  const double len = b - a;
  rep.normalizer = std::pow(len, 1.0 - H * (d - alpha)) * std::pow(std::log(std::exp(1.0) + len), 2.0 * d * rep.zeta);
  rep.u_grid = options.u_grid;
  for (double u : options.u_grid) rep.thresholds.push_back(std::pow(u, H * (traits.theta + d - alpha)));

  std::vector<double> values(options.n_reps);
  parallel_for(options.n_reps, options.workers, [&](std::size_t r) {
    const SamplePath p = simulate(spec, r);
    Eigen::VectorXd site = x;
    if (options.shift_time) {
      const double dt = spec.horizon / double(spec.n_steps);
      site += p.point(Eigen::Index(std::llround(*options.shift_time / dt))).transpose();
    }
    const OccupationMeasure occ = occupation_measure(p, a, b);
    PotentialOptions po;
    po.estimate_error = false;
    values[r] = rescaled_potential(occ, alpha, site, po).value / rep.normalizer;
  });

  auto survival = [&](const std::vector<double>& v) {
    std::vector<double> s;
    for (double th : rep.thresholds) {
      std::size_t c = 0;
      for (double y : v) c += y >= th;
      s.push_back(double(c) / double(v.size()));
    }
    return s;
  };
  auto slope_of = [&](const std::vector<double>& s) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] > 0) {
        xs.push_back(rep.u_grid[i]);
        ys.push_back(std::log(s[i]));
      }
    return xs.size() >= 2 ? ols_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
  };
  rep.survival = survival(values);
  rep.slope = slope_of(rep.survival);

  std::vector<double> boot;
  std::vector<double> resample(values.size());
  for (int k = 0; k < options.bootstrap; ++k) {
    CounterRng rng(options.bootstrap_seed, std::uint64_t(k));
    for (double& v : resample) v = values[rng() % values.size()];
    const double s = slope_of(survival(resample));
    if (std::isfinite(s)) boot.push_back(s);
  }
  if (boot.empty()) {
    rep.ci = {rep.slope, rep.slope};
  } else {
    rep.ci = {quantile(boot, 0.025), quantile(boot, 0.975)};
  }
  return rep;
}

double psi_gamma(double gamma, double s) {
  if (!(gamma > 0)) throw ParameterError(format("gamma = %g must be positive", gamma));
  if (!(s > 0)) throw ParameterError(format("psi_gamma needs s > 0, got %g", s));
  return s < 1.0 ? std::pow(s, -gamma) : std::log(std::exp(1.0) + s);
}

ElementaryTail elementary_tail(double q, double a) {
  if (!(q >= 1.0)) throw ParameterError(format("q = %g must be at least 1", q));
  if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError(format("a = %g must be positive and finite", a));
  // x = a e^v: integrand log(e + x)^{2q} x^{1 - 4q} in v, on unit panels until negligible
  const auto f = [&](double v) {
    const double x = a * std::exp(v);
    return std::exp(2 * q * std::log(std::log(std::exp(1.0) + x)) + (1.0 - 4 * q) * std::log(x));
  };
  double sum = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double panel = integrate(f, k, k + 1.0, 20);
    sum += panel;
    if (panel <= 1e-17 * sum) break;
  }
  ElementaryTail t;
  t.q = q;
  t.a = a;
  t.integral = sum;
  t.bound = std::exp(2 * q * std::log(std::log(std::exp(1.0) + a)) + (1.0 - 4 * q) * std::log(a)) / (4 * q - 2);
  return t;
}

std::optional<double> elementary_threshold(double q, std::vector<double> a_grid) {
  if (a_grid.empty()) throw ParameterError("empty a grid");
  std::sort(a_grid.begin(), a_grid.end());
  std::optional<double> from;
  for (auto it = a_grid.rbegin(); it != a_grid.rend(); ++it) {
    if (!elementary_tail(q, *it).holds()) break;
    from = *it;
  }
  return from;
}

double elementary_tail_constant(double q, double H, double horizon) {
  if (!(H > 0 && H < 1)) throw ParameterError(format("H = %g outside (0, 1)", H));
  if (!(horizon > 0)) throw ParameterError(format("horizon = %g must be positive", horizon));
  return elementary_tail(q, std::pow(horizon, -H)).integral;
}

namespace {

// F_k(l) = int_0^l s^{-a} F_{k-1}(l - s) ds with F_0 = 1, level by level. Each level is
// tabulated on a geometric grid of l and interpolated linearly in (log l, log F).
double simplex_recursive(int n, double a, double length) {
  const int per_octave = 16, octaves = 40;
  const int G = per_octave * octaves + 1;
  std::vector<double> log_l(G), log_f(G, 0.0);
  for (int i = 0; i < G; ++i) log_l[i] = std::log(length) - std::log(2.0) * double(G - 1 - i) / per_octave;
  auto previous = [&](double x) {
    if (!(x > 0)) return 0.0;
    const double lx = std::log(x);
    if (lx <= log_l.front()) {
      const double slope = (log_f[1] - log_f[0]) / (log_l[1] - log_l[0]);
      return std::exp(log_f[0] + slope * (lx - log_l[0]));
    }
    const double pos = std::min(double(G - 1), (lx - log_l[0]) / (log_l[1] - log_l[0]));
    const int i = std::min(G - 2, int(pos));
    const double w = pos - i;
    return std::exp((1 - w) * log_f[i] + w * log_f[i + 1]);
  };
  double result = 1.0;
  for (int k = 1; k <= n; ++k) {
    std::vector<double> next(G);
    for (int i = 0; i < G; ++i) {
      const double l = std::exp(log_l[i]);
      auto f = [&](double s) { return std::pow(s, -a) * previous(l - s); };
      const int levels = 40, order = 12;
      next[i] = integrate_graded(f, 0.0, 0.5 * l, GradeToward::Left, levels, 0.5, order) +
                integrate_graded(f, 0.5 * l, l, GradeToward::Right, levels, 0.5, order);
    }
    for (int i = 0; i < G; ++i) log_f[i] = std::log(next[i]);
    result = next[G - 1];
  }
  return result;
}

}  // namespace

SimplexIntegral simplex_beta_integral(int n, double a, double length) {
  if (!(a < 1)) throw ParameterError(format("simplex integral diverges for a = %g >= 1", a));
  if (n < 1) throw ParameterError("n must be positive");
  if (!(length > 0)) throw ParameterError("length must be positive");
  SimplexIntegral out;
  const double e = n * (1.0 - a);
  out.closed_form = std::exp(n * std::lgamma(1.0 - a) - std::lgamma(e) + e * std::log(length)) / e;
  out.quadrature = n <= 4 ? simplex_recursive(n, a, length) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

BoundReport maximum_principle_check(const std::function<SamplePath(std::uint64_t)>& draw, double alpha,
                                    const MaximumPrincipleOptions& options) {
  if (!(options.resolution > 0)) throw ParameterError("lattice resolution must be positive");
  struct Trial {
    double lattice_max = 0.0, path_max = 0.0, ratio = 0.0;
    Eigen::VectorXd witness;
  };
  std::vector<Trial> trials(options.trials);
  int d = 0;
  {
    const SamplePath first = draw(0);
    d = int(first.dim());
  }
  if (!(alpha > 0 && alpha < d)) throw ParameterError(format("alpha = %g must lie in (0, d = %g)", alpha, double(d)));
  const double factor = std::pow(2.0, d - alpha);
  parallel_for(options.trials, options.workers, [&](std::size_t r) {
    const SamplePath p = draw(r);
    const OccupationMeasure occ = occupation_measure(p, 0.0, p.horizon());
    const PotentialEvaluator U(occ, alpha);
    Trial& tr = trials[r];
    const std::size_t n = std::size_t(p.size());
    const std::size_t stride = std::max<std::size_t>(1, (n + options.max_sites - 1) / options.max_sites);
    for (std::size_t i = 0; i < n; i += stride) tr.path_max = std::max(tr.path_max, U(p.point(Eigen::Index(i)).transpose()));
    const Eigen::VectorXd lo = p.positions.colwise().minCoeff().transpose().array() - options.margin;
    const Eigen::VectorXd hi = p.positions.colwise().maxCoeff().transpose().array() + options.margin;
    Eigen::VectorXi counts(d);
    std::size_t total = 1;
    for (int l = 0; l < d; ++l) {
      counts(l) = int(std::floor((hi(l) - lo(l)) / options.resolution)) + 1;
      total *= std::size_t(counts(l));
    }
    Eigen::VectorXd site(d);
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t rest = k;
      for (int l = 0; l < d; ++l) {
        site(l) = lo(l) + double(rest % std::size_t(counts(l))) * options.resolution;
        rest /= std::size_t(counts(l));
      }
      const double v = U(site);
      if (v > tr.lattice_max || tr.witness.size() == 0) {
        tr.lattice_max = std::max(tr.lattice_max, v);
        tr.witness = site;
      }
    }
    if (std::isinf(tr.path_max))
      tr.ratio = std::isinf(tr.lattice_max) ? 1.0 / factor : 0.0;
    else
      tr.ratio = tr.lattice_max / (factor * tr.path_max);
  });
  BoundReport rep;
  rep.name = "maximum-principle";
  rep.n_configs = options.trials;
  double tightest = 0.0;
  for (const Trial& tr : trials) {
    if (tr.ratio > 1.0) ++rep.violations;
    if (tr.ratio >= rep.worst_ratio) {
      rep.worst_ratio = tr.ratio;
      rep.xi = tr.witness.transpose();
    }
    if (std::isfinite(tr.path_max) && tr.path_max > 0) tightest = std::max(tightest, tr.lattice_max / tr.path_max);
  }
  rep.constants["principle_factor"] = factor;
  rep.constants["max_lattice_over_path"] = tightest;
  rep.notes.push_back(format("lattice spacing %g, margin %g", options.resolution, options.margin));
  return rep;
}

}  // namespace occuriesz
