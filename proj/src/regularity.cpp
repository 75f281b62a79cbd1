#include "occuriesz/regularity.hpp"

#include "occuriesz/parallel.hpp"
#include "occuriesz/process_sim.hpp"
#include "occuriesz/rng.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

namespace occuriesz {

namespace {

struct Fit {
  double slope = 0.0, intercept = 0.0;
};

Fit log_log_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<bool>& used) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (used[i] && y[i] > 0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  Fit f;
  if (lx.size() < 2) {
    f.slope = f.intercept = std::numeric_limits<double>::quiet_NaN();
    return f;
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

double aggregate_values(std::vector<double> v, Aggregate a) {
  switch (a) {
    case Aggregate::Max: return *std::max_element(v.begin(), v.end());
    case Aggregate::Min: return *std::min_element(v.begin(), v.end());
    case Aggregate::Median: return quantile(std::move(v), 0.5);
  }
  return 0.0;
}

std::vector<double> aggregate_columns(const std::vector<std::vector<double>>& per_rep, const std::vector<std::size_t>& rows,
                                      std::size_t cols, Aggregate a) {
  std::vector<double> out(cols);
  std::vector<double> column(rows.size());
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = per_rep[rows[i]][j];
    out[j] = aggregate_values(column, a);
  }
  return out;
}

void check_radii(const std::vector<double>& radii, double t, double T) {
  if (radii.empty()) throw ParameterError("radius grid is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0 && radii[i] < std::min(t, T - t) + 1e-15))
      throw ParameterError("radii must lie in (0, min(t, T - t))");
    if (i && !(radii[i] < radii[i - 1])) throw ParameterError("radii must be strictly decreasing");
    if (!(radii[i] < std::exp(-1.0))) throw ParameterError("radii must stay below 1/e for the log corrections");
  }
}

double loglog(double r) { return std::log(std::log(1.0 / r)); }

// Shared tail of every scaling experiment: aggregation, fits, bootstrap.
void finish_fit(ScalingFit& fit, const ScalingOptions& options, const std::vector<double>& correction) {
  const std::size_t reps = fit.per_rep.size(), cols = fit.radii.size();
  std::vector<std::size_t> all(reps);
  std::iota(all.begin(), all.end(), 0);
  fit.statistics = aggregate_columns(fit.per_rep, all, cols, fit.aggregate);
  auto corrected = [&](const std::vector<double>& stat) {
    std::vector<double> out(stat.size());
    for (std::size_t j = 0; j < stat.size(); ++j) out[j] = stat[j] / correction[j];
    return out;
  };
  const Fit raw = log_log_fit(fit.radii, fit.statistics, fit.used);
  fit.slope = raw.slope;
  fit.intercept = raw.intercept;
  fit.slope_corrected = log_log_fit(fit.radii, corrected(fit.statistics), fit.used).slope;
  if (options.bootstrap > 0 && reps > 1) {
    std::vector<double> slopes, slopes_corr;
    std::vector<std::size_t> rows(reps);
    for (int b = 0; b < options.bootstrap; ++b) {
      CounterRng rng(options.bootstrap_seed, std::uint64_t(b));
      for (auto& r : rows) r = std::size_t(rng.uniform() * double(reps)) % reps;
      const auto stat = aggregate_columns(fit.per_rep, rows, cols, fit.aggregate);
      slopes.push_back(log_log_fit(fit.radii, stat, fit.used).slope);
      slopes_corr.push_back(log_log_fit(fit.radii, corrected(stat), fit.used).slope);
    }
    fit.ci = {quantile(slopes, 0.025), quantile(slopes, 0.975)};
    fit.ci_corrected = {quantile(slopes_corr, 0.025), quantile(slopes_corr, 0.975)};
    // percentile intervals of a max or min statistic can miss the full-sample slope; widen to keep it inside
    fit.ci.first = std::min(fit.ci.first, fit.slope);
    fit.ci.second = std::max(fit.ci.second, fit.slope);
    fit.ci_corrected.first = std::min(fit.ci_corrected.first, fit.slope_corrected);
    fit.ci_corrected.second = std::max(fit.ci_corrected.second, fit.slope_corrected);
  } else {
    fit.ci = {fit.slope, fit.slope};
    fit.ci_corrected = {fit.slope_corrected, fit.slope_corrected};
  }
}

std::size_t window_count(const SamplePath& path, double t, double r) {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < path.size(); ++i) n += std::abs(path.times(i) - t) < r;
  return n;
}

Eigen::Index nearest_index(const SamplePath& path, double t) {
  const auto* begin = path.times.data();
  const auto* end = begin + path.size();
  const auto* it = std::lower_bound(begin, end, t);
  if (it == end) return path.size() - 1;
  if (it != begin && t - *(it - 1) < *it - t) --it;
  return Eigen::Index(it - begin);
}

// Draws replication 0 to size the windows; all replications share the time grid.
ScalingFit start_fit(const PathSource& source, const ScalingOptions& options, const char* statistic, double& t,
                     double& T, SamplePath& first) {
  if (!source.draw) throw ParameterError("path source has no generator");
  if (options.n_reps == 0) throw ParameterError("n_reps must be positive");
  first = source.draw(0);
  T = first.horizon();
  t = options.t_center.value_or(0.5 * T);
  check_radii(options.radii, t, T);
  ScalingFit fit;
  fit.statistic = statistic;
  fit.label = source.label;
  fit.radii = options.radii;
  for (double r : fit.radii) {
    const std::size_t n = window_count(first, t, r);
    fit.window_samples.push_back(n);
    fit.used.push_back(n >= options.min_window_samples);
  }
  fit.per_rep.assign(options.n_reps, std::vector<double>(fit.radii.size(), 0.0));
  return fit;
}

}  // namespace

ProcessTraits process_traits(const ProcessSpec& spec) {
  ProcessTraits tr;
  tr.hurst = effective_hurst(spec);
  tr.dim = spec.dim;
  switch (spec.kind) {
    case ProcessKind::ROSENBLATT: tr.iota = 1.0; break;
    case ProcessKind::YOUNG_SDE:
      tr.theta = (8.0 * spec.dim + 1.0) / tr.hurst;
      tr.corrections_testable = false;
      break;
    default: break;
  }
  return tr;
}

PathSource path_source(const ProcessSpec& spec) {
  validate(spec);
  PathSource src;
  src.draw = [spec](std::uint64_t rep) { return simulate(spec, rep); };
  src.traits = process_traits(spec);
  src.label = std::string(to_string(spec.kind));
  return src;
}

std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::Max: return "max";
    case Aggregate::Min: return "min";
    case Aggregate::Median: return "median";
  }
  return "?";
}

std::vector<double> default_radii() {
  std::vector<double> r;
  for (int k = 6; k <= 16; ++k) r.push_back(std::ldexp(1.0, -k));
  return r;
}

void require_admissible(double H, int d, double alpha, std::optional<double> beta_incr) {
  const Admissibility a = check_admissible(H, d, alpha, beta_incr);
  if (!a.accepted) throw ValidationError({a.condition + ": " + a.reason});
}

ScalingFit sup_L_scaling(const PathSource& source, double alpha, const ScalingOptions& options) {
  const ProcessTraits& tr = source.traits;
  require_admissible(tr.hurst, tr.dim, alpha);
  double t = 0, T = 0;
  SamplePath first;
  ScalingFit fit = start_fit(source, options, "sup_L", t, T, first);
  fit.aggregate = options.aggregate.value_or(Aggregate::Max);
  fit.expected = 1.0 - tr.hurst * (double(tr.dim) - alpha);
  fit.correction_kind = "loglog";
  fit.correction_exponent = tr.hurst * (tr.theta + double(tr.dim) - alpha);
  const double dt = T / double(first.size() - 1);
  parallel_for(options.n_reps, options.workers, [&](std::size_t rep) {
    const SamplePath path = rep == 0 ? first : source.draw(rep);
    std::vector<Eigen::VectorXd> carry;
    // smallest window first so each argmax can seed the next, larger window
    for (std::size_t j = fit.radii.size(); j-- > 0;) {
      const double r = fit.radii[j];
      const OccupationMeasure occ = occupation_measure(path, t - r, t + r);
      double value;
      if (!options.fixed_sites.empty()) {
        value = 0.0;
        if (alpha == 0.0) {
          const double w = std::max(std::pow(dt, tr.hurst), std::pow(2.0 * r, tr.hurst) / 16.0);
          const LocalTimeTable table = local_time_histogram(occ, w);
          for (const auto& x : options.fixed_sites) value = std::max(value, table.density(x));
        } else {
          const PotentialEvaluator eval(occ, alpha);
          const double c = rescaling_constant(alpha, tr.dim);
          for (const auto& x : options.fixed_sites) value = std::max(value, c * eval(x));
        }
      } else if (alpha == 0.0) {
        const double w = std::max(std::pow(dt, tr.hurst), std::pow(2.0 * r, tr.hurst) / 16.0);
        value = local_time_histogram(occ, w).max_density().first;
      } else {
        SupOptions so;
        so.max_sites = options.max_sites;
        so.extra_points = carry;
        const SupPotential sup = sup_potential_over_space(occ, alpha, so);
        value = sup.value;
        carry.assign(1, sup.argmax);
      }
      fit.per_rep[rep][j] = value;
    }
  });
  std::vector<double> corr;
  for (double r : fit.radii) corr.push_back(std::pow(loglog(r), fit.correction_exponent));
  if (!tr.corrections_testable) {
    std::fill(corr.begin(), corr.end(), 1.0);
    fit.notes.push_back("log correction not fitted: its power is not testable at this scale");
  }
  finish_fit(fit, options, corr);
  fit.notes.push_back("time center fixed at t = " + std::to_string(t));
  return fit;
}

ScalingFit lower_oscillation(const PathSource& source, double alpha_for_correction, const ScalingOptions& options) {
  const ProcessTraits& tr = source.traits;
  require_admissible(tr.hurst, tr.dim, alpha_for_correction);
  double t = 0, T = 0;
  SamplePath first;
  ScalingFit fit = start_fit(source, options, "lower_oscillation", t, T, first);
  fit.aggregate = options.aggregate.value_or(Aggregate::Min);
  fit.expected = tr.hurst;
  fit.correction_kind = "loglog";
  fit.correction_exponent = -tr.hurst * (tr.theta / (double(tr.dim) - alpha_for_correction) + 1.0);
  parallel_for(options.n_reps, options.workers, [&](std::size_t rep) {
    const SamplePath path = rep == 0 ? first : source.draw(rep);
    const Eigen::Index c = nearest_index(path, t);
    const Eigen::RowVectorXd xc = path.point(c);
    for (std::size_t j = 0; j < fit.radii.size(); ++j) {
      double osc = 0.0;
      for (Eigen::Index i = c; i >= 0 && t - path.times(i) < fit.radii[j]; --i)
        osc = std::max(osc, (path.point(i) - xc).norm());
      for (Eigen::Index i = c; i < path.size() && path.times(i) - t < fit.radii[j]; ++i)
        osc = std::max(osc, (path.point(i) - xc).norm());
      fit.per_rep[rep][j] = osc;
    }
  });
  std::vector<double> corr;
  for (double r : fit.radii) corr.push_back(std::pow(loglog(r), fit.correction_exponent));
  if (!tr.corrections_testable) fit.notes.push_back("log correction power is not testable at this scale");
  finish_fit(fit, options, corr);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < fit.radii.size(); ++j) {
    const double ratio = fit.statistics[j] / (std::pow(fit.radii[j], tr.hurst) * corr[j]);
    fit.normalized.push_back(ratio);
    if (fit.used[j]) lowest = std::min(lowest, ratio);
  }
  fit.normalized_min = lowest;
  return fit;
}

double max_window_oscillation(const SamplePath& path, std::size_t lag) {
  const Eigen::Index n = path.size();
  if (lag == 0 || n < 2) return 0.0;
  const Eigen::Index w = Eigen::Index(std::min<std::size_t>(lag, std::size_t(n - 1)));
  if (path.dim() == 1) {
    // range of every window of w + 1 consecutive samples via monotone deques
    std::deque<Eigen::Index> hi, lo;
    double best = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = path.positions(i, 0);
      while (!hi.empty() && path.positions(hi.back(), 0) <= v) hi.pop_back();
      while (!lo.empty() && path.positions(lo.back(), 0) >= v) lo.pop_back();
      hi.push_back(i);
      lo.push_back(i);
      if (hi.front() < i - w) hi.pop_front();
      if (lo.front() < i - w) lo.pop_front();
      best = std::max(best, path.positions(hi.front(), 0) - path.positions(lo.front(), 0));
    }
    return best;
  }
  const Eigen::Index stride = std::max<Eigen::Index>(1, w / 32);
  double best2 = 0.0;
  for (Eigen::Index c = 0; c < n; c += stride) {
    const Eigen::RowVectorXd xc = path.point(c);
    for (Eigen::Index i = std::max<Eigen::Index>(0, c - w); i <= std::min(n - 1, c + w); ++i)
      best2 = std::max(best2, (path.point(i) - xc).squaredNorm());
  }
  return std::sqrt(best2);
}

ScalingFit modulus_of_continuity(const PathSource& source, const ScalingOptions& options) {
  const ProcessTraits& tr = source.traits;
  ScalingOptions opts = options;
  // windows may sit anywhere on the path: only the horizon limits the radii
  double T = 0;
  SamplePath first;
  if (!source.draw) throw ParameterError("path source has no generator");
  first = source.draw(0);
  T = first.horizon();
  opts.t_center = 0.5 * T;
  double t = 0;
  ScalingFit fit = start_fit(PathSource{[&](std::uint64_t) { return first; }, tr, source.label}, opts, "modulus", t, T, first);
  fit.aggregate = options.aggregate.value_or(Aggregate::Max);
  fit.expected = tr.hurst;
  fit.correction_kind = "log";
  fit.correction_exponent = tr.iota;
  const double dt = T / double(first.size() - 1);
  std::vector<std::size_t> lags;
  for (std::size_t j = 0; j < fit.radii.size(); ++j) {
    const std::size_t lag = std::size_t(std::ceil(fit.radii[j] / dt - 1e-9)) - 1;
    lags.push_back(lag);
    fit.window_samples[j] = 2 * lag + 1;
    fit.used[j] = fit.window_samples[j] >= options.min_window_samples;
  }
  parallel_for(options.n_reps, options.workers, [&](std::size_t rep) {
    const SamplePath path = rep == 0 ? first : source.draw(rep);
    for (std::size_t j = 0; j < fit.radii.size(); ++j) fit.per_rep[rep][j] = max_window_oscillation(path, lags[j]);
  });
  std::vector<double> corr;
  for (double r : fit.radii) corr.push_back(std::pow(std::log(1.0 / r), tr.iota));
  finish_fit(fit, options, corr);
  std::vector<double> used_ratios;
  for (std::size_t j = 0; j < fit.radii.size(); ++j) {
    const double ratio = fit.statistics[j] / (std::pow(fit.radii[j], tr.hurst) * corr[j]);
    fit.normalized.push_back(ratio);
    if (fit.used[j]) used_ratios.push_back(ratio);
  }
  const double med = quantile(used_ratios, 0.5);
  fit.ratio_spread = med > 0 ? quantile(used_ratios, 0.9) / med : std::numeric_limits<double>::infinity();
  fit.notes.push_back("oscillation maximized over all window positions on the sample grid");
  return fit;
}

HolderEstimate potential_field_holder(const PathSource& source, double alpha, double beta_incr,
                                      const HolderOptions& options) {
  const ProcessTraits& tr = source.traits;
  if (!(alpha > 0)) throw ParameterError("potential_field_holder: alpha must be positive");
  require_admissible(tr.hurst, tr.dim, alpha, beta_incr);
  if (!source.draw) throw ParameterError("path source has no generator");
  if (options.n_reps == 0) throw ParameterError("n_reps must be positive");
  HolderEstimate est;
  est.alpha = alpha;
  est.beta_incr = beta_incr;
  est.gamma1_target = beta_incr;
  est.gamma2_target = 1.0 - tr.hurst * (double(tr.dim) - alpha);
  est.h_grid = options.h_grid;
  if (est.h_grid.empty())
    for (int k = 4; k <= 10; ++k) est.h_grid.push_back(std::ldexp(1.0, -k));
  est.delta_grid = options.delta_grid;
  if (est.delta_grid.empty())
    for (int k = 4; k <= 12; ++k) est.delta_grid.push_back(std::ldexp(1.0, -k));

  const SamplePath first = source.draw(0);
  const double T = first.horizon();
  const double hmax = *std::max_element(est.h_grid.begin(), est.h_grid.end());
  if (!(hmax < T)) throw ParameterError("potential_field_holder: time increments must be below the horizon");
  std::vector<double> t_grid = options.t_grid;
  if (t_grid.empty())
    for (int k = 0; k < 32; ++k) t_grid.push_back((T - hmax) * k / 31.0);
  for (double s : t_grid)
    if (!(s >= 0 && s + hmax <= T + 1e-12)) throw ParameterError("potential_field_holder: t grid leaves [0, T - max h]");

  const double c = rescaling_constant(alpha, tr.dim);
  std::vector<std::vector<double>> spatial(options.n_reps), temporal(options.n_reps);
  parallel_for(options.n_reps, options.workers, [&](std::size_t rep) {
    const SamplePath path = rep == 0 ? first : source.draw(rep);
    std::vector<Eigen::VectorXd> xs = options.x_grid;
    if (xs.empty())
      for (double s : t_grid) xs.push_back(path.point(nearest_index(path, s)).transpose());
    const OccupationMeasure whole = occupation_measure(path, 0.0, T);
    const PotentialEvaluator field(whole, alpha);
    auto& sp = spatial[rep];
    for (double delta : est.delta_grid) {
      double m = 0.0;
      for (const auto& x : xs) {
        Eigen::VectorXd y = x;
        y(0) += delta;
        m = std::max(m, c * std::abs(field(y) - field(x)));
      }
      sp.push_back(m);
    }
    auto& tp = temporal[rep];
    for (double h : est.h_grid) {
      double m = 0.0;
      for (double s : t_grid) {
        const OccupationMeasure win = occupation_measure(path, s, s + h);
        const PotentialEvaluator inc(win, alpha);
        for (const auto& x : xs) m = std::max(m, c * inc(x));
      }
      tp.push_back(m);
    }
  });
  est.spatial_max.assign(est.delta_grid.size(), 0.0);
  est.temporal_max.assign(est.h_grid.size(), 0.0);
  for (std::size_t rep = 0; rep < options.n_reps; ++rep) {
    for (std::size_t j = 0; j < est.delta_grid.size(); ++j) est.spatial_max[j] = std::max(est.spatial_max[j], spatial[rep][j]);
    for (std::size_t j = 0; j < est.h_grid.size(); ++j) est.temporal_max[j] = std::max(est.temporal_max[j], temporal[rep][j]);
  }
  est.gamma1 = log_log_fit(est.delta_grid, est.spatial_max, std::vector<bool>(est.delta_grid.size(), true)).slope;
  est.gamma2 = log_log_fit(est.h_grid, est.temporal_max, std::vector<bool>(est.h_grid.size(), true)).slope;
  return est;
}

}  // namespace occuriesz
