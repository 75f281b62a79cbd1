// Acceptance matrix: one PASS/FAIL line per criterion. Pass criterion numbers as arguments to
// run a subset. Exit status is nonzero when any selected criterion fails.

#include "occuriesz/limits.hpp"
#include "occuriesz/oracles.hpp"
#include "occuriesz/process_sim.hpp"
#include "occuriesz/regularity.hpp"
#include "occuriesz/runner.hpp"
#include "support/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace occuriesz;
using testsupport::ols;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ProcessSpec make_spec(ProcessKind kind, double H, int d, std::size_t n, std::uint64_t seed) {
  ProcessSpec s;
  s.kind = kind;
  s.hurst = H;
  s.dim = d;
  s.n_steps = n;
  s.seed = seed;
  return s;
}

// 1. sup_x L^alpha over shrinking windows, slope 1 - H (d - alpha)
Outcome sup_potential_exponent() {
  struct Cell {
    ProcessKind kind;
    double H;
    int d;
    double alpha;
  };
  const Cell cells[] = {{ProcessKind::BROWNIAN, 0.5, 1, 0.0},
                        {ProcessKind::BROWNIAN, 0.5, 1, 0.3},
                        {ProcessKind::FBM, 0.75, 2, 1.5},
                        {ProcessKind::FBM, 0.3, 1, 0.5}};
  Outcome out;
  int ok = 0;
  for (const auto& c : cells) {
    ScalingOptions o;
    o.n_reps = 200;
    const auto t0 = std::chrono::steady_clock::now();
    const ScalingFit f = sup_L_scaling(path_source(make_spec(c.kind, c.H, c.d, std::size_t(1) << 17, 11)), c.alpha, o);
    const double sec = seconds_since(t0);
    const bool pass = f.slope_within(0.1) && f.ci_covers_expected() && sec <= 600.0;
    ok += pass;
    std::printf("    %s H=%.2f d=%d alpha=%.2f: slope %.4f CI [%.4f, %.4f] target %.4f | corrected %.4f | %.0f s %s\n",
                std::string(to_string(c.kind)).c_str(), c.H, c.d, c.alpha, f.slope, f.ci.first, f.ci.second, f.expected,
                f.slope_corrected, sec, pass ? "ok" : "FAIL");
    out.pass = out.pass && pass;
  }
  out.detail = fmt("%d/4 cells with slope within 0.1 and CI covering the target", ok);
  return out;
}

// 2. min over replications of the window oscillation, slope H
Outcome lower_oscillation_exponent() {
  Outcome out;
  int ok = 0;
  for (double H : {0.3, 0.5, 0.8})
    for (int d : {1, 2}) {
      const ProcessSpec spec =
          make_spec(H == 0.5 ? ProcessKind::BROWNIAN : ProcessKind::FBM, H, d, std::size_t(1) << 17, 21);
      // any admissible alpha: 0 when H d < 1, else just above d - 1/H
      const double alpha = H * d < 1.0 ? 0.0 : d - 1.0 / H + 0.25;
      ScalingOptions o;
      o.n_reps = 200;
      const auto t0 = std::chrono::steady_clock::now();
      const ScalingFit f = lower_oscillation(path_source(spec), alpha, o);
      const double sec = seconds_since(t0);
      std::vector<double> lr, lm;
      for (std::size_t j = 0; j < f.radii.size(); ++j) {
        if (!f.used[j]) continue;
        std::vector<double> col;
        for (const auto& rep : f.per_rep) col.push_back(rep[j]);
        lr.push_back(std::log(f.radii[j]));
        lm.push_back(std::log(median(col)));
      }
      const double nmin = f.normalized_min.value_or(0.0);
      const bool pass = f.slope_within(0.05) && nmin > 0.0 && sec <= 300.0;
      ok += pass;
      std::printf("    H=%.1f d=%d: min slope %.4f (target %.1f) normalized min %.4g | median slope %.4f | %.0f s %s\n", H,
                  d, f.slope, H, nmin, ols(lr, lm).slope, sec, pass ? "ok" : "FAIL");
      out.pass = out.pass && pass;
    }
  out.detail = fmt("%d/6 cells with slope within 0.05 and normalized min > 0", ok);
  return out;
}

// 3. (alpha / (d omega_d)) U^alpha against the histogram local time as alpha decreases
Outcome alpha_to_zero_recovery() {
  const SamplePath p = simulate(make_spec(ProcessKind::BROWNIAN, 0.5, 1, std::size_t(1) << 15, 21), 0);
  const auto occ = occupation_measure(p, 0, 1);
  const auto table = local_time_histogram(occ, default_bin_width(p));
  std::vector<double> meds;
  std::string trail;
  for (double alpha : default_order_grid()) {
    std::vector<double> rel;
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd x = p.point(300 + k * 1600).transpose();
      const double lt = table.density(x);
      rel.push_back(std::abs(rescaled_potential(occ, alpha, x, {false}).value - lt) / lt);
    }
    meds.push_back(median(rel));
    trail += fmt("%s%.3g", trail.empty() ? "" : " ", meds.back());
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < meds.size(); ++k) decreasing = decreasing && meds[k] <= meds[k - 1];
  return {meds.back() <= 0.15 && decreasing,
          fmt("median relative error %.4f at alpha=2^-9 (<= 0.15); medians over 2^-2..2^-9: %s (%s)", meds.back(),
              trail.c_str(), decreasing ? "decreasing" : "not decreasing")};
}

// 4. normalization of k_eps and the plugged value eps r^eps
Outcome kernel_identity_check() {
  std::mt19937_64 gen(20240611);
  std::uniform_real_distribution<double> leps(std::log(0.01), std::log(3.0)), ur(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double eps = std::exp(leps(gen)), r = ur(gen);
    const auto rep = kernel_identities(eps, r);
    // exact values: 1 and eps r^eps
    worst = std::max({worst, std::abs(rep.normalization - 1.0), std::abs(rep.specific - eps * std::pow(r, eps))});
  }
  return {worst < 1e-8, fmt("max absolute error %.3g over 20 random (eps, r) (< 1e-8)", worst)};
}

// 5. simplex Beta integral
Outcome simplex_check() {
  const auto two = simplex_beta_integral(2, 0.5);
  const auto three = simplex_beta_integral(3, 0.0);
  const double e2 = std::abs(two.quadrature - M_PI) / M_PI;
  const double e3 = std::abs(three.quadrature - 1.0 / 6.0) * 6.0;
  return {e2 < 1e-3 && e3 < 1e-3,
          fmt("n=2 a=1/2: %.8f vs pi, rel %.2g; n=3 a=0: %.8f vs 1/6, rel %.2g (< 1e-3)", two.quadrature, e2,
              three.quadrature, e3)};
}

// Strong error at T=1 of dY = Y dB^H against exp(B^H_1), steps 2^-8 .. 2^-11, from one fine driver.
std::vector<double> geometric_errors(double H, int reps) {
  ProcessSpec drv = make_spec(H == 0.5 ? ProcessKind::BROWNIAN : ProcessKind::FBM, H, 1, std::size_t(1) << 11, 41);
  ProcessSpec spec;
  spec.kind = ProcessKind::YOUNG_SDE;
  spec.hurst = H;
  SdeCoefficients sde;
  sde.x0 = Eigen::VectorXd::Constant(1, 1.0);
  sde.diffusion = [](const Eigen::VectorXd& x) { return Eigen::MatrixXd::Constant(1, 1, x(0)); };
  spec.sde = sde;
  std::vector<double> err(4, 0.0);
  for (int r = 0; r < reps; ++r) {
    const SamplePath full = simulate(drv, r);
    const double exact = std::exp(full.positions(full.size() - 1, 0));
    for (int lvl = 0; lvl < 4; ++lvl) {
      const Eigen::Index stride = Eigen::Index(1) << (3 - lvl);
      SamplePath coarse;
      coarse.times = full.times(Eigen::seq(0, Eigen::last, stride));
      coarse.positions = full.positions(Eigen::seq(0, Eigen::last, stride), Eigen::all);
      const SamplePath y = solve_young_sde(spec, coarse);
      err[lvl] += std::abs(y.positions(y.size() - 1, 0) - exact) / reps;
    }
  }
  return err;
}

double fitted_rate(const std::vector<double>& err) {
  std::vector<double> lh, le;
  for (std::size_t k = 0; k < err.size(); ++k) {
    lh.push_back(std::log(std::ldexp(1.0, -8 - int(k))));
    le.push_back(std::log(err[k]));
  }
  return ols(lh, le).slope;
}

// 6. Young SDE strong error
Outcome young_sde_check() {
  Outcome out;
  for (double H : {0.6, 0.75}) {
    const double rate = fitted_rate(geometric_errors(H, 100));
    out.pass = out.pass && rate >= 2 * H - 1;
    out.detail += fmt("H=%.2f rate %.3f (>= %.2f); ", H, rate, 2 * H - 1);
  }
  const auto err = geometric_errors(0.5, 100);
  bool decreasing = true;
  for (std::size_t k = 1; k < err.size(); ++k) decreasing = decreasing && err[k] < err[k - 1];
  const double rate = fitted_rate(err);
  out.pass = out.pass && decreasing && rate > 0.25;
  out.detail += fmt("midpoint H=0.5 errors %.3g -> %.3g, rate %.3f (%s)", err.front(), err.back(), rate,
                    decreasing ? "decreasing" : "not decreasing");
  return out;
}

// 7. assumption sweeps, moment bounds and local non-determinism
Outcome assumption_sweeps() {
  Outcome out;
  std::size_t configs = 0, violations = 0;
  for (const auto& model : {brownian_model(1), fbm_model(0.3, 1), fbm_model(0.75, 2)}) {
    SweepOptions o;
    o.trials = 10000;
    const BoundReport r = assumption_i_sweep(model, 3, o);
    configs += r.n_configs;
    violations += r.violations;
    out.pass = out.pass && r.passed();
    std::printf("    (i) %s H=%.2f d=%d: %zu configs, %zu violations, worst ratio %.4f, c0_hat %.4g\n",
                model.name.c_str(), model.hurst, model.dim, r.n_configs, r.violations, r.worst_ratio, r.constants.at("c0_hat"));
  }
  out.detail += fmt("(i): %zu violations in %zu configs; ", violations, configs);

  std::size_t moment_violations = 0;
  for (const auto& spec : {make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1024, 1), make_spec(ProcessKind::FBM, 0.3, 1, 1024, 1),
                           make_spec(ProcessKind::FBM, 0.75, 2, 1024, 1)}) {
    const BoundReport r = moment_bound_check(spec);
    moment_violations += r.violations;
    out.pass = out.pass && r.passed();
    std::printf("    (ii) exact %s H=%.2f d=%d: c1 %.4f, %zu violations\n", std::string(to_string(spec.kind)).c_str(),
                spec.hurst, spec.dim, r.constants.at("c1_hat"), r.violations);
  }
  {
    ProcessSpec ros = make_spec(ProcessKind::ROSENBLATT, 0.7, 1, 64, 3);
    ros.micro_steps = 64;
    MomentOptions mo;
    mo.p_grid = {1, 2, 3, 4, 6, 8};
    mo.iota = 1.0;
    mo.n_reps = 4000;
    const BoundReport r = moment_bound_check(ros, mo);
    moment_violations += r.violations;
    out.pass = out.pass && r.passed();
    std::printf("    (ii) Monte Carlo ROSENBLATT H=0.70: c1 %.4f, %zu violations\n", r.constants.at("c1_hat"),
                r.violations);
  }
  out.detail += fmt("(ii): %zu violations; ", moment_violations);

  double c_min = INFINITY;
  for (double H : {0.3, 0.7})
    for (int d : {1, 2})
      for (int m = 1; m <= 4; ++m) {
        SweepOptions o;
        o.trials = 2000;
        o.seed = 100 + m;
        const LndReport r = lnd_constant_estimate(fbm_model(H, d), m, o);
        c_min = std::min(c_min, r.c_hat);
        out.pass = out.pass && r.c_hat > 0.0;
      }
  out.detail += fmt("LND: min C_hat %.4g over H in {0.3, 0.7}, d in {1, 2}, m <= 4 (> 0)", c_min);
  return out;
}

// 8. log-averaged ball-mass ratio and the varying-order potential in d = 3
Outcome average_density_check() {
  const SamplePath p = simulate(make_spec(ProcessKind::BROWNIAN, 0.5, 3, std::size_t(1) << 16, 1), 0);
  const auto occ = occupation_measure(p, 0, 1);
  int cauchy = 0, cross = 0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd x = p.point((k + 1) * (p.size() - 1) / 11).transpose();
    const auto ad = average_density(occ, 2.0, x);
    if (ad.relative_last_difference() >= 0.1) continue;
    ++cauchy;
    const auto vo = potential_limit_varying_order(occ, 2.0, x);
    cross += vo.relative_difference && *vo.relative_difference < 0.15;
  }
  return {cauchy >= 8 && cross == cauchy,
          fmt("Cauchy at %d/10 points (>= 8); cross-estimator within 15%% at %d of those", cauchy, cross)};
}

// 9. Rosenblatt variance scaling and non-Gaussianity
Outcome rosenblatt_check() {
  Outcome out;
  for (double H : {0.6, 0.8}) {
    const ProcessSpec spec = make_spec(ProcessKind::ROSENBLATT, H, 1, 64, 17);
    std::vector<double> z1, lt, lv;
    std::vector<std::vector<double>> at(6);
    for (int r = 0; r < 4000; ++r) {
      const SamplePath p = simulate(spec, r);
      z1.push_back(p.positions(64, 0));
      for (int k = 0; k < 6; ++k) at[k].push_back(p.positions(1 << k, 0));
    }
    for (int k = 0; k < 6; ++k) {
      double m2 = 0.0;
      for (double v : at[k]) m2 += v * v;
      lt.push_back(std::log(std::ldexp(1.0, k - 6)));
      lv.push_back(std::log(m2 / at[k].size()));
    }
    const double slope = ols(lt, lv).slope;
    const double kurt = testsupport::excess_kurtosis(z1);
    // bootstrap standard error of the sample excess kurtosis
    std::mt19937_64 gen(99);
    std::uniform_int_distribution<std::size_t> pick(0, z1.size() - 1);
    std::vector<double> boot, resample(z1.size());
    for (int b = 0; b < 500; ++b) {
      for (auto& v : resample) v = z1[pick(gen)];
      boot.push_back(testsupport::excess_kurtosis(resample));
    }
    const double se = std::sqrt(testsupport::variance(boot));
    const bool pass = std::abs(slope - 2 * H) <= 0.1 && kurt > 3 * se;
    out.pass = out.pass && pass;
    out.detail += fmt("%sH=%.1f slope %.3f (2H=%.1f), kurtosis %.3f (3 se %.3f)", out.detail.empty() ? "" : "; ", H,
                      slope, 2 * H, kurt, 3 * se);
  }
  return out;
}

// 10. identical outputs across worker counts and on replay
Outcome reproducibility_check() {
  const fs::path root = fs::temp_directory_path() / "occuriesz_acceptance";
  fs::remove_all(root);
  const char* configs[] = {
      R"({"operation": "simulate", "process": {"kind": "FBM", "hurst": 0.3, "dim": 2, "n_steps": 512}, "replications": 4, "seed": 7})",
      R"({"operation": "potential", "process": {"kind": "BROWNIAN", "dim": 1, "n_steps": 2048}, "parameters": {"alpha": 0.5, "times": [0.25, 0.5, 0.75]}, "replications": 6, "seed": 8})",
      R"({"operation": "sup_L_scaling", "process": {"kind": "BROWNIAN", "dim": 1, "n_steps": 4096}, "parameters": {"alpha": 0.3, "radii": [0.0625, 0.03125, 0.015625], "bootstrap": 200}, "replications": 16, "seed": 9})",
      R"({"operation": "lower_oscillation", "process": {"kind": "FBM", "hurst": 0.8, "dim": 2, "n_steps": 4096}, "parameters": {"alpha": 1.0, "radii": [0.0625, 0.03125, 0.015625]}, "replications": 16, "seed": 10})",
      R"({"operation": "alpha_to_zero", "process": {"kind": "BROWNIAN", "dim": 1, "n_steps": 2048}, "parameters": {"alpha_grid": [0.25, 0.125, 0.0625]}, "replications": 3, "seed": 11})",
      R"({"operation": "assumption_i_sweep", "process": {"kind": "FBM", "hurst": 0.75, "dim": 1}, "parameters": {"trials": 500, "n_max": 2}, "seed": 12})",
  };
  int ok = 0, n = 0;
  std::string failures;
  for (const char* text : configs) {
    ++n;
    ExperimentConfig c = parse_config(text, true);
    c.output = root / (c.operation + "_w1");
    c.workers = 1;
    const ExperimentManifest m1 = run(c);
    c.output = root / (c.operation + "_w8");
    c.workers = 8;
    const ExperimentManifest m8 = run(c);
    bool same = m1.files.size() == m8.files.size() && !m1.files.empty();
    for (std::size_t i = 0; same && i < m1.files.size(); ++i)
      same = m1.files[i].path == m8.files[i].path && m1.files[i].sha256 == m8.files[i].sha256;
    try {
      ReplayOptions ro;
      ro.workers = 8;
      replay(root / (c.operation + "_w1") / kManifestName, ro);
      ro.workers = 1;
      replay(root / (c.operation + "_w8") / kManifestName, ro);
    } catch (const ReproducibilityError& e) {
      same = false;
    }
    if (same) ++ok;
    else failures += " " + c.operation;
  }
  fs::remove_all(root);
  return {ok == n, fmt("%d/%d manifests byte-identical across workers {1, 8} and on replay%s", ok, n,
                       failures.empty() ? "" : (" (differs:" + failures + ")").c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {{"sup-potential exponent", sup_potential_exponent},
                                {"lower oscillation exponent", lower_oscillation_exponent},
                                {"alpha -> 0 recovery", alpha_to_zero_recovery},
                                {"kernel identities", kernel_identity_check},
                                {"simplex Beta integral", simplex_check},
                                {"Young SDE convergence", young_sde_check},
                                {"assumption sweeps", assumption_sweeps},
                                {"average-density stabilization", average_density_check},
                                {"Rosenblatt law", rosenblatt_check},
                                {"reproducibility", reproducibility_check}};
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (int i = 0; i < 10; ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
