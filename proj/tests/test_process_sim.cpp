#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "occuriesz/process_sim.hpp"
#include "support/stats.hpp"

#include <cmath>

using namespace occuriesz;
using namespace testsupport;

namespace {

ProcessSpec fbm_spec(double H, int d, std::size_t n, std::uint64_t seed = 7) {
  ProcessSpec s;
  s.kind = ProcessKind::FBM;
  s.hurst = H;
  s.dim = d;
  s.n_steps = n;
  s.seed = seed;
  return s;
}

// Values of coordinate `coord` at grid indices over many replications.
std::vector<std::vector<double>> collect(const ProcessSpec& spec, int reps, std::vector<Eigen::Index> idx,
                                         int coord = 0) {
  std::vector<std::vector<double>> out(idx.size());
  for (int r = 0; r < reps; ++r) {
    const SamplePath p = simulate(spec, std::uint64_t(r));
    for (std::size_t k = 0; k < idx.size(); ++k) out[k].push_back(p.positions(idx[k], coord));
  }
  return out;
}

}  // namespace

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
  CHECK(unit_ball_volume(4) == doctest::Approx(M_PI * M_PI / 2.0));
}

TEST_CASE("test helpers: F tail and KS p-value") {
  CHECK(f_upper_tail(2.5, 3, 20) == doctest::Approx(0.0888437519376892).epsilon(1e-8));
  CHECK(f_upper_tail(0.7, 9, 90) == doctest::Approx(0.7072649687415828).epsilon(1e-8));
  std::vector<double> a, b;
  for (int i = 0; i < 500; ++i) {
    a.push_back(i / 500.0);
    b.push_back(i / 500.0 + 0.5);
  }
  CHECK(ks_two_sample_p(a, b) < 1e-6);
  CHECK(ks_two_sample_p(a, a) > 0.99);
}

TEST_CASE("Brownian special case of fBm: Cov(B_s, B_t) = min(s, t)") {
  const auto spec = fbm_spec(0.5, 1, 64);
  auto v = collect(spec, 10000, {16, 48});
  const double s = 0.25, t = 0.75;
  CHECK(std::abs(covariance(v[0], v[1]) - std::min(s, t)) < 3 * covariance_se(v[0], v[1]));
}

TEST_CASE("fBm H=0.7 increment variance over lag 0.5") {
  const auto spec = fbm_spec(0.7, 1, 64, 11);
  auto v = collect(spec, 10000, {8, 40});
  std::vector<double> incr(v[0].size());
  for (std::size_t i = 0; i < incr.size(); ++i) incr[i] = v[1][i] - v[0][i];
  const double target = std::pow(0.5, 1.4);
  const double var = variance(incr);
  // standard error of a Gaussian sample variance
  CHECK(std::abs(var - target) < 3 * target * std::sqrt(2.0 / (incr.size() - 1)));
}

TEST_CASE("fBm grid covariances match R(s,t) on 20 random pairs") {
  for (auto method : {FgnMethod::Circulant, FgnMethod::Cholesky}) {
    const auto spec = fbm_spec(0.3, 1, 32, 21);
    FbmOptions opt;
    opt.method = method;
    const int reps = 10000;
    Eigen::MatrixXd vals(reps, 33);
    for (int r = 0; r < reps; ++r) vals.row(r) = simulate_fbm(spec, derive_seed(spec.seed, r), opt).positions.col(0).transpose();
    CounterRng pick(5);
    int failures = 0;
    for (int k = 0; k < 20; ++k) {
      const auto i = Eigen::Index(1 + pick() % 32), j = Eigen::Index(1 + pick() % 32);
      std::vector<double> a(vals.col(i).data(), vals.col(i).data() + reps);
      std::vector<double> b(vals.col(j).data(), vals.col(j).data() + reps);
      const double target = fbm_covariance(0.3, i / 32.0, j / 32.0);
      if (std::abs(covariance(a, b) - target) > 3 * covariance_se(a, b)) ++failures;
    }
    CHECK(failures == 0);
  }
}

TEST_CASE("fBm coordinates are independent") {
  const auto spec = fbm_spec(0.6, 3, 16, 3);
  std::vector<double> x0, x1, x2;
  for (int r = 0; r < 10000; ++r) {
    const SamplePath p = simulate(spec, r);
    x0.push_back(p.positions(16, 0));
    x1.push_back(p.positions(16, 1));
    x2.push_back(p.positions(16, 2));
  }
  CHECK(std::abs(covariance(x0, x1)) < 3 * covariance_se(x0, x1));
  CHECK(std::abs(covariance(x1, x2)) < 3 * covariance_se(x1, x2));
  CHECK(std::abs(covariance(x0, x2)) < 3 * covariance_se(x0, x2));
}

TEST_CASE("fBm errors and determinism") {
  CHECK_THROWS_AS(simulate(fbm_spec(0.5, 1, 1000)), ResolutionError);
  CounterRng rng(1);
  FbmOptions chol;
  chol.method = FgnMethod::Cholesky;
  chol.cholesky_max_steps = 64;
  CHECK_THROWS_AS(sample_fgn(128, 0.4, rng, chol), CapacityError);
  const auto spec = fbm_spec(0.35, 2, 1024, 99);
  const SamplePath a = simulate(spec, 4), b = simulate(spec, 4), c = simulate(spec, 5);
  CHECK(a.positions == b.positions);
  CHECK(a.positions != c.positions);
  CHECK(a.positions.row(0).isZero(0.0));
  CHECK(a.times(0) == 0.0);
  CHECK(a.times(1024) == 1.0);
}

TEST_CASE("fBm and stable increments are stationary") {
  for (auto kind : {ProcessKind::FBM, ProcessKind::STABLE_SYM}) {
    ProcessSpec spec = fbm_spec(0.7, 1, 64, 8);
    spec.kind = kind;
    spec.beta_stable = 1.5;
    auto v = collect(spec, 4000, {0, 4, 20, 24, 56, 60});
    std::vector<std::vector<double>> incr(3);
    for (int k = 0; k < 3; ++k)
      for (std::size_t r = 0; r < v[0].size(); ++r) incr[k].push_back(v[2 * k + 1][r] - v[2 * k][r]);
    // split replications so the compared samples are independent
    auto half = [](const std::vector<double>& x, int part) {
      const auto h = x.size() / 2;
      return part ? std::vector<double>(x.begin() + h, x.end()) : std::vector<double>(x.begin(), x.begin() + h);
    };
    CHECK(ks_two_sample_p(half(incr[0], 0), half(incr[1], 1)) > 0.01);
    CHECK(ks_two_sample_p(half(incr[1], 0), half(incr[2], 1)) > 0.01);
    CHECK(ks_two_sample_p(half(incr[2], 0), half(incr[0], 1)) > 0.01);
  }
}

TEST_CASE("Hermite-2 partial sum variance matches the double sum") {
  const double h = 0.8;
  const std::size_t N = 50;
  double brute = 0.0;
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = 0; k < N; ++k) {
      const double r = fgn_autocovariance<double>(h, double(j) - double(k));
      brute += 2.0 * r * r;
    }
  CHECK(hermite2_partial_sum_variance(h, N) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("Rosenblatt variance law, non-Gaussianity and independent coordinates") {
  ProcessSpec spec;
  spec.kind = ProcessKind::ROSENBLATT;
  spec.hurst = 0.8;
  spec.n_steps = 64;
  spec.dim = 2;
  spec.seed = 17;
  std::vector<double> z1, z2, lt, lv;
  std::vector<std::vector<double>> at(6);
  for (int r = 0; r < 2000; ++r) {
    const SamplePath p = simulate(spec, r);
    z1.push_back(p.positions(64, 0));
    z2.push_back(p.positions(64, 1));
    for (int k = 0; k < 6; ++k) at[k].push_back(p.positions(1 << k, 0));
  }
  for (int k = 0; k < 6; ++k) {
    lt.push_back(std::log(std::ldexp(1.0, k - 6)));
    double m2 = 0.0;
    for (double v : at[k]) m2 += v * v;
    lv.push_back(std::log(m2 / at[k].size()));
  }
  CHECK(std::abs(ols(lt, lv).slope - 1.6) < 0.1);
  CHECK(std::abs(variance(z1) - 1.0) < 0.2);
  CHECK(excess_kurtosis(z1) > 0.5);
  CHECK(std::abs(covariance(z1, z2)) < 3 * covariance_se(z1, z2));

  spec.hurst = 0.5;
  CHECK_THROWS_AS(simulate(spec), ParameterError);
  spec.hurst = 0.3;
  CHECK_THROWS_AS(simulate_rosenblatt(spec, 1), ParameterError);
}

TEST_CASE("stable increments: Gaussian endpoint, tail index, self-similarity") {
  ProcessSpec spec;
  spec.kind = ProcessKind::STABLE_SYM;
  spec.beta_stable = 2.0;
  spec.n_steps = 16;
  spec.seed = 5;
  std::vector<double> x1;
  for (int r = 0; r < 10000; ++r) x1.push_back(simulate(spec, r).positions(16, 0));
  CHECK(std::abs(variance(x1) - 2.0) < 3 * 2.0 * std::sqrt(2.0 / 9999));

  spec.beta_stable = 1.5;
  spec.n_steps = 1 << 20;
  const SamplePath p = simulate(spec, 0);
  std::vector<double> incr(spec.n_steps);
  const double scale = std::pow(1.0 / spec.n_steps, 1.0 / 1.5);
  for (std::size_t k = 0; k < spec.n_steps; ++k) incr[k] = std::abs(p.positions(k + 1, 0) - p.positions(k, 0)) / scale;
  std::vector<double> ll, lp;
  for (double lam = 5.0; lam <= 50.0 * 1.0001; lam *= std::pow(10.0, 0.125)) {
    const double frac = double(std::count_if(incr.begin(), incr.end(), [&](double v) { return v > lam; })) / incr.size();
    ll.push_back(std::log(lam));
    lp.push_back(std::log(frac));
  }
  CHECK(std::abs(ols(ll, lp).slope + 1.5) < 0.1);

  spec.beta_stable = 1.2;
  spec.n_steps = 16;
  std::vector<double> a, b;
  const double c = 4.0;
  for (int r = 0; r < 4000; ++r) {
    a.push_back(simulate(spec, r).positions(16, 0) / std::pow(c, 1.0 / 1.2));
    b.push_back(simulate(spec, 100000 + r).positions(4, 0));
  }
  CHECK(ks_two_sample_p(a, b) > 0.01);
}

TEST_CASE("Young SDE degenerates to the driver") {
  ProcessSpec spec;
  spec.kind = ProcessKind::YOUNG_SDE;
  spec.hurst = 0.7;
  spec.dim = 2;
  spec.n_steps = 256;
  SdeCoefficients sde;
  sde.x0 = Eigen::Vector2d(1.0, -2.0);
  sde.diffusion = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(2, 2); };
  sde.ellipticity = 1.0;
  spec.sde = sde;
  ProcessSpec drv = fbm_spec(0.7, 2, 256);
  const SamplePath driver = simulate(drv, 0);
  const SamplePath x = solve_young_sde(spec, driver);
  const Eigen::MatrixXd expect = driver.positions.rowwise() + sde.x0.transpose();
  CHECK((x.positions - expect).cwiseAbs().maxCoeff() < 1e-13);

  spec.hurst = 0.5;
  const SamplePath xm = solve_young_sde(spec, simulate(fbm_spec(0.5, 2, 256), 0));
  CHECK(xm.positions.allFinite());

  spec.hurst = 0.4;
  CHECK_THROWS_AS(solve_young_sde(spec, driver), UnsupportedRegimeError);
  spec.hurst = 0.7;
  spec.sde->ellipticity = 2.0;
  CHECK_THROWS_AS(solve_young_sde(spec, driver), ParameterError);
}

namespace {

// Mean absolute terminal error of the geometric equation dX = X dB against x0 exp(B_1),
// at step sizes 2^-8 .. 2^-11 obtained by subsampling one fine driver.
std::vector<double> geometric_errors(double H, int reps) {
  const int fine = 11;
  ProcessSpec drv = fbm_spec(H, 1, std::size_t(1) << fine, 41);
  if (H == 0.5) drv.kind = ProcessKind::BROWNIAN;
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
      const Eigen::Index m = (full.size() - 1) / stride + 1;
      coarse.times = full.times(Eigen::seq(0, Eigen::last, stride));
      coarse.positions = full.positions(Eigen::seq(0, Eigen::last, stride), Eigen::all);
      REQUIRE(coarse.size() == m);
      const SamplePath x = solve_young_sde(spec, coarse);
      err[lvl] += std::abs(x.positions(m - 1, 0) - exact) / reps;
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

}  // namespace

TEST_CASE("Young SDE geometric equation converges at rate >= 2H-1") {
  for (double H : {0.6, 0.75}) {
    const auto err = geometric_errors(H, 100);
    CAPTURE(H);
    CHECK(fitted_rate(err) >= 2 * H - 1);
  }
}

TEST_CASE("midpoint scheme converges to the Stratonovich exponential") {
  const auto err = geometric_errors(0.5, 100);
  for (std::size_t k = 1; k < err.size(); ++k) CHECK(err[k] < err[k - 1]);
  CHECK(fitted_rate(err) > 0.25);
}
