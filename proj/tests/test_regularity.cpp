#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "occuriesz/parallel.hpp"
#include "occuriesz/process_sim.hpp"
#include "occuriesz/regularity.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

using namespace occuriesz;

namespace {

ProcessSpec make_spec(ProcessKind kind, double H, int d, std::size_t n, std::uint64_t seed) {
  ProcessSpec spec;
  spec.kind = kind;
  spec.hurst = H;
  spec.dim = d;
  spec.n_steps = n;
  spec.seed = seed;
  return spec;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<double> radii(int k0, int k1) {
  std::vector<double> r;
  for (int k = k0; k <= k1; ++k) r.push_back(std::ldexp(1.0, -k));
  return r;
}

double brute_oscillation(const SamplePath& p, std::size_t lag) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    for (Eigen::Index j = i; j < p.size() && std::size_t(j - i) <= lag; ++j)
      best = std::max(best, (p.point(i) - p.point(j)).norm());
  return best;
}

}  // namespace

TEST_CASE("parallel_for") {
  std::vector<int> hit(1000, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 1000);
  CHECK_THROWS_WITH(parallel_for(50, 3,
                                 [](std::size_t i) {
                                   if (i % 7 == 3) throw std::runtime_error("index " + std::to_string(i));
                                 }),
                    "index 3");
  CHECK(resolve_workers(5) == 5);
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("process traits") {
  CHECK(process_traits(make_spec(ProcessKind::FBM, 0.7, 2, 64, 0)).theta == 0.0);
  CHECK(process_traits(make_spec(ProcessKind::FBM, 0.7, 2, 64, 0)).iota == 0.5);
  CHECK(process_traits(make_spec(ProcessKind::ROSENBLATT, 0.7, 1, 64, 0)).iota == 1.0);
  const auto sde = process_traits(make_spec(ProcessKind::YOUNG_SDE, 0.75, 2, 64, 0));
  CHECK(sde.theta == doctest::Approx(17.0 / 0.75));
  CHECK_FALSE(sde.corrections_testable);
  CHECK(process_traits(make_spec(ProcessKind::BROWNIAN, 0.3, 1, 64, 0)).hurst == 0.5);
}

TEST_CASE("window oscillation matches brute force") {
  for (int d : {1, 2}) {
    const SamplePath p = simulate(make_spec(ProcessKind::BROWNIAN, 0.5, d, 512, 4));
    for (std::size_t lag : {1, 5, 31, 64}) CHECK(max_window_oscillation(p, lag) == doctest::Approx(brute_oscillation(p, lag)));
  }
  const SamplePath line = linear_path(vec({0.0}), vec({2.0}), 1.0, 100);
  CHECK(max_window_oscillation(line, 10) == doctest::Approx(0.2));
}

TEST_CASE("sup_L scaling") {
  SUBCASE("inadmissible parameters name the condition") {
    const PathSource src = path_source(make_spec(ProcessKind::FBM, 0.6, 2, 1024, 1));
    try {
      sup_L_scaling(src, 0.0);
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      REQUIRE(e.violations().size() == 1);
      CHECK(e.violations()[0].find(kAlphaRangeCondition) != std::string::npos);
    }
  }
  SUBCASE("constant stub at a fixed offset grows linearly") {
    PathSource stub{[](std::uint64_t) { return constant_path(vec({0.0}), 1.0, 1 << 12); }, {0.5, 1, 0.0, 0.5, true},
                    "constant"};
    ScalingOptions opt;
    opt.n_reps = 2;
    opt.radii = radii(3, 8);
    opt.fixed_sites = {vec({0.25})};
    opt.bootstrap = 0;
    const ScalingFit fit = sup_L_scaling(stub, 0.5, opt);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-9));
    // (alpha / (d omega_d)) * 2r * |x - x0|^{alpha - d}
    CHECK(fit.statistics[0] == doctest::Approx(0.25 * 2 * 0.125 * std::pow(0.25, -0.5)).epsilon(1e-9));
  }
  SUBCASE("Brownian local time exponent") {
    ScalingOptions opt;
    opt.n_reps = 100;
    opt.radii = radii(5, 10);
    const ScalingFit fit = sup_L_scaling(path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1 << 15, 3)), 0.0, opt);
    CHECK(fit.expected == 0.5);
    CHECK(fit.slope_within(0.1));
    CHECK(fit.ci.first <= fit.slope);
    CHECK(fit.slope <= fit.ci.second);
    CHECK(fit.correction_kind == "loglog");
    CHECK(fit.correction_exponent == doctest::Approx(0.5));
  }
  SUBCASE("potential sup is monotone in the radius per path") {
    ScalingOptions opt;
    opt.n_reps = 6;
    opt.radii = radii(4, 10);
    opt.bootstrap = 0;
    opt.max_sites = 64;
    const ScalingFit fit = sup_L_scaling(path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1 << 14, 8)), 0.3, opt);
    for (const auto& row : fit.per_rep)
      for (std::size_t j = 0; j + 1 < row.size(); ++j) CHECK(row[j] >= row[j + 1]);
  }
  SUBCASE("worker count does not change results") {
    ScalingOptions opt;
    opt.n_reps = 8;
    opt.radii = radii(4, 8);
    opt.max_sites = 128;
    opt.workers = 1;
    const PathSource src = path_source(make_spec(ProcessKind::FBM, 0.3, 2, 1 << 12, 5));
    const ScalingFit a = sup_L_scaling(src, 0.8, opt);
    opt.workers = 4;
    const ScalingFit b = sup_L_scaling(src, 0.8, opt);
    CHECK(a.per_rep == b.per_rep);
    CHECK(a.ci == b.ci);
  }
  SUBCASE("two independent d=1 components give the d=2 exponent") {
    const ProcessSpec one = make_spec(ProcessKind::FBM, 0.3, 1, 1 << 14, 9);
    PathSource pair{[one](std::uint64_t rep) {
                      const SamplePath a = simulate(one, 2 * rep), b = simulate(one, 2 * rep + 1);
                      SamplePath out = a;
                      out.positions.conservativeResize(Eigen::NoChange, 2);
                      out.positions.col(1) = b.positions.col(0);
                      return out;
                    },
                    {0.3, 2, 0.0, 0.5, true}, "fbm pair"};
    ScalingOptions opt;
    opt.n_reps = 40;
    opt.radii = radii(4, 9);
    opt.max_sites = 256;
    const ScalingFit fit = sup_L_scaling(pair, 0.5, opt);
    CHECK(fit.expected == doctest::Approx(0.55));
    CHECK(fit.slope_within(0.1));
    CHECK(std::abs(fit.slope - 0.85) > 0.15);
  }
}

TEST_CASE("lower oscillation") {
  SUBCASE("Brownian exponent and positive normalized ratio") {
    ScalingOptions opt;
    opt.n_reps = 100;
    opt.radii = radii(6, 12);
    const PathSource src = path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1 << 16, 12));
    const ScalingFit fit = lower_oscillation(src, 0.0, opt);
    CHECK(fit.aggregate == Aggregate::Min);
    REQUIRE(fit.normalized_min.has_value());
    CHECK(*fit.normalized_min > 0.0);
    CHECK(fit.correction_exponent == doctest::Approx(-0.5));
    opt.aggregate = Aggregate::Median;
    CHECK(lower_oscillation(src, 0.0, opt).slope_within(0.05));
  }
  SUBCASE("fBm H=0.8") {
    ScalingOptions opt;
    opt.n_reps = 100;
    opt.radii = radii(6, 12);
    opt.aggregate = Aggregate::Median;
    CHECK(lower_oscillation(path_source(make_spec(ProcessKind::FBM, 0.8, 1, 1 << 16, 13)), 0.0, opt).slope_within(0.05));
  }
  SUBCASE("a flat piece around the center is detected") {
    const ProcessSpec spec = make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1 << 14, 14);
    PathSource flat{[spec](std::uint64_t rep) {
                      SamplePath p = simulate(spec, rep);
                      const double T = p.horizon();
                      for (Eigen::Index i = 0; i < p.size(); ++i)
                        if (std::abs(p.times(i) - 0.5 * T) < std::ldexp(1.0, -7))
                          p.positions.row(i) = p.positions.row(p.size() / 2);
                      return p;
                    },
                    {0.5, 1, 0.0, 0.5, true}, "flat"};
    ScalingOptions opt;
    opt.n_reps = 4;
    opt.radii = radii(5, 9);
    const ScalingFit fit = lower_oscillation(flat, 0.0, opt);
    CHECK(*fit.normalized_min == 0.0);
  }
}

TEST_CASE("modulus of continuity") {
  ScalingOptions opt;
  opt.n_reps = 20;
  opt.radii = radii(6, 12);
  SUBCASE("Brownian ratio stays bounded") {
    const ScalingFit fit = modulus_of_continuity(path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1 << 16, 15)), opt);
    CHECK(*fit.ratio_spread < 3.0);
    CHECK(fit.slope_within(0.1));
  }
  SUBCASE("fBm H=0.3 in d=2") {
    const ScalingFit fit = modulus_of_continuity(path_source(make_spec(ProcessKind::FBM, 0.3, 2, 1 << 15, 16)), opt);
    CHECK(*fit.ratio_spread < 3.0);
  }
  SUBCASE("a straight line drives the ratio to 0") {
    PathSource line{[](std::uint64_t) { return linear_path(vec({0.0}), vec({1.0}), 1.0, 1 << 14); }, {0.5, 1, 0.0, 0.5, true},
                    "line"};
    opt.n_reps = 1;
    const ScalingFit fit = modulus_of_continuity(line, opt);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.02));
    for (std::size_t j = 0; j + 1 < fit.normalized.size(); ++j) CHECK(fit.normalized[j + 1] < fit.normalized[j]);
  }
}

TEST_CASE("potential field Hoelder exponents") {
  SUBCASE("Brownian d=1, alpha=0.2") {
    HolderOptions opt;
    opt.n_reps = 6;
    const HolderEstimate est =
        potential_field_holder(path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 1 << 14, 17)), 0.2, 0.5, opt);
    CHECK(est.gamma2_target == doctest::Approx(0.6));
    CHECK(est.gamma2 >= 0.54);
    CHECK(est.gamma1 >= 0.45);
    CHECK(est.temporal_ok());
    CHECK(est.spatial_ok());
  }
  SUBCASE("constant path is linear in time off the point") {
    PathSource stub{[](std::uint64_t) { return constant_path(vec({0.0}), 1.0, 1 << 12); }, {0.5, 1, 0.0, 0.5, true},
                    "constant"};
    HolderOptions opt;
    opt.n_reps = 1;
    opt.x_grid = {vec({0.3}), vec({-0.7})};
    const HolderEstimate est = potential_field_holder(stub, 0.5, 0.5, opt);
    CHECK(est.gamma2 == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("inadmissible increment order") {
    CHECK_THROWS_AS(
        potential_field_holder(path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 256, 1)), 0.2, 0.75), ValidationError);
    CHECK_THROWS_AS(
        potential_field_holder(path_source(make_spec(ProcessKind::BROWNIAN, 0.5, 1, 256, 1)), 0.0, 0.2), ParameterError);
  }
}
