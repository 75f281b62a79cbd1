#pragma once

#include "occuriesz/occupation.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace occuriesz {

// Per-coordinate covariance R(s, t) of a centered Gaussian process with i.i.d. coordinates.
struct CovarianceModel {
  std::function<double(double, double)> kernel;
  int dim = 1;
  double hurst = 0.5;
  std::string name;
};

CovarianceModel fbm_model(double H, int d);
CovarianceModel brownian_model(int d);

// Cov(X_{t_j} - X_{t_{j-1}}, X_{t_k} - X_{t_{k-1}}) for the partition t_0 < ... < t_n (one
// coordinate). Throws ModelError when the smallest eigenvalue is below -1e-10 times the largest.
Eigen::MatrixXd increment_gram(const CovarianceModel& model, const std::vector<double>& partition);

// |E exp(i sum_j <xi_j, X_{t_j} - X_{t_{j-1}}>)| = exp(-1/2 sum_l xi_l^T G xi_l); xi is n x d.
double gaussian_charfun_exact(const CovarianceModel& model, const std::vector<double>& partition,
                              const Eigen::MatrixXd& xi);

struct CharfunSample {
  double modulus = 0.0, real = 0.0, imag = 0.0;
  double real_se = 0.0, imag_se = 0.0;
};

// Monte Carlo E exp(i ...) from simulated paths; partition times must lie on the simulation grid.
CharfunSample empirical_charfun(const ProcessSpec& spec, const std::vector<double>& partition, const Eigen::MatrixXd& xi,
                                std::size_t samples, int workers = 0);

struct BoundReport {
  std::string name;
  std::size_t n_configs = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double worst_ratio = 0.0;  // lhs / rhs at the witness
  // witnessing configuration
  std::vector<double> partition;
  Eigen::MatrixXd xi;
  std::vector<int> k;
  std::map<std::string, double> constants;  // c0, c1, C, ... estimates
  std::vector<std::string> notes;

  bool passed() const { return violations == 0 && worst_ratio <= 1.0 + 1e-12; }
};

// Random configuration law shared by the sweeps: xi coordinates log-uniform on [1e-2, 1e2] with
// random signs, partition = sorted uniforms on (0, T) after t_0 = 0.
struct SweepOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  double horizon = 1.0;
  int workers = 0;
};

// Assumption (i) with theta = 0 and k in {0, 4}^{n x d}. The reference c0 is
// max(1, 16 e^{-2} / C^2)^d from a local non-determinism constant C (lnd_constant when given,
// else estimated by lnd_constant_estimate on an independent seed). Reports the smallest workable c0.
BoundReport assumption_i_sweep(const CovarianceModel& model, int n_max, const SweepOptions& options = {},
                               std::optional<double> lnd_constant = std::nullopt);

struct LndReport {
  double c_hat = 0.0;          // min of lhs / (sum over coordinates and increments)
  double c_hat_product = 0.0;  // min of lhs / (product over coordinates of the per-coordinate sums)
  std::size_t trials = 0, skipped = 0;
  std::vector<double> witness_partition;
  Eigen::MatrixXd witness_xi;
};

// Local non-determinism ratio E|sum_k <xi_k, dX_k>|^2 / sum_l sum_k xi_{k,l}^2 E(dX_k^l)^2 over
// random configurations; m <= 6. Singular Gram matrices are skipped and counted.
LndReport lnd_constant_estimate(const CovarianceModel& model, int m, const SweepOptions& options = {});

struct MomentOptions {
  std::vector<double> p_grid{1, 2, 3, 4, 6, 8, 10, 12};
  std::vector<double> lags{0.125, 0.25, 0.5, 1.0};  // fractions of the horizon
  std::size_t n_reps = 4000;                         // Monte Carlo classes only
  std::optional<double> iota;                        // default: the class value
  double growth_factor = 2.0;
  int workers = 0;
};

// Normalized moments m(p, tau) = E^{1/p} ||X_tau - X_0||^p / (p^iota tau^H). Gaussian classes use
// the exact formula, others Monte Carlo. c1 = sup m; a violation is m(p) above growth_factor
// times max_{p <= 2} m at the same lag.
BoundReport moment_bound_check(const ProcessSpec& spec, const MomentOptions& options = {});

struct TailOptions {
  double interval_start = 0.0, interval_end = 1.0;
  std::vector<double> u_grid{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::size_t n_reps = 10000;
  Eigen::VectorXd x;  // default: origin
  std::optional<double> shift_time;  // evaluate at x + X_tau
  double beta_incr = 0.0;            // selects zeta
  int bootstrap = 400;
  std::uint64_t bootstrap_seed = 7;
  int workers = 0;
};

struct TailReport {
  std::vector<double> u_grid, thresholds, survival;
  double slope = 0.0;  // OLS slope of log survival on u
  std::pair<double, double> ci{0.0, 0.0};
  double zeta = 0.0;
  double normalizer = 0.0;
  std::size_t n_reps = 0;
  bool decays() const { return ci.second < 0.0; }
};

// Survival of L^{alpha,X}(x, I) / (|I|^{1 - H(d - alpha)} log(e + |I|)^{2 d zeta}) at u^{H(theta + d - alpha)}.
TailReport tail_bound_check(const ProcessSpec& spec, double alpha, const TailOptions& options = {});

// 1_{(0,1)}(s) s^{-gamma} + 1_{[1,inf)}(s) log(e + s)
double psi_gamma(double gamma, double s);

struct ElementaryTail {
  double q = 1.0, a = 0.0;
  double integral = 0.0;  // int_a^inf log(e + x)^{2q} x^{-4q} dx
  double bound = 0.0;     // log(e + a)^{2q} a^{1 - 4q} / (4q - 2)
  bool holds() const { return integral <= bound; }
};

// Tail integral against its l'Hospital bound; q >= 1, a > 0.
ElementaryTail elementary_tail(double q, double a);
// Smallest grid point from which the bound holds at every larger grid point; nullopt when it
// fails at the largest. The grid is sorted internally.
std::optional<double> elementary_threshold(double q, std::vector<double> a_grid);
// b(q, H) = int_{T^{-H}}^inf log(e + x)^{2q} x^{-4q} dx
double elementary_tail_constant(double q, double H, double horizon = 1.0);

struct SimplexIntegral {
  double closed_form = 0.0, quadrature = 0.0;
  double relative_error() const { return std::abs(quadrature - closed_form) / std::abs(closed_form); }
};

// int over u <= t_1 < ... < t_n <= u + length of prod (t_m - t_{m-1})^{-a}, t_0 = u.
// Quadrature by nested one-dimensional graded rules, n <= 4.
SimplexIntegral simplex_beta_integral(int n, double a, double length = 1.0);

struct MaximumPrincipleOptions {
  std::size_t trials = 100;
  double resolution = 1e-3;  // lattice spacing
  double margin = 0.25;      // lattice box = path bounding box grown by this
  std::size_t max_sites = 4096;
  int workers = 0;
};

// Lattice max of U^alpha against 2^{d - alpha} times the max over path sample points, per path.
// worst_ratio = max over trials of lattice max / (2^{d - alpha} path max).
BoundReport maximum_principle_check(const std::function<SamplePath(std::uint64_t)>& draw, double alpha,
                                    const MaximumPrincipleOptions& options = {});

}  // namespace occuriesz
