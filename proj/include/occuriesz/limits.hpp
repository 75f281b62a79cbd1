#pragma once

#include "occuriesz/occupation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace occuriesz {

struct DensityLimitReport {
  std::string kind;  // alpha_to_zero, average_density or varying_order
  Eigen::VectorXd x;
  double order = 0.0;  // s for average_density and varying_order
  std::vector<double> parameters;
  std::vector<double> values;
  double extrapolated = 0.0;
  double stability = 0.0;        // max |v_{i+1} - v_i| over the grid
  double last_difference = 0.0;  // |v_last - v_{last-1}|
  bool divergent = false;
  std::optional<double> comparison;  // s * D_a^s for varying_order
  std::optional<double> relative_difference;

  double relative_last_difference() const;
};

// {2^-2, ..., 2^-9}
std::vector<double> default_order_grid();
// {2^-4, ..., 2^-16}
std::vector<double> default_u_grid();

// Value at 0 of the polynomial through the last `points` (parameter, value) pairs.
double extrapolate_to_zero(const std::vector<double>& parameters, const std::vector<double>& values, int points = 3);

// (alpha / (d omega_d)) U^alpha(x) along a decreasing alpha grid; limit is the density times 1.
DensityLimitReport potential_limit_alpha_to_zero(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x,
                                                 std::vector<double> alpha_grid = default_order_grid());

// (1/|log u|) int_u^1 m_x(r) r^{-s-1} dr along a decreasing u grid, extrapolated linearly in 1/|log u|.
DensityLimitReport average_density(const OccupationMeasure& occ, double s, const Eigen::Ref<const Eigen::VectorXd>& x,
                                   std::vector<double> u_grid = default_u_grid());

// eps U^{d-s+eps}(x), compared against s * D_a^s(x).
DensityLimitReport potential_limit_varying_order(const OccupationMeasure& occ, double s,
                                                 const Eigen::Ref<const Eigen::VectorXd>& x,
                                                 std::vector<double> eps_grid = default_order_grid(),
                                                 std::vector<double> u_grid = default_u_grid());

// k_eps(u) = 1_{(0,1)}(u) eps^2 u^{eps-1} |log u|
double kernel_k_eps(double eps, double u);

struct KernelIdentityReport {
  double eps = 0.0, r = 0.0;
  double normalization = 0.0;  // quadrature of int_0^inf k_eps, exact value 1
  double specific = 0.0;       // quadrature of int_0^r k_eps(u) / |log u| du
  double specific_exact = 0.0;  // eps r^eps
  double normalization_error() const { return std::abs(normalization - 1.0); }
  double specific_error() const { return std::abs(specific - specific_exact); }
};

KernelIdentityReport kernel_identities(double eps, double r);

// Quadrature of int_{u0}^inf k_eps(u) du.
double kernel_tail_mass(double eps, double u0);

// m_x(r): occupation mass of the open ball B(x, r).
double ball_mass(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x, double r);

// int_u^1 m_x(r) r^{-s-1} dr
double ball_mass_integral(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x, double s, double u);

struct BallMassEnvelope {
  Eigen::VectorXd x;
  double order = 0.0;
  std::vector<double> radii;  // 2^-k, decreasing
  std::vector<double> masses;
  std::vector<double> ratios;  // m_x(r) / (r^s |log r|)
  double sup = 0.0;
  double trend = 0.0;  // OLS slope of log ratio against log(1/r)
  bool diverging = false;  // ratio grows by more than 10x toward small r
};

BallMassEnvelope ball_mass_envelope(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& x, double s,
                                    int k_min = 4, int k_max = 14);

}  // namespace occuriesz
