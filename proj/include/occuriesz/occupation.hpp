#pragma once

#include "occuriesz/core.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace occuriesz {

// Occupation measure of a path over [s, t]. The window is copied out of the source path
// with linearly interpolated endpoints, so the measure owns its data.
struct OccupationMeasure {
  double s = 0.0, t = 0.0;
  Eigen::Index first_source_index = 0;  // source index of the first grid point inside (s, t)
  Eigen::VectorXd times;                // window sample times, from s to t
  Eigen::MatrixXd positions;            // window positions, one row per time
  Eigen::VectorXd weights;              // trapezoid weights, sum t - s
  Eigen::VectorXd local_scale;          // empirical Hoelder constant per sample
  double hurst = 0.5;                   // exponent used by the singular-cell model

  Eigen::Index size() const { return times.size(); }
  Eigen::Index dim() const { return positions.cols(); }
  double mass() const { return t - s; }
};

OccupationMeasure occupation_measure(const SamplePath& path, double s, double t);

// Every other sample of the window (even or odd interior indices), endpoints kept;
// used for resolution-halving error estimates.
OccupationMeasure coarsen(const OccupationMeasure& occ, int parity = 0);

// Mass of the closed box [lo, hi] under the piecewise-linear interpolant of the window.
double box_mass(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& lo,
                const Eigen::Ref<const Eigen::VectorXd>& hi);

struct PotentialEstimate {
  double value = 0.0;
  double alpha = 0.0;
  Eigen::VectorXd x;
  double s = 0.0, t = 0.0;
  double err_bound = 0.0;
  bool singular_corrected = false;
  bool divergent = false;  // H (d - alpha) >= 1: the integral may be infinite
  bool infinite() const { return !std::isfinite(value); }
};

class SmearTable;

// Half-cell widths around each window sample (zero outside the window).
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> half_cells(const OccupationMeasure& occ);

// eta per sample: sigma * step^H / 10. Cells closer than this to x use the centered local model.
Eigen::ArrayXd singular_radius(const OccupationMeasure& occ);

struct PotentialOptions {
  bool estimate_error = true;
};

// Evaluates U^alpha of one occupation measure at many points. In d = 1 the integral over the
// piecewise-linear interpolant is done in closed form. In d >= 2 samples act as atoms, except
// near x: cells within eta = sigma * step^H / 10 use the centered local model
// sigma^p E||N||^p int |v|^{Hp} dv, and cells within 2 sigma step^H use the same Gaussian
// model around the sample instead of the atom.
class PotentialEvaluator {
 public:
  PotentialEvaluator(const OccupationMeasure& occ, double alpha);

  struct Detail {
    double value = 0.0;
    double correction = 0.0;  // part contributed by modeled cells
    double near_field = 0.0;  // part from cells within a few local Hoelder scales of x
    double spread = 0.0;      // std of the error from unresolved motion between samples
  };

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const { return evaluate(x, false).value; }
  Detail evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, bool detail = true) const;

  double alpha() const { return alpha_; }
  bool divergent() const { return divergent_; }

 private:
  Detail eval_line(const Eigen::Ref<const Eigen::VectorXd>& x, bool detail) const;
  Detail eval_atoms(const Eigen::Ref<const Eigen::VectorXd>& x, bool detail) const;

  const OccupationMeasure* occ_;
  double alpha_;
  bool divergent_;
  Eigen::ArrayXd reach_;   // near-field radius per sample
  Eigen::ArrayXd wiggle_;  // weight * sigma * step^H / sqrt(12): bridge spread per sample
  // d = 1; near-field segments use the fBm bridge between their endpoints, tabulated on unit
  // time: node u, bridge mean weight, bridge std, quadrature weight
  Eigen::ArrayXd dtau_, dx_, slope_inv_;
  Eigen::ArrayXd bridge_w_, bridge_sd_, bridge_q_, bridge_scale_;
  // d >= 2
  Eigen::ArrayXd left_, right_, eta2_, model_factor_, sigma_;
  std::shared_ptr<const SmearTable> smear_;
};

PotentialEstimate riesz_potential(const OccupationMeasure& occ, double alpha,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const PotentialOptions& options = {});

// L^{alpha,X} = alpha / (d omega_d) * U^alpha.
PotentialEstimate rescaled_potential(const OccupationMeasure& occ, double alpha,
                                     const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const PotentialOptions& options = {});

double rescaling_constant(double alpha, int d);

// E ||N||^p for a standard Gaussian vector in R^d, p > -d.
double gaussian_norm_moment(int d, double p);

struct LocalTimeTable {
  double bin_width = 0.0;
  Eigen::VectorXd origin;
  std::map<std::vector<std::int64_t>, double> mass;  // box index -> occupation mass
  bool meaningful = true;                            // false when H d >= 1

  double density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double total_mass() const;
  double box_volume() const;
  Eigen::VectorXd box_center(const std::vector<std::int64_t>& index) const;
  // Highest density box and its center.
  std::pair<double, Eigen::VectorXd> max_density() const;
};

// Box masses divided by box volume. In d = 1 mass is spread along the interpolant; in
// d >= 2 each sample deposits its weight. Boxes are [origin + k w, origin + (k+1) w).
LocalTimeTable local_time_histogram(const OccupationMeasure& occ, double bin_width,
                                    std::optional<Eigen::VectorXd> origin = std::nullopt);

double default_bin_width(const SamplePath& path);

struct SupOptions {
  std::size_t max_sites = 4096;
  std::size_t stride = 0;  // 0: smallest stride keeping sites <= max_sites
  std::vector<Eigen::VectorXd> extra_points;
};

struct SupPotential {
  double value = 0.0;  // max of L^{alpha,X} over the evaluation sites
  Eigen::VectorXd argmax;
  double argmax_time = 0.0;
  double principle_factor = 1.0;  // 2^{d - alpha}: bound on the sup over all of R^d
  std::size_t sites = 0;
  bool divergent = false;
};

SupPotential sup_potential_over_space(const OccupationMeasure& occ, double alpha, const SupOptions& options = {});

struct AdmissibleParams {
  double H = 0.5;
  int d = 1;
  double alpha = 0.0;
  std::optional<double> beta_incr;
};

struct Admissibility {
  bool accepted = false;
  std::optional<AdmissibleParams> params;
  std::string condition;  // identifier of the violated condition, empty when accepted
  std::string reason;
  double max_beta_incr = 0.0;  // supremum of admissible beta_incr for this (H, d, alpha)
};

inline constexpr const char* kAlphaRangeCondition =
    "alpha-range: max(0, d - 1/H) < alpha < d, with alpha = 0 allowed only when H d < 1";
inline constexpr const char* kIncrementCondition =
    "increment-exponent: beta_incr - alpha < min(1, (1 - H d)/(2H), (1 - H d)/H)";

Admissibility check_admissible(double H, int d, double alpha, std::optional<double> beta_incr = std::nullopt);

void write_potential_csv(const std::filesystem::path& file, const std::vector<PotentialEstimate>& values);

}  // namespace occuriesz
