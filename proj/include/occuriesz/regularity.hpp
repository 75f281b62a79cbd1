#pragma once

#include "occuriesz/occupation.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace occuriesz {

// Exponents attached to a process class. theta enters the log corrections of the sup and
// oscillation laws, iota the moment growth and the upper modulus.
struct ProcessTraits {
  double hurst = 0.5;
  int dim = 1;
  double theta = 0.0;
  double iota = 0.5;
  bool corrections_testable = true;  // false for the SDE class, whose theta is huge
};

// Gaussian and stable: theta 0, iota 1/2. Rosenblatt: theta 0, iota 1. SDE: theta (8d + 1) / H, iota 1/2.
ProcessTraits process_traits(const ProcessSpec& spec);

// Replication r -> sample path. Stubs (constant paths, injected flats) plug in here.
struct PathSource {
  std::function<SamplePath(std::uint64_t)> draw;
  ProcessTraits traits;
  std::string label;
};

PathSource path_source(const ProcessSpec& spec);

enum class Aggregate { Max, Min, Median };
std::string_view to_string(Aggregate a);

// {2^-6, ..., 2^-16}
std::vector<double> default_radii();

struct ScalingOptions {
  std::size_t n_reps = 50;
  std::optional<double> t_center;  // default: half the horizon
  std::vector<double> radii = default_radii();
  std::size_t min_window_samples = 32;
  std::optional<Aggregate> aggregate;  // default depends on the statistic
  int bootstrap = 1000;
  std::uint64_t bootstrap_seed = 0x5eed;
  int workers = 0;
  std::size_t max_sites = 1024;  // spatial sup sites per window
  // when set, sup_L takes the max over these points only (stubs whose potential is infinite on the path)
  std::vector<Eigen::VectorXd> fixed_sites;
};

struct ScalingFit {
  std::string statistic;
  std::string label;
  std::vector<double> radii;
  std::vector<std::size_t> window_samples;
  std::vector<bool> used;                       // radius enters the fit
  std::vector<std::vector<double>> per_rep;     // [rep][radius]
  std::vector<double> statistics;               // aggregated over replications
  Aggregate aggregate = Aggregate::Max;
  double expected = 0.0;
  // the slope of log statistic on log r; the aggregate over independent replications at a
  // fixed time is exactly self-similar, so this is the primary estimate
  double slope = 0.0, intercept = 0.0;
  std::pair<double, double> ci{0.0, 0.0};
  // slope after dividing out the log correction
  std::string correction_kind = "none";  // loglog, log or none
  double correction_exponent = 0.0;
  double slope_corrected = 0.0;
  std::pair<double, double> ci_corrected{0.0, 0.0};
  std::optional<double> normalized_min;  // lower oscillation: min over r of the normalized ratio
  std::optional<double> ratio_spread;    // modulus: upper decile / median of the ratio over r
  std::vector<double> normalized;        // per radius, aggregated
  std::vector<std::string> notes;

  bool slope_within(double tolerance) const { return std::abs(slope - expected) <= tolerance; }
  bool ci_covers_expected() const { return ci.first <= expected && expected <= ci.second; }
};

// sup_x L^{alpha,X}(x, [t - r, t + r]) per radius; alpha = 0 uses the histogram local time with
// bins of width max(dt^H, (2r)^H / 16). Expected slope 1 - H (d - alpha).
ScalingFit sup_L_scaling(const PathSource& source, double alpha, const ScalingOptions& options = {});

// max_{s in window} |X_t - X_s| per radius, aggregated by min. Expected slope H; the normalized
// ratio divides by r^H (loglog 1/r)^{-H (theta / (d - alpha) + 1)}.
ScalingFit lower_oscillation(const PathSource& source, double alpha_for_correction, const ScalingOptions& options = {});

// max over t of the window oscillation, per radius, aggregated by max; ratio to r^H (log 1/r)^iota.
ScalingFit modulus_of_continuity(const PathSource& source, const ScalingOptions& options = {});

// max_{|i - j| <= lag} |X_i - X_j| over sample indices; exact in d = 1, centers on a grid of
// stride max(1, lag / 32) for d >= 2.
double max_window_oscillation(const SamplePath& path, std::size_t lag);

struct HolderOptions {
  std::size_t n_reps = 20;
  std::vector<Eigen::VectorXd> x_grid;  // empty: the path at the t grid times, per replication
  std::vector<double> t_grid;           // window starts; empty: 32 evenly spaced times
  std::vector<double> h_grid;           // time increments; empty: 2^-4 ... 2^-10
  std::vector<double> delta_grid;       // space increments; empty: 2^-4 ... 2^-12
  int workers = 0;
};

struct HolderEstimate {
  double alpha = 0.0, beta_incr = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;               // fitted exponents
  double gamma1_target = 0.0, gamma2_target = 0.0;  // beta_incr and 1 - H (d - alpha)
  std::vector<double> delta_grid, spatial_max;
  std::vector<double> h_grid, temporal_max;
  bool spatial_ok() const { return gamma1 >= 0.9 * gamma1_target; }
  bool temporal_ok() const { return gamma2 >= 0.9 * gamma2_target; }
};

// Increment-ratio exponents of (x, t) -> L^{alpha,X}(x, [0, t]); alpha must be positive.
HolderEstimate potential_field_holder(const PathSource& source, double alpha, double beta_incr,
                                      const HolderOptions& options = {});

// Throws ValidationError naming the violated condition.
void require_admissible(double H, int d, double alpha, std::optional<double> beta_incr = std::nullopt);

}  // namespace occuriesz
