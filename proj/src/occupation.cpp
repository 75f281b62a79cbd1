#include "occuriesz/occupation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <tuple>

#include "occuriesz/quadrature.hpp"

namespace occuriesz {

namespace {

constexpr int kScaleHalfWindow = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Error model: kHalvingFactor * |U_h - U_2h| plus kNearFieldFactor times the contribution of
// cells within kNearFieldScales local Hoelder scales (sigma * step^H) of x, plus kSpreadFactor
// standard deviations of the first-order error from motion between samples.
constexpr double kHalvingFactor = 4.0;
constexpr double kNearFieldScales = 2.0;
constexpr double kNearFieldFactor = 2.0;
constexpr double kSpreadFactor = 3.0;
// d = 1: segments moving less than this many bridge scales get the bridge model near x
constexpr double kBridgeSlowFactor = 4.0;

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& tau) {
  const Eigen::Index m = tau.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const double h = 0.5 * (tau(k + 1) - tau(k));
    w(k) += h;
    w(k + 1) += h;
  }
  return w;
}

Eigen::RowVectorXd interpolate(const SamplePath& path, Eigen::Index k, double time) {
  // k: last grid index with times[k] <= time
  if (k + 1 >= path.size() || time == path.times(k)) return path.point(k);
  const double f = (time - path.times(k)) / (path.times(k + 1) - path.times(k));
  if (f >= 1.0) return path.point(k + 1);
  return path.point(k) + f * (path.point(k + 1) - path.point(k));
}

}  // namespace

// E ||lambda e_1 + N||^p and the cell integral K(rho) = int_0^1 w^{Hp} E||rho w^{-H} e_1 + N||^p dw
// for the local Gaussian model of a half cell: a cell of width a at offset mu contributes
// a^{1+Hp} sigma^p K(|mu| / (sigma a^H)).
class SmearTable {
 public:
  static constexpr double kLambdaMax = 12.0, kRhoMax = 8.0;
  static constexpr int kLambdaNodes = 4096, kRhoNodes = 512;

  SmearTable(int d, double p, double H) : d_(d), p_(p) {
    const double base = gaussian_norm_moment(d, p);
    const double a = 0.5 * (d + p), b = 0.5 * d;
    moment_.resize(kLambdaNodes + 1);
    for (int i = 0; i <= kLambdaNodes; ++i) {
      const double lam = kLambdaMax * i / kLambdaNodes, z = 0.5 * lam * lam;
      // Kummer: 1F1(-p/2; d/2; -z) = e^{-z} 1F1((d+p)/2; d/2; z)
      double term = 1.0, sum = 1.0;
      for (int k = 0; k < 2000 && term > 1e-17 * sum; ++k) {
        term *= (a + k) / (b + k) * z / (k + 1);
        sum += term;
      }
      moment_(i) = base * std::exp(std::log(sum) - z);
    }
    kernel_.resize(kRhoNodes + 1);
    for (int i = 0; i <= kRhoNodes; ++i) {
      const double rho = kRhoMax * i / kRhoNodes;
      kernel_(i) = integrate_graded([&](double w) { return std::pow(w, H * p) * moment(rho * std::pow(w, -H)); },
                                    0.0, 1.0, GradeToward::Left, 40, 0.5, 12);
    }
  }

  double moment(double lam) const {
    if (lam >= kLambdaMax) return std::pow(lam, p_) * (1.0 + p_ * (d_ + p_ - 2.0) / (2.0 * lam * lam));
    return lerp(moment_, lam / kLambdaMax * kLambdaNodes);
  }
  // Returns a negative value outside the table.
  double kernel(double rho) const { return rho >= kRhoMax ? -1.0 : lerp(kernel_, rho / kRhoMax * kRhoNodes); }

 private:
  static double lerp(const Eigen::VectorXd& v, double pos) {
    const auto i = std::min<Eigen::Index>(Eigen::Index(pos), v.size() - 2);
    const double f = pos - double(i);
    return (1.0 - f) * v(i) + f * v(i + 1);
  }
  int d_;
  double p_;
  Eigen::VectorXd moment_, kernel_;
};

static std::shared_ptr<const SmearTable> smear_table(int d, double p, double H) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, std::shared_ptr<const SmearTable>> cache;
  const auto key = std::make_tuple(d, p, H);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<const SmearTable>(d, p, H);
  std::lock_guard lock(mutex);
  if (cache.size() > 256) cache.clear();
  return cache.emplace(key, table).first->second;
}

OccupationMeasure occupation_measure(const SamplePath& path, double s, double t) {
  if (!(t > s)) throw ParameterError("occupation_measure: degenerate interval, need s < t");
  const double T = path.horizon();
  if (s < 0 || t > T * (1 + 1e-12)) throw ParameterError("occupation_measure: interval outside [0, T]");
  t = std::min(t, T);
  const double* tb = path.times.data();
  const double* te = tb + path.size();
  const auto i0 = Eigen::Index(std::upper_bound(tb, te, s) - tb);  // first time > s
  const auto i1 = Eigen::Index(std::lower_bound(tb, te, t) - tb) - 1;  // last time < t
  const Eigen::Index inner = std::max<Eigen::Index>(0, i1 - i0 + 1);
  const Eigen::Index m = inner + 2, d = path.dim();

  OccupationMeasure occ;
  occ.s = s;
  occ.t = t;
  occ.first_source_index = i0;
  occ.hurst = path.hurst_hint.value_or(0.5);
  occ.times.resize(m);
  occ.positions.resize(m, d);
  occ.times(0) = s;
  occ.positions.row(0) = interpolate(path, i0 - 1, s);
  if (inner > 0) {
    occ.times.segment(1, inner) = path.times.segment(i0, inner);
    occ.positions.middleRows(1, inner) = path.positions.middleRows(i0, inner);
  }
  occ.times(m - 1) = t;
  occ.positions.row(m - 1) = interpolate(path, i1, t);
  occ.weights = trapezoid_weights(occ.times);

  // sigma^2 = mean over nearby increments of |dX|^2 / (d dt^{2H})
  const Eigen::Index n = path.size() - 1;
  const Eigen::Index lo = std::max<Eigen::Index>(0, i0 - 1 - kScaleHalfWindow);
  const Eigen::Index hi = std::min<Eigen::Index>(n, i1 + 1 + kScaleHalfWindow);
  Eigen::VectorXd prefix = Eigen::VectorXd::Zero(hi - lo + 1);
  for (Eigen::Index k = lo; k < hi; ++k) {
    const double dt = path.times(k + 1) - path.times(k);
    const double q = (path.point(k + 1) - path.point(k)).squaredNorm() / (double(d) * std::pow(dt, 2 * occ.hurst));
    prefix(k - lo + 1) = prefix(k - lo) + q;
  }
  auto sigma_at = [&](Eigen::Index i) {
    const Eigen::Index a = std::max(lo, i - kScaleHalfWindow), b = std::min(hi, i + kScaleHalfWindow);
    return b > a ? std::sqrt((prefix(b - lo) - prefix(a - lo)) / double(b - a)) : 0.0;
  };
  occ.local_scale.resize(m);
  occ.local_scale(0) = sigma_at(std::max<Eigen::Index>(0, i0 - 1));
  for (Eigen::Index k = 0; k < inner; ++k) occ.local_scale(k + 1) = sigma_at(i0 + k);
  occ.local_scale(m - 1) = sigma_at(std::max<Eigen::Index>(0, i1));
  return occ;
}

OccupationMeasure coarsen(const OccupationMeasure& occ, int parity) {
  const Eigen::Index m = occ.size();
  std::vector<Eigen::Index> keep{0};
  for (Eigen::Index k = parity ? 1 : 2; k < m; k += 2) keep.push_back(k);
  if (keep.back() != m - 1) keep.push_back(m - 1);
  OccupationMeasure c = occ;
  c.times = occ.times(keep);
  c.positions = occ.positions(keep, Eigen::all);
  c.local_scale = occ.local_scale(keep);
  c.weights = trapezoid_weights(c.times);
  return c;
}

double box_mass(const OccupationMeasure& occ, const Eigen::Ref<const Eigen::VectorXd>& lo,
                const Eigen::Ref<const Eigen::VectorXd>& hi) {
  const Eigen::Index d = occ.dim();
  if (lo.size() != d || hi.size() != d) throw ParameterError("box_mass: box dimension mismatch");
  double mass = 0.0;
  for (Eigen::Index k = 0; k + 1 < occ.size(); ++k) {
    // Liang-Barsky clipping of the segment parameter to the box
    double u0 = 0.0, u1 = 1.0;
    for (Eigen::Index j = 0; j < d && u0 <= u1; ++j) {
      const double p = occ.positions(k, j), dp = occ.positions(k + 1, j) - p;
      if (dp == 0.0) {
        if (p < lo(j) || p > hi(j)) u1 = -1.0;
        continue;
      }
      double a = (lo(j) - p) / dp, b = (hi(j) - p) / dp;
      if (a > b) std::swap(a, b);
      u0 = std::max(u0, a);
      u1 = std::min(u1, b);
    }
    if (u1 > u0) mass += (occ.times(k + 1) - occ.times(k)) * (u1 - u0);
  }
  return mass;
}

double gaussian_norm_moment(int d, double p) {
  if (!(d + p > 0)) return kInf;
  return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (d + p)) - std::lgamma(0.5 * d));
}

double rescaling_constant(double alpha, int d) { return alpha / (double(d) * unit_ball_volume(d)); }

std::pair<Eigen::ArrayXd, Eigen::ArrayXd> half_cells(const OccupationMeasure& occ) {
  const Eigen::Index m = occ.size();
  const Eigen::ArrayXd dtau = (occ.times.tail(m - 1) - occ.times.head(m - 1)).array();
  Eigen::ArrayXd left = Eigen::ArrayXd::Zero(m), right = Eigen::ArrayXd::Zero(m);
  left.tail(m - 1) = 0.5 * dtau;
  right.head(m - 1) = 0.5 * dtau;
  return {left, right};
}

Eigen::ArrayXd singular_radius(const OccupationMeasure& occ) {
  const auto [left, right] = half_cells(occ);
  return occ.local_scale.array() * (2.0 * left.max(right)).pow(occ.hurst) / 10.0;
}

PotentialEvaluator::PotentialEvaluator(const OccupationMeasure& occ, double alpha) : occ_(&occ), alpha_(alpha) {
  const Eigen::Index d = occ.dim(), m = occ.size();
  if (!(alpha > 0 && alpha < double(d)))
    throw ParameterError("riesz_potential: alpha must lie in (0, d), got " + std::to_string(alpha));
  const double H = occ.hurst;
  divergent_ = H * (double(d) - alpha) >= 1.0;
  const Eigen::ArrayXd dtau = (occ.times.tail(m - 1) - occ.times.head(m - 1)).array();
  std::tie(left_, right_) = half_cells(occ);
  const Eigen::ArrayXd sigma = occ.local_scale.array();
  const Eigen::ArrayXd step = 2.0 * left_.max(right_);
  reach_ = kNearFieldScales * sigma * step.pow(H);
  wiggle_ = occ.weights.array() * sigma * step.pow(H) / std::sqrt(12.0);
  if (d == 1) {
    dtau_ = dtau;
    dx_ = (occ.positions.col(0).tail(m - 1) - occ.positions.col(0).head(m - 1)).array();
    slope_inv_ = (dx_ != 0.0).select(dtau_ / dx_, 0.0);
    const double p = alpha - 1.0;
    smear_ = smear_table(1, p, H);
    // bridge scale per segment: centered spread of dx / dtau^H over +-32 neighbouring segments,
    // zero for deterministic straight or constant pieces
    {
      const Eigen::Index ns = m - 1;
      Eigen::ArrayXd y = (dtau_ > 0).select(dx_ / dtau_.pow(H), 0.0);
      Eigen::ArrayXd c1(ns + 1), c2(ns + 1);
      c1(0) = c2(0) = 0.0;
      for (Eigen::Index k = 0; k < ns; ++k) {
        c1(k + 1) = c1(k) + y(k);
        c2(k + 1) = c2(k) + y(k) * y(k);
      }
      bridge_scale_.resize(ns);
      for (Eigen::Index k = 0; k < ns; ++k) {
        const Eigen::Index a = std::max<Eigen::Index>(0, k - 32), b = std::min(ns, k + 33);
        const double cnt = double(b - a), mean = (c1(b) - c1(a)) / cnt;
        const double var = std::max(0.0, (c2(b) - c2(a)) / cnt - mean * mean);
        bridge_scale_(k) = std::sqrt(var) * std::pow(dtau_(k), H);
      }
    }
    // halves of [0, 1] mapped by u = v^q toward their outer end; q = 1 / (1 + Hp) flattens u^{Hp}
    const QuadratureRule& gl = gauss_legendre(8);
    const double q = 1.0 / (1.0 + H * p);
    const Eigen::Index k8 = gl.nodes.size();
    bridge_w_.resize(2 * k8);
    bridge_sd_.resize(2 * k8);
    bridge_q_.resize(2 * k8);
    for (Eigen::Index i = 0; i < k8; ++i) {
      const double v = 0.5 * (gl.nodes(i) + 1.0);
      const double off = 0.5 * std::pow(v, q), jac = 0.5 * 0.5 * gl.weights(i) * q * std::pow(v, q - 1.0);
      for (int side = 0; side < 2; ++side) {
        const double u = side == 0 ? off : 1.0 - off;
        const double cov = 0.5 * (std::pow(u, 2 * H) + 1.0 - std::pow(1.0 - u, 2 * H));
        bridge_w_(2 * i + side) = cov;
        bridge_sd_(2 * i + side) = std::sqrt(std::max(0.0, std::pow(u, 2 * H) - cov * cov));
        bridge_q_(2 * i + side) = jac;
      }
    }
    return;
  }
  const double p = alpha - double(d), e = 1.0 + H * p;
  const double moment = gaussian_norm_moment(int(d), p);
  eta2_ = singular_radius(occ).square();
  if (e > 0) {
    model_factor_ = sigma.pow(p) * moment * (left_.pow(e) + right_.pow(e)) / e;
    smear_ = smear_table(int(d), p, H);
    sigma_ = sigma;
  } else {
    model_factor_ = Eigen::ArrayXd::Constant(m, kInf);
  }
}

PotentialEvaluator::Detail PotentialEvaluator::eval_line(const Eigen::Ref<const Eigen::VectorXd>& x, bool detail) const {
  const Eigen::Index m = occ_->size();
  const Eigen::ArrayXd z = occ_->positions.col(0).array() - x(0);
  const Eigen::ArrayXd absz = z.abs();
  // antiderivative sgn(z)|z|^alpha / alpha of |z|^{alpha-1}
  const Eigen::ArrayXd g = z.sign() * (alpha_ * absz.log()).exp() / alpha_;
  Eigen::ArrayXd terms = (g.tail(m - 1) - g.head(m - 1)) * slope_inv_;
  const auto near = (dx_.abs() <= 1e-6 * (absz.head(m - 1) + absz.tail(m - 1))).eval();
  if (near.any()) {
    for (Eigen::Index k = 0; k < m - 1; ++k) {
      if (!near(k)) continue;
      const double mid = std::abs(0.5 * (z(k) + z(k + 1)));
      terms(k) = mid > 0 ? dtau_(k) * std::pow(mid, alpha_ - 1.0) : (dtau_(k) > 0 ? kInf : 0.0);
    }
  }
  // segments passing within the near field: expectation of the integral along the fBm bridge
  // between the two samples, so that a slow straight segment does not pile up its time at x
  const double p = alpha_ - 1.0;
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const double gap = z(k) * z(k + 1) <= 0.0 ? 0.0 : std::min(absz(k), absz(k + 1));
    if (gap >= std::max(reach_(k), reach_(k + 1)) || dtau_(k) <= 0) continue;
    const double scale = bridge_scale_(k);
    // fast segments keep the straight line
    if (!(scale > 0) || std::abs(dx_(k)) > kBridgeSlowFactor * scale) continue;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < bridge_w_.size(); ++i) {
      const double mean = std::abs(z(k) + bridge_w_(i) * dx_(k));
      const double sd = scale * bridge_sd_(i);
      sum += bridge_q_(i) * (sd > 0 ? std::pow(sd, p) * smear_->moment(mean / sd) : std::pow(mean, p));
    }
    terms(k) = dtau_(k) * sum;
  }
  Detail out;
  out.value = terms.sum();
  if (detail) {
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
      const bool crosses = z(k) * z(k + 1) <= 0.0;
      if (crosses || std::min(absz(k), absz(k + 1)) < std::max(reach_(k), reach_(k + 1))) out.near_field += terms(k);
    }
    double var = 0.0;
    for (Eigen::Index k = 0; k < m; ++k)
      if (absz(k) >= reach_(k)) var += std::pow(wiggle_(k) * (1.0 - alpha_) * std::pow(absz(k), alpha_ - 2.0), 2);
    out.spread = std::sqrt(var);
  }
  return out;
}

PotentialEvaluator::Detail PotentialEvaluator::eval_atoms(const Eigen::Ref<const Eigen::VectorXd>& x, bool detail) const {
  const Eigen::Index d = occ_->dim();
  const double p = alpha_ - double(d);
  Eigen::ArrayXd dist2 = (occ_->positions.col(0).array() - x(0)).square();
  for (Eigen::Index j = 1; j < d; ++j) dist2 += (occ_->positions.col(j).array() - x(j)).square();
  Eigen::ArrayXd kern = (0.5 * p * dist2.log()).exp();
  Detail out;
  const auto near = (dist2 < reach_.square()).eval();
  if (near.any()) {
    const double H = occ_->hurst, e = 1.0 + H * p;
    for (Eigen::Index k = 0; k < kern.size(); ++k) {
      if (!near(k)) continue;
      if (dist2(k) < eta2_(k)) {
        kern(k) = 0.0;
        out.correction += model_factor_(k);
        out.near_field += model_factor_(k);
        continue;
      }
      if (!smear_) {
        out.near_field += occ_->weights(k) * kern(k);
        continue;
      }
      // Gaussian smear of the cell around the sample in place of the atom
      const double dist = std::sqrt(dist2(k));
      double cell = 0.0;
      for (double side : {left_(k), right_(k)}) {
        if (side <= 0) continue;
        const double scale = sigma_(k) * std::pow(side, H);
        const double kv = smear_->kernel(dist / scale);
        cell += kv < 0 ? side * kern(k) : std::pow(side, e) * std::pow(sigma_(k), p) * kv;
      }
      kern(k) = 0.0;
      out.correction += cell;
      out.near_field += cell;
    }
  }
  out.value = (occ_->weights.array() * kern).sum() + out.correction;
  if (detail) {
    // |grad ||y||^p| = |p| ||y||^{p-1}, zero on the modeled cells
    const Eigen::ArrayXd grad = kern * std::abs(p) / dist2.sqrt();
    out.spread = std::sqrt((wiggle_ * (kern > 0).select(grad, 0.0)).square().sum());
  }
  return out;
}

PotentialEvaluator::Detail PotentialEvaluator::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, bool detail) const {
  if (x.size() != occ_->dim()) throw ParameterError("potential: evaluation point has wrong dimension");
  return occ_->dim() == 1 ? eval_line(x, detail) : eval_atoms(x, detail);
}

PotentialEstimate riesz_potential(const OccupationMeasure& occ, double alpha,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, const PotentialOptions& options) {
  const PotentialEvaluator eval(occ, alpha);
  PotentialEstimate est;
  est.alpha = alpha;
  est.x = x;
  est.s = occ.s;
  est.t = occ.t;
  est.divergent = eval.divergent();
  const auto detail = eval.evaluate(x, options.estimate_error);
  est.value = detail.value;
  est.singular_corrected = detail.correction > 0;
  if (options.estimate_error && std::isfinite(est.value)) {
    double halving = 0.0;
    for (int parity : {0, 1}) halving = std::max(halving, std::abs(est.value - PotentialEvaluator(coarsen(occ, parity), alpha)(x)));
    est.err_bound = kHalvingFactor * halving + kNearFieldFactor * detail.near_field + kSpreadFactor * detail.spread;
  }
  return est;
}

PotentialEstimate rescaled_potential(const OccupationMeasure& occ, double alpha,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, const PotentialOptions& options) {
  if (alpha == 0.0)
    throw ParameterError("rescaled_potential: alpha = 0 is the local-time case, use local_time_histogram");
  PotentialEstimate est = riesz_potential(occ, alpha, x, options);
  const double c = rescaling_constant(alpha, int(occ.dim()));
  est.value *= c;
  est.err_bound *= c;
  return est;
}

double LocalTimeTable::box_volume() const { return std::pow(bin_width, double(origin.size())); }

double LocalTimeTable::density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<std::int64_t> key(std::size_t(origin.size()));
  for (Eigen::Index j = 0; j < origin.size(); ++j)
    key[std::size_t(j)] = std::int64_t(std::floor((x(j) - origin(j)) / bin_width));
  auto it = mass.find(key);
  return it == mass.end() ? 0.0 : it->second / box_volume();
}

double LocalTimeTable::total_mass() const {
  double s = 0.0;
  for (const auto& [k, v] : mass) s += v;
  return s;
}

Eigen::VectorXd LocalTimeTable::box_center(const std::vector<std::int64_t>& index) const {
  Eigen::VectorXd c(origin.size());
  for (Eigen::Index j = 0; j < origin.size(); ++j) c(j) = origin(j) + (double(index[std::size_t(j)]) + 0.5) * bin_width;
  return c;
}

std::pair<double, Eigen::VectorXd> LocalTimeTable::max_density() const {
  if (mass.empty()) return {0.0, origin};
  auto best = std::max_element(mass.begin(), mass.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return {best->second / box_volume(), box_center(best->first)};
}

LocalTimeTable local_time_histogram(const OccupationMeasure& occ, double bin_width, std::optional<Eigen::VectorXd> origin) {
  if (!(bin_width > 0)) throw ParameterError("local_time_histogram: bin_width must be positive");
  const Eigen::Index d = occ.dim(), m = occ.size();
  LocalTimeTable table;
  table.bin_width = bin_width;
  table.origin = origin.value_or(Eigen::VectorXd::Zero(d));
  if (table.origin.size() != d) throw ParameterError("local_time_histogram: origin dimension mismatch");
  table.meaningful = occ.hurst * double(d) < 1.0;
  const double w = bin_width;
  if (d == 1) {
    const double o = table.origin(0);
    auto bin = [&](double v) { return std::int64_t(std::floor((v - o) / w)); };
    const auto& X = occ.positions.col(0);
    const std::int64_t bmin = bin(X.minCoeff()), bmax = bin(X.maxCoeff());
    std::vector<double> dense(std::size_t(bmax - bmin + 1), 0.0);
    for (Eigen::Index k = 0; k + 1 < m; ++k) {
      const double dt = occ.times(k + 1) - occ.times(k);
      const double lo = std::min(X(k), X(k + 1)), hi = std::max(X(k), X(k + 1));
      const std::int64_t b0 = bin(lo), b1 = bin(hi);
      if (b0 == b1 || hi == lo) {
        dense[std::size_t(b0 - bmin)] += dt;
        continue;
      }
      double acc = 0.0;
      for (std::int64_t b = b0; b <= b1; ++b) {
        const double part = b == b1 ? dt - acc
                                    : dt * (std::min(hi, o + double(b + 1) * w) - std::max(lo, o + double(b) * w)) / (hi - lo);
        dense[std::size_t(b - bmin)] += part;
        acc += part;
      }
    }
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i] > 0) table.mass[{bmin + std::int64_t(i)}] = dense[i];
    return table;
  }
  std::vector<std::int64_t> key(std::size_t(d), 0);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < d; ++j)
      key[std::size_t(j)] = std::int64_t(std::floor((occ.positions(k, j) - table.origin(j)) / w));
    table.mass[key] += occ.weights(k);
  }
  return table;
}

double default_bin_width(const SamplePath& path) {
  return std::pow(path.horizon() / double(path.size() - 1), path.hurst_hint.value_or(0.5));
}

SupPotential sup_potential_over_space(const OccupationMeasure& occ, double alpha, const SupOptions& options) {
  const PotentialEvaluator eval(occ, alpha);
  const Eigen::Index m = occ.size();
  std::size_t stride = options.stride;
  if (stride == 0) stride = std::max<std::size_t>(1, (std::size_t(m) + options.max_sites - 1) / std::max<std::size_t>(1, options.max_sites));
  SupPotential out;
  out.principle_factor = std::pow(2.0, double(occ.dim()) - alpha);
  out.divergent = eval.divergent();
  out.value = -1.0;
  const double c = rescaling_constant(alpha, int(occ.dim()));
  auto consider = [&](const Eigen::VectorXd& x, double time) {
    const double v = c * eval(x);
    ++out.sites;
    if (v > out.value) {
      out.value = v;
      out.argmax = x;
      out.argmax_time = time;
    }
  };
  for (Eigen::Index k = 0; k < m; k += Eigen::Index(stride)) consider(occ.positions.row(k).transpose(), occ.times(k));
  for (const auto& x : options.extra_points) consider(x, std::numeric_limits<double>::quiet_NaN());
  return out;
}

Admissibility check_admissible(double H, int d, double alpha, std::optional<double> beta_incr) {
  Admissibility out;
  if (!(H > 0 && H < 1) || d < 1) {
    out.condition = "domain";
    out.reason = "need H in (0,1) and d >= 1";
    return out;
  }
  const double hd = H * d;
  out.max_beta_incr = alpha + std::min({1.0, (1.0 - hd) / (2.0 * H), (1.0 - hd) / H});
  const double lower = std::max(0.0, double(d) - 1.0 / H);
  const bool alpha_ok = alpha < double(d) && (hd < 1.0 ? alpha >= 0.0 : alpha > lower);
  if (!alpha_ok) {
    out.condition = kAlphaRangeCondition;
    char buf[200];
    std::snprintf(buf, sizeof buf, "alpha = %g is outside %s%g, %g) for H d = %g", alpha, hd < 1.0 ? "[" : "(",
                  lower, double(d), hd);
    out.reason = buf;
    return out;
  }
  if (beta_incr && !(*beta_incr >= 0.0 && *beta_incr <= 1.0 && *beta_incr - alpha < out.max_beta_incr - alpha)) {
    out.condition = kIncrementCondition;
    char buf[200];
    std::snprintf(buf, sizeof buf, "beta_incr = %g must lie in [0, 1] and below %g", *beta_incr, out.max_beta_incr);
    out.reason = buf;
    return out;
  }
  out.accepted = true;
  out.params = AdmissibleParams{H, d, alpha, beta_incr};
  return out;
}

void write_potential_csv(const std::filesystem::path& file, const std::vector<PotentialEstimate>& values) {
  std::ofstream os(file);
  if (!os) throw Error("cannot open " + file.string());
  const Eigen::Index d = values.empty() ? 1 : values.front().x.size();
  os << "alpha,s,t";
  for (Eigen::Index j = 0; j < d; ++j) os << ",x" << j + 1;
  os << ",value,err_bound,singular_corrected\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& e : values) {
    os << num(e.alpha) << ',' << num(e.s) << ',' << num(e.t);
    for (Eigen::Index j = 0; j < e.x.size(); ++j) os << ',' << num(e.x(j));
    os << ',' << num(e.value) << ',' << num(e.err_bound) << ',' << (e.singular_corrected ? 1 : 0) << '\n';
  }
}

}  // namespace occuriesz
