#include "occuriesz/process_sim.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace occuriesz {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& v : violations) os << "\n  - " << v;
        return os.str();
      }()),
      violations_(std::move(violations)) {}

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::FBM: return "FBM";
    case ProcessKind::BROWNIAN: return "BROWNIAN";
    case ProcessKind::ROSENBLATT: return "ROSENBLATT";
    case ProcessKind::STABLE_SYM: return "STABLE_SYM";
    case ProcessKind::YOUNG_SDE: return "YOUNG_SDE";
  }
  return "?";
}

ProcessKind parse_process_kind(std::string_view name) {
  for (auto k : {ProcessKind::FBM, ProcessKind::BROWNIAN, ProcessKind::ROSENBLATT,
                 ProcessKind::STABLE_SYM, ProcessKind::YOUNG_SDE})
    if (to_string(k) == name) return k;
  throw ParameterError("unknown process kind '" + std::string(name) + "'");
}

void validate(const SamplePath& path) {
  const Eigen::Index n = path.times.size();
  if (n < 2) throw ParameterError("sample path needs at least two grid points");
  if (path.positions.rows() != n) throw ParameterError("positions and times differ in length");
  if (path.positions.cols() < 1) throw ParameterError("sample path dimension must be >= 1");
  if (path.times(0) != 0.0) throw ParameterError("sample path must start at time 0");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(path.times(i) > path.times(i - 1))) throw ParameterError("sample times not strictly increasing");
  if (!path.positions.allFinite()) throw ParameterError("sample path has non-finite coordinates");
}

SamplePath linear_path(const Eigen::VectorXd& x0, const Eigen::VectorXd& velocity, double T,
                       Eigen::Index n) {
  if (x0.size() != velocity.size() || x0.size() < 1) throw ParameterError("linear_path: dimension mismatch");
  if (n < 1 || !(T > 0)) throw ParameterError("linear_path: need n >= 1 and T > 0");
  SamplePath path;
  path.times = Eigen::VectorXd::LinSpaced(n + 1, 0.0, T);
  path.times(n) = T;
  path.positions = (Eigen::VectorXd::Ones(n + 1) * x0.transpose()) + path.times * velocity.transpose();
  path.hurst_hint = 1.0;
  return path;
}

SamplePath constant_path(const Eigen::VectorXd& x0, double T, Eigen::Index n) {
  SamplePath path = linear_path(x0, Eigen::VectorXd::Zero(x0.size()), T, n);
  path.hurst_hint.reset();
  return path;
}

double effective_hurst(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::BROWNIAN: return 0.5;
    case ProcessKind::STABLE_SYM: return 1.0 / spec.beta_stable;
    default: return spec.hurst;
  }
}

std::vector<std::string> spec_violations(const ProcessSpec& spec) {
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  need(spec.dim >= 1, "d must be >= 1");
  need(spec.n_steps >= 1, "n_steps must be >= 1");
  need(spec.horizon > 0 && std::isfinite(spec.horizon), "T must be positive and finite");
  switch (spec.kind) {
    case ProcessKind::FBM:
      need(spec.hurst > 0 && spec.hurst < 1, "FBM requires H in (0,1)");
      break;
    case ProcessKind::BROWNIAN:
      break;
    case ProcessKind::ROSENBLATT:
      need(spec.hurst > 0.5 && spec.hurst < 1, "ROSENBLATT requires H in (1/2,1)");
      need(spec.micro_steps >= 1, "ROSENBLATT requires micro_steps >= 1");
      break;
    case ProcessKind::STABLE_SYM:
      need(spec.beta_stable > 0 && spec.beta_stable <= 2, "STABLE_SYM requires beta_stable in (0,2]");
      break;
    case ProcessKind::YOUNG_SDE:
      need(spec.hurst >= 0.5 && spec.hurst < 1,
           "YOUNG_SDE requires H in [1/2,1); rough-path solving for H < 1/2 is not supported");
      need(spec.sde.has_value(), "YOUNG_SDE requires sde coefficients");
      break;
  }
  return out;
}

void validate(const ProcessSpec& spec) {
  auto v = spec_violations(spec);
  if (v.empty()) return;
  std::string msg = v.front();
  for (std::size_t i = 1; i < v.size(); ++i) msg += "; " + v[i];
  throw ParameterError(msg);
}

double unit_ball_volume(int d) {
  if (d < 1) throw ParameterError("unit_ball_volume: d must be >= 1");
  // omega_d = 2 pi / d * omega_{d-2}, with omega_0 = 1, omega_1 = 2
  double w = d % 2 ? 2.0 : 1.0;
  for (int k = d % 2 ? 3 : 2; k <= d; k += 2) w *= 2.0 * std::numbers::pi / k;
  return w;
}

namespace {

bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

struct Embedding {
  Eigen::VectorXd sqrt_eigen;  // sqrt(lambda_k / m)
  bool ok = true;
};

std::shared_ptr<const Embedding> circulant_embedding(std::size_t n, double hurst) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, double>, std::shared_ptr<const Embedding>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({n, hurst}); it != cache.end()) return it->second;
  }
  const std::size_t m = 2 * n;
  std::vector<std::complex<double>> c(m), lambda;
  for (std::size_t k = 0; k <= n; ++k) c[k] = fgn_autocovariance<double>(hurst, double(k));
  for (std::size_t k = n + 1; k < m; ++k) c[k] = c[m - k];
  Eigen::FFT<double> fft;
  fft.fwd(lambda, c);
  auto emb = std::make_shared<Embedding>();
  emb->sqrt_eigen.resize(m);
  double lmax = 0.0;
  for (const auto& l : lambda) lmax = std::max(lmax, l.real());
  for (std::size_t k = 0; k < m; ++k) {
    double l = lambda[k].real();
    if (l < -1e-10 * lmax) emb->ok = false;
    emb->sqrt_eigen(k) = std::sqrt(std::max(l, 0.0) / double(m));
  }
  std::lock_guard lock(mutex);
  if (cache.size() > 64) cache.clear();
  cache[{n, hurst}] = emb;
  return emb;
}

Eigen::VectorXd fgn_by_cholesky(std::size_t n, double hurst, CounterRng& rng) {
  Eigen::MatrixXd gram(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gram(i, j) = fgn_autocovariance<double>(hurst, double(i) - double(j));
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw ModelError("fGn Gram matrix is not positive definite");
  Eigen::VectorXd z(n);
  fill_normal(rng, z);
  return llt.matrixL() * z;
}

Eigen::VectorXd fgn_by_circulant(std::size_t n, const Embedding& emb, CounterRng& rng) {
  const std::size_t m = 2 * n;
  std::vector<std::complex<double>> w(m), y;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = rng.normal(), b = rng.normal();
    w[k] = emb.sqrt_eigen(k) * std::complex<double>(a, b);
  }
  Eigen::FFT<double> fft;
  fft.fwd(y, w);
  Eigen::VectorXd out(n);
  for (std::size_t k = 0; k < n; ++k) out(k) = y[k].real();
  return out;
}

SamplePath uniform_grid_path(const ProcessSpec& spec) {
  SamplePath path;
  const auto n = Eigen::Index(spec.n_steps);
  path.times = Eigen::VectorXd::LinSpaced(n + 1, 0.0, spec.horizon);
  path.times(n) = spec.horizon;
  path.positions = Eigen::MatrixXd::Zero(n + 1, spec.dim);
  path.hurst_hint = effective_hurst(spec);
  return path;
}

void integrate_increments(SamplePath& path, int coord, const Eigen::VectorXd& incr) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < incr.size(); ++k) {
    acc += incr(k);
    path.positions(k + 1, coord) = acc;
  }
}

void require_kind(const ProcessSpec& spec, ProcessKind kind) {
  if (spec.kind != kind)
    throw ParameterError("expected a " + std::string(to_string(kind)) + " spec, got " +
                         std::string(to_string(spec.kind)));
  validate(spec);
}

}  // namespace

Eigen::VectorXd sample_fgn(std::size_t n, double hurst, CounterRng& rng, const FbmOptions& options) {
  if (options.method != FgnMethod::Cholesky) {
    auto emb = circulant_embedding(n, hurst);
    if (emb->ok) return fgn_by_circulant(n, *emb, rng);
    if (options.method == FgnMethod::Circulant)
      throw ModelError("circulant embedding is not nonnegative definite");
  }
  if (n > options.cholesky_max_steps)
    throw CapacityError("Cholesky fallback needs an " + std::to_string(n) + "x" + std::to_string(n) +
                        " factor, above the configured bound");
  return fgn_by_cholesky(n, hurst, rng);
}

double hermite2_partial_sum_variance(double hurst_micro, std::size_t N) {
  // Var sum (xi^2 - 1) = 2 sum_{j,k} rho(j-k)^2
  double acc = double(N);
  for (std::size_t h = 1; h < N; ++h) {
    const double r = fgn_autocovariance<double>(hurst_micro, double(h));
    acc += 2.0 * double(N - h) * r * r;
  }
  return 2.0 * acc;
}

SamplePath simulate_fbm(const ProcessSpec& spec, std::uint64_t seed, const FbmOptions& options) {
  require_kind(spec, ProcessKind::FBM);
  if (!is_power_of_two(spec.n_steps))
    throw ResolutionError("FBM synthesis needs n_steps a power of two, got " + std::to_string(spec.n_steps));
  SamplePath path = uniform_grid_path(spec);
  const double scale = std::pow(spec.horizon / double(spec.n_steps), spec.hurst);
  for (int j = 0; j < spec.dim; ++j) {
    CounterRng rng(seed, std::uint64_t(j));
    integrate_increments(path, j, scale * sample_fgn(spec.n_steps, spec.hurst, rng, options));
  }
  return path;
}

SamplePath simulate_brownian(const ProcessSpec& spec, std::uint64_t seed) {
  require_kind(spec, ProcessKind::BROWNIAN);
  SamplePath path = uniform_grid_path(spec);
  const double scale = std::sqrt(spec.horizon / double(spec.n_steps));
  Eigen::VectorXd incr(spec.n_steps);
  for (int j = 0; j < spec.dim; ++j) {
    CounterRng rng(seed, std::uint64_t(j));
    fill_normal(rng, incr);
    integrate_increments(path, j, scale * incr);
  }
  return path;
}

SamplePath simulate_rosenblatt(const ProcessSpec& spec, std::uint64_t seed) {
  if (spec.kind == ProcessKind::ROSENBLATT && !(spec.hurst > 0.5))
    throw ParameterError("ROSENBLATT requires H in (1/2,1), got H = " + std::to_string(spec.hurst));
  require_kind(spec, ProcessKind::ROSENBLATT);
  const std::size_t M = spec.micro_steps, N = spec.n_steps * M;
  if (N > (std::size_t(1) << 24))
    throw CapacityError("Rosenblatt micro-sequence of length " + std::to_string(N) + " exceeds 2^24");
  // micro-sequence correlation rho(k) ~ k^{H-1} corresponds to fGn index (1+H)/2
  const double h_micro = 0.5 * (1.0 + spec.hurst);
  const double unit_steps = std::max(1.0, std::round(double(N) / spec.horizon));
  const double norm = 1.0 / std::sqrt(hermite2_partial_sum_variance(h_micro, std::size_t(unit_steps)));
  FbmOptions options;
  options.method = FgnMethod::Auto;
  options.cholesky_max_steps = 0;
  SamplePath path = uniform_grid_path(spec);
  for (int j = 0; j < spec.dim; ++j) {
    CounterRng rng(seed, std::uint64_t(j));
    const Eigen::VectorXd xi = sample_fgn(N, h_micro, rng, options);
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.n_steps; ++i) {
      for (std::size_t k = i * M; k < (i + 1) * M; ++k) acc += xi(k) * xi(k) - 1.0;
      path.positions(i + 1, j) = norm * acc;
    }
  }
  return path;
}

SamplePath simulate_stable(const ProcessSpec& spec, std::uint64_t seed) {
  require_kind(spec, ProcessKind::STABLE_SYM);
  const double beta = spec.beta_stable;
  const double scale = std::pow(spec.horizon / double(spec.n_steps), 1.0 / beta);
  SamplePath path = uniform_grid_path(spec);
  Eigen::VectorXd incr(spec.n_steps);
  for (int j = 0; j < spec.dim; ++j) {
    CounterRng rng(seed, std::uint64_t(j));
    for (std::size_t k = 0; k < spec.n_steps; ++k) {
      // Chambers-Mallows-Stuck, symmetric case; characteristic function exp(-|u|^beta)
      const double v = std::numbers::pi * (rng.uniform() - 0.5);
      const double w = -std::log(rng.uniform());
      const double x = std::sin(beta * v) / std::pow(std::cos(v), 1.0 / beta) *
                       std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
      incr(Eigen::Index(k)) = scale * x;
    }
    integrate_increments(path, j, incr);
  }
  return path;
}

SamplePath solve_young_sde(const ProcessSpec& spec, const SamplePath& driver) {
  if (spec.kind != ProcessKind::YOUNG_SDE) throw ParameterError("solve_young_sde needs a YOUNG_SDE spec");
  if (spec.hurst < 0.5)
    throw UnsupportedRegimeError(
        "H < 1/2 needs a rough-path lift of the driver; only the Young (H > 1/2) and "
        "Stratonovich (H = 1/2) regimes are implemented");
  validate(spec);
  validate(driver);
  const SdeCoefficients& sde = *spec.sde;
  const Eigen::Index e = sde.x0.size(), d = driver.dim();
  if (!sde.diffusion) throw ParameterError("sde.diffusion must be set");
  Eigen::MatrixXd v0 = sde.diffusion(sde.x0);
  if (v0.rows() != e || v0.cols() != d)
    throw ParameterError("diffusion matrix must be " + std::to_string(e) + "x" + std::to_string(d));
  if (sde.ellipticity > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v0 * v0.transpose(), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < sde.ellipticity)
      throw ParameterError("diffusion is not elliptic at x0 with the given lambda");
  }
  auto drift = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return sde.drift ? sde.drift(x) : Eigen::VectorXd::Zero(e);
  };

  SamplePath out;
  out.times = driver.times;
  out.positions.resize(driver.size(), e);
  out.positions.row(0) = sde.x0.transpose();
  out.hurst_hint = spec.hurst;
  const bool midpoint = spec.hurst == 0.5;
  Eigen::VectorXd x = sde.x0;
  for (Eigen::Index k = 0; k + 1 < driver.size(); ++k) {
    const double dt = driver.times(k + 1) - driver.times(k);
    const Eigen::VectorXd db = (driver.point(k + 1) - driver.point(k)).transpose();
    Eigen::VectorXd next;
    if (midpoint) {
      next = x + drift(x) * dt + sde.diffusion(x) * db;
      for (int it = 0; it < 50; ++it) {
        const Eigen::VectorXd mid = 0.5 * (x + next);
        Eigen::VectorXd upd = x + drift(mid) * dt + sde.diffusion(mid) * db;
        const double change = (upd - next).lpNorm<Eigen::Infinity>();
        next = std::move(upd);
        if (change <= 1e-14 * (1.0 + next.lpNorm<Eigen::Infinity>())) break;
      }
    } else {
      const Eigen::VectorXd a0 = drift(x);
      const Eigen::MatrixXd s0 = sde.diffusion(x);
      const Eigen::VectorXd pred = x + a0 * dt + s0 * db;
      next = x + 0.5 * (a0 + drift(pred)) * dt + 0.5 * (s0 + sde.diffusion(pred)) * db;
    }
    x = std::move(next);
    out.positions.row(k + 1) = x.transpose();
  }
  return out;
}

SamplePath simulate_with_seed(const ProcessSpec& spec, std::uint64_t seed) {
  validate(spec);
  SamplePath path;
  switch (spec.kind) {
    case ProcessKind::FBM: path = simulate_fbm(spec, seed); break;
    case ProcessKind::BROWNIAN: path = simulate_brownian(spec, seed); break;
    case ProcessKind::ROSENBLATT: path = simulate_rosenblatt(spec, seed); break;
    case ProcessKind::STABLE_SYM: path = simulate_stable(spec, seed); break;
    case ProcessKind::YOUNG_SDE: {
      ProcessSpec drv = spec;
      drv.kind = spec.hurst == 0.5 ? ProcessKind::BROWNIAN : ProcessKind::FBM;
      drv.dim = spec.sde ? int(spec.sde->diffusion(spec.sde->x0).cols()) : spec.dim;
      drv.sde.reset();
      path = solve_young_sde(spec, simulate_with_seed(drv, seed));
      break;
    }
  }
  validate(path);
  return path;
}

SamplePath simulate(const ProcessSpec& spec, std::uint64_t replication) {
  return simulate_with_seed(spec, derive_seed(spec.seed, replication));
}

}  // namespace occuriesz
