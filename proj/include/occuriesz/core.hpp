#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace occuriesz {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// Grid resolution not usable by the requested scheme.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegimeError : public Error {
 public:
  using Error::Error;
};

// Numerical model breakdown, e.g. a Gram matrix that is not PSD.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ReproducibilityError : public Error {
 public:
  using Error::Error;
};

enum class ProcessKind { FBM, BROWNIAN, ROSENBLATT, STABLE_SYM, YOUNG_SDE };

std::string_view to_string(ProcessKind kind);
ProcessKind parse_process_kind(std::string_view name);

template <typename Scalar>
struct BasicSamplePath {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector times;      // n + 1 grid times, times[0] = 0
  Matrix positions;  // (n + 1) x d, one row per time
  std::optional<Scalar> hurst_hint;

  Eigen::Index size() const { return times.size(); }
  Eigen::Index dim() const { return positions.cols(); }
  Scalar horizon() const { return times(times.size() - 1); }
  auto point(Eigen::Index i) const { return positions.row(i); }
};

using SamplePath = BasicSamplePath<double>;

// Throws ParameterError if the grid or positions break the path invariants.
void validate(const SamplePath& path);

// Straight line X_u = x0 + u * velocity on a uniform grid of n steps over [0, T].
SamplePath linear_path(const Eigen::VectorXd& x0, const Eigen::VectorXd& velocity, double T,
                       Eigen::Index n);
SamplePath constant_path(const Eigen::VectorXd& x0, double T, Eigen::Index n);

struct SdeCoefficients {
  Eigen::VectorXd x0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;       // V_0
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;   // columns V_1..V_d
  double ellipticity = 0.0;                                           // lambda
};

struct ProcessSpec {
  ProcessKind kind = ProcessKind::FBM;
  double hurst = 0.5;
  double beta_stable = 2.0;
  int dim = 1;
  std::size_t n_steps = 1024;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::size_t micro_steps = 256;  // Rosenblatt micro-steps per output step
  std::optional<SdeCoefficients> sde;
};

// Effective Hurst index of the produced paths (1/2 for Brownian, 1/beta for stable).
double effective_hurst(const ProcessSpec& spec);

// Collects every violated constraint; throws ParameterError listing them.
std::vector<std::string> spec_violations(const ProcessSpec& spec);
void validate(const ProcessSpec& spec);

double unit_ball_volume(int d);

}  // namespace occuriesz
