#include "occuriesz/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <mutex>
#include <stdexcept>

namespace occuriesz {

namespace {

QuadratureRule golub_welsch(int order) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = 2.0 * eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int order) {
  if (order < 1 || order > 512) throw std::invalid_argument("gauss_legendre: order out of range");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, golub_welsch(order)).first;
  return it->second;
}

}  // namespace occuriesz
