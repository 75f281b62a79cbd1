#pragma once

#include <Eigen/Core>

#include <cmath>

namespace occuriesz {

struct QuadratureRule {
  Eigen::VectorXd nodes;    // on [-1, 1]
  Eigen::VectorXd weights;
};

// Gauss-Legendre rule from the Golub-Welsch eigenproblem; cached per order.
const QuadratureRule& gauss_legendre(int order);

template <typename F>
double integrate(F&& f, double a, double b, int order = 32) {
  const QuadratureRule& rule = gauss_legendre(order);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) sum += rule.weights(i) * f(mid + half * rule.nodes(i));
  return half * sum;
}

enum class GradeToward { Left, Right };

// Composite rule on panels shrinking geometrically (factor `ratio`) toward one endpoint,
// for integrands with an integrable endpoint singularity. The innermost remainder
// panel gets one plain panel of the same order.
template <typename F>
double integrate_graded(F&& f, double a, double b, GradeToward toward = GradeToward::Left,
                        int levels = 40, double ratio = 0.5, int order = 20) {
  const double len = b - a;
  double sum = 0.0, outer = 1.0;
  for (int k = 0; k <= levels; ++k) {
    const double inner = k == levels ? 0.0 : outer * ratio;
    if (toward == GradeToward::Left)
      sum += integrate(f, a + len * inner, a + len * outer, order);
    else
      sum += integrate(f, b - len * outer, b - len * inner, order);
    outer = inner;
  }
  return sum;
}

}  // namespace occuriesz
