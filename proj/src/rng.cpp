#include "occuriesz/rng.hpp"

namespace occuriesz {

void fill_normal(CounterRng& rng, Eigen::Ref<Eigen::VectorXd> out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.normal();
}

}  // namespace occuriesz
