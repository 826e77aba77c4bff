#include "rgcnqa/numcore/adam.h"

#include <cmath>

namespace rgcnqa {

void adam_step(std::span<Param* const> params, const Gradients& grads, const AdamOptions& options) {
  for (const Param* p : params) {
    const Tensor* g = grads.find(*p);
    if (g == nullptr) continue;
    if (g->shape() != p->value.shape()) {
      throw ShapeError("adam_step: gradient " + shape_str(g->shape()) + " for parameter " + shape_str(p->value.shape()));
    }
    if (!g->all_finite()) throw NumericError("adam_step: non-finite gradient");
  }

  for (Param* p : params) {
    p->step_count += 1;
    const Tensor* g = grads.find(*p);
    const double t = static_cast<double>(p->step_count);
    const double c1 = 1.0 - std::pow(options.beta1, t);
    const double c2 = 1.0 - std::pow(options.beta2, t);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      double& m = p->first_moment[i];
      double& v = p->second_moment[i];
      m = options.beta1 * m + (1.0 - options.beta1) * gi;
      v = options.beta2 * v + (1.0 - options.beta2) * gi * gi;
      p->value[i] -= options.lr * (m / c1) / (std::sqrt(v / c2) + options.eps);
    }
  }
}

}  // namespace rgcnqa
