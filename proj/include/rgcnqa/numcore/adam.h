#pragma once

#include <span>

#include "rgcnqa/numcore/param.h"
#include "rgcnqa/numcore/tape.h"

namespace rgcnqa {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive-moment update. A parameter missing from `grads` is
/// treated as having a zero gradient. Throws NumericError, leaving every
/// parameter untouched, if any supplied gradient is non-finite.
void adam_step(std::span<Param* const> params, const Gradients& grads, const AdamOptions& options);

}  // namespace rgcnqa
