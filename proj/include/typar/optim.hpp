#pragma once

#include <span>
#include <vector>

#include "typar/tape.hpp"

namespace typar {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 0.01;
  double eps = 1e-8;
};

template <class S>
struct AdamState {
  AdamOptions options;
  std::vector<Matrix<S>> m, v;  // parallel to the parameter list given to adam_step
  long step = 0;
};

// Adam with decoupled weight decay:
//   p <- p - lr * (mhat / (sqrt(vhat) + eps) + weight_decay * p)
// A parameter whose grad is empty is treated as having zero gradient.
template <class S>
void adam_step(std::span<Parameter<S>* const> params, AdamState<S>& state, double lr);

// Linear warm-up to `base` at step == warmup, then base * sqrt(warmup / step).
double lr_at_step(long step, double base, long warmup);

}  // namespace typar
