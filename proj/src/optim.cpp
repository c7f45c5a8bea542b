#include "typar/optim.hpp"

#include <cmath>
#include <string>

namespace typar {

template <class S>
void adam_step(std::span<Parameter<S>* const> params, AdamState<S>& state, double lr) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size())
    throw InvariantError("adam_step: parameter list changed size (" + std::to_string(params.size()) +
                         " vs " + std::to_string(state.m.size()) + ")");
  ++state.step;
  const auto& o = state.options;
  const S b1 = S(o.beta1), b2 = S(o.beta2);
  const S c1 = S(1.0 - std::pow(o.beta1, double(state.step)));
  const S c2 = S(1.0 - std::pow(o.beta2, double(state.step)));
  const S rate = S(lr), decay = S(o.weight_decay), eps = S(o.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols())
      throw InvariantError("adam_step: moment shape mismatch for " + p.name);
    if (p.grad.size() == 0) {
      m *= b1;
      v *= b2;
    } else {
      m = b1 * m + (S(1) - b1) * p.grad;
      v = b2 * v + (S(1) - b2) * p.grad.cwiseAbs2();
    }
    auto update = ((m.array() / c1) / ((v.array() / c2).sqrt() + eps)) + decay * p.value.array();
    p.value.array() -= rate * update;
  }
}

template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&, double);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&, double);

double lr_at_step(long step, double base, long warmup) {
  if (step < 1) throw InvariantError("lr_at_step: step must be >= 1");
  if (warmup < 1) throw InvariantError("lr_at_step: warmup must be >= 1");
  if (step <= warmup) return base * double(step) / double(warmup);
  return base * std::sqrt(double(warmup) / double(step));
}

}  // namespace typar
