#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace typar::testing {

GradCheck finite_difference_check(Parameter<double>& p, const Matrix<double>& analytic,
                                  const std::function<double()>& loss, double step,
                                  std::size_t max_entries) {
  const auto n = static_cast<std::size_t>(p.value.size());
  std::size_t stride = 1;
  if (max_entries > 0 && n > max_entries) stride = (n + max_entries - 1) / max_entries;
  double diff2 = 0, a2 = 0, n2 = 0;
  GradCheck out;
  for (std::size_t i = 0; i < n; i += stride) {
    double& x = p.value.data()[i];
    const double saved = x;
    x = saved + step;
    const double up = loss();
    x = saved - step;
    const double down = loss();
    x = saved;
    const double numeric = (up - down) / (2 * step);
    const double a = analytic.size() ? analytic.data()[i] : 0.0;
    diff2 += (a - numeric) * (a - numeric);
    a2 += a * a;
    n2 += numeric * numeric;
    ++out.checked;
  }
  out.analytic_norm = std::sqrt(a2);
  out.numeric_norm = std::sqrt(n2);
  const double denom = std::max({out.analytic_norm, out.numeric_norm, 1e-10});
  out.rel_error = std::sqrt(diff2) / denom;
  return out;
}

}  // namespace typar::testing
