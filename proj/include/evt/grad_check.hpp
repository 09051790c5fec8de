#pragma once

#include <functional>
#include <vector>

#include "evt/tensor.hpp"

namespace evt {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares tape gradients of a scalar-valued function against central
// differences, coordinate by coordinate, over every listed input. Returns the
// worst relative error with denominator max(|analytic|, |numeric|, 1e-8).
// eps must lie in [1e-7, 1e-3]. The inputs are perturbed in place and restored.
double grad_check(const ScalarFn& f, std::vector<Tensor> inputs, double eps = 1e-5);

}  // namespace evt
