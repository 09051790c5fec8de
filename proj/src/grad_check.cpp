#include "evt/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace evt {

double grad_check(const ScalarFn& f, std::vector<Tensor> inputs, double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3))
        throw ContractError("grad_check eps must lie in [1e-7, 1e-3]");
    if (inputs.empty()) throw ContractError("grad_check requires at least one input");

    for (auto& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }

    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tensor out = f(inputs);
        if (out.size() != 1)
            throw ContractError("grad_check requires a scalar-valued function, got output " +
                                shape_string(out.shape()));
        tape.backward(out);
        for (const auto& t : inputs) {
            if (t.has_grad())
                analytic.emplace_back(t.grad().begin(), t.grad().end());
            else
                analytic.emplace_back(t.size(), 0.0);
        }
    }

    double worst = 0.0;
    for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
        auto values = inputs[ti].mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = f(inputs).value();
            values[i] = saved - eps;
            const double down = f(inputs).value();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[ti][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace evt
