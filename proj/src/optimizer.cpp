#include "evt/optimizer.hpp"

#include <cmath>

namespace evt {

double lr_at(int step, double lr_max, int warmup_steps, int total_steps) {
    if (step < 0) throw ContractError("lr_at: step must be >= 0");
    if (step < warmup_steps)
        return lr_max * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const int span = total_steps - warmup_steps;
    if (span <= 0) return lr_max;
    const double progress = static_cast<double>(step - warmup_steps) / static_cast<double>(span);
    return lr_max * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

void AdamW::step(ParamSet& params, double lr) {
    if (m_.empty()) {
        for (const auto& [name, t] : params.entries()) {
            m_.emplace_back(t.size(), 0.0);
            v_.emplace_back(t.size(), 0.0);
        }
    }
    if (m_.size() != params.count())
        throw ContractError("optimizer state does not match parameter count");

    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

    std::size_t pi = 0;
    for (auto& [name, t] : params.mutable_entries()) {
        auto values = t.mutable_data();
        auto& m = m_[pi];
        auto& v = v_[pi];
        if (!t.has_grad()) {
            // Unused parameter this step: decay only, moments untouched.
            for (std::size_t i = 0; i < values.size(); ++i)
                values[i] -= lr * cfg_.weight_decay * values[i];
            ++pi;
            continue;
        }
        auto g = t.grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            values[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.eps) +
                               cfg_.weight_decay * values[i]);
        }
        ++pi;
    }
}

void AdamW::restore(std::uint64_t step_count, std::vector<std::vector<double>> m,
                    std::vector<std::vector<double>> v) {
    step_count_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace evt
