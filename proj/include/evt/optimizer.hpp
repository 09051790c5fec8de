#pragma once

#include <cstdint>
#include <vector>

#include "evt/params.hpp"

namespace evt {

// Warmup then cosine annealing: lr_max * t / warmup while t < warmup, then
// lr_max * 0.5 * (1 + cos(pi * (t - warmup) / (total - warmup))).
double lr_at(int step, double lr_max, int warmup_steps, int total_steps);

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Decoupled weight decay Adam over a ParamSet; moment buffers follow the
// set's insertion order.
class AdamW {
public:
    AdamW() = default;
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    void step(ParamSet& params, double lr);

    const AdamWConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return step_count_; }
    const std::vector<std::vector<double>>& m() const { return m_; }
    const std::vector<std::vector<double>>& v() const { return v_; }
    void restore(std::uint64_t step_count, std::vector<std::vector<double>> m,
                 std::vector<std::vector<double>> v);

private:
    AdamWConfig cfg_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace evt
