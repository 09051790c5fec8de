#include "evt/params.hpp"

#include <cmath>

namespace evt {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
    if (has(name)) throw ContractError("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    entries_.emplace_back(name, std::move(t));
    return entries_.back().second;
}

const Tensor& ParamSet::get(const std::string& name) const {
    for (const auto& [n, t] : entries_)
        if (n == name) return t;
    throw ContractError("unknown parameter: " + name);
}

bool ParamSet::has(const std::string& name) const {
    for (const auto& [n, t] : entries_)
        if (n == name) return true;
    return false;
}

std::size_t ParamSet::total_scalars() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.size();
    return n;
}

void ParamSet::zero_grads() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

Tensor init_weight(int out_dim, int in_dim, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    Tensor w = Tensor::zeros({out_dim, in_dim});
    auto d = w.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform(-bound, bound);
    return w;
}

}  // namespace evt
