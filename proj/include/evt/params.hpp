#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "evt/tensor.hpp"

namespace evt {

// Insertion-ordered set of named learnable tensors. The fixed ordering is what
// makes optimizer updates and checkpoints deterministic.
class ParamSet {
public:
    Tensor& add(const std::string& name, Tensor t);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Tensor>>& mutable_entries() { return entries_; }
    std::size_t count() const { return entries_.size(); }
    std::size_t total_scalars() const;

    void zero_grads();

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

// Fills a matrix [out×in] with uniform values in ±1/sqrt(in); row-major draw
// order so the stream is reproducible.
Tensor init_weight(int out_dim, int in_dim, Rng& rng);

}  // namespace evt
