#pragma once

#include <cstdint>
#include <string>

#include "evt/optimizer.hpp"
#include "evt/params.hpp"

namespace evt {

// Full training snapshot: parameters, optimizer moments, the batch-order RNG
// and the originating config. The binary encoding is canonical, so
// save -> load -> save reproduces the file byte for byte.
struct Checkpoint {
    std::uint64_t step = 0;
    std::string config_json;
    ParamSet params;
    std::uint64_t adam_step_count = 0;
    std::vector<std::vector<double>> adam_m;
    std::vector<std::vector<double>> adam_v;
    std::uint64_t rng_state = 0;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace evt
