#pragma once

#include <string>
#include <vector>

#include "evt/config.hpp"
#include "evt/encoder.hpp"
#include "evt/prompt_oracle.hpp"

namespace evt {

struct DatasetVideo {
    VideoFeatures features;  // raw encoder inputs
    EventScript script;
    PromptBundle bundle;
    std::string split;  // "train" or "val"
};

struct SyntheticDataset {
    std::vector<DatasetVideo> videos;
    int num_classes = 0;  // action classes, background excluded
    int d_v = 0;
    int d_p = 0;
    double clip_len = 0.0;
    double clip_stride = 0.0;
    std::uint64_t embed_seed = 0;  // seed of the embedding vocabulary

    std::vector<int> indices_of(const std::string& split) const;
};

// Draws a dataset deterministically from (spec, seed). Every video gets 1-4
// non-overlapping events; in-event tokens carry the event's class template
// plus Gaussian noise, out-of-event tokens are pure noise. Scripts and prompt
// bundles are derived through the prompt oracle.
SyntheticDataset generate_dataset(const GenSpec& spec, std::uint64_t seed);

// Dataset directory layout: manifest.json at the root, one subdirectory per
// video holding features.f32 (little-endian 64-bit floats, row-major L×D_in),
// script.json and bundle.json.
void write_dataset(const SyntheticDataset& data, const std::string& dir);
SyntheticDataset read_dataset(const std::string& dir);

// The class template a noiseless in-event token equals; exposed for tests.
std::vector<double> class_template(const GenSpec& spec, std::uint64_t seed, int class_id);

}  // namespace evt
