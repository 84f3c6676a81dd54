#pragma once

#include <cstdint>
#include <string>

#include "trajlab/nn/model.hpp"

namespace trajlab::nn {

// Binary checkpoint: versioned magic header, the ModelConfig, the training
// seeds, then every parameter tensor with name, shape, and raw float32 data
// (little-endian). Loading restores bit-identical predictions.

struct CheckpointSeeds {
    uint64_t init_seed = 0;
    uint64_t shuffle_seed = 0;
    uint64_t split_seed = 0;
};

void save_checkpoint(const Model& model, const CheckpointSeeds& seeds,
                     const std::string& path);

struct LoadedCheckpoint {
    Model model;
    CheckpointSeeds seeds;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace trajlab::nn
