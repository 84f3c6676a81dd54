#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajlab/dataset.hpp"
#include "trajlab/nn/model.hpp"

namespace trajlab::nn {

struct TrainConfig {
    int epochs = 60;
    double learning_rate = 0.001;
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    uint64_t init_seed = 0;
    uint64_t shuffle_seed = 0;

    void validate() const;
};

// Adam moments mirrored over the model's parameter tensors.
struct AdamState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;
    int64_t step = 0;

    explicit AdamState(const Model& model);
};
void adam_update(Model& model, AdamState& state, const TrainConfig& config);

// Dataset resident in memory; pixels stay 8-bit and are scaled to [0,1] at
// batch-assembly time.
struct LoadedSample {
    std::vector<uint8_t> pixels;
    char class_label = 'A';
    double value_label = 0.0;
};
struct LoadedDataset {
    Task task = Task::classification;
    int image_size = 0;
    std::vector<LoadedSample> samples;
    std::vector<int> train_idx, val_idx, test_idx;

    std::span<const int> split_indices(Split s) const;
    // One-hot (1,0)/(0,1) for classification, the directionality value for
    // regression.
    void fill_target(int sample, std::span<float> target) const;
};
LoadedDataset load_dataset(const DatasetManifest& manifest,
                           const std::string& manifest_dir);

struct EpochStats {
    int epoch = 0;        // 0-based
    double train_loss = 0;
    double val_loss = 0;
    double val_metric = 0; // accuracy (classification) or MAE (regression)
};

struct TrainResult {
    Model model; // weights of the best-validation-loss epoch
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

// Single deterministic optimization stream: seeded per-epoch shuffle,
// minibatch Adam, per-epoch validation, best-checkpoint selection (lowest
// validation loss; earliest epoch wins ties). Throws on non-finite loss,
// naming the epoch.
//
// `workers` fans the per-image forward/backward passes of each batch across
// threads. Batch gradients are per-image gradients summed in image order, so
// the result is bit-identical for every worker count.
TrainResult train(const LoadedDataset& data, const ModelConfig& model_config,
                  const TrainConfig& train_config, int workers = 1);

// Head outputs (n x units) for the given sample indices.
std::vector<float> predict_indices(const Model& model, const LoadedDataset& data,
                                   std::span<const int> indices);

void write_history_csv(const std::vector<EpochStats>& history, Task task,
                       const std::string& path);

} // namespace trajlab::nn
