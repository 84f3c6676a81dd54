#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajlab/dataset.hpp"

namespace trajlab::nn {

// The study's ConvNet-style CNN: four 3x3 same-padding conv layers with ReLU
// and 2x2 max pooling (filters 32/32/64/32), then a 32-unit ReLU dense layer
// and a task head (two sigmoid units for classification, one linear unit for
// regression). Parameters and activations are single precision.

struct ModelConfig {
    int input_size = 112;
    Task task = Task::classification;
    std::array<int, 4> conv_filters{32, 32, 64, 32};
    int dense_units = 32;

    int head_units() const { return task == Task::classification ? 2 : 1; }
    // Four 2x pools shrink each side by 16.
    int final_spatial() const { return input_size / 16; }
    int flatten_size() const { return final_spatial() * final_spatial() * conv_filters[3]; }
    void validate() const;
};

struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> value;
    std::vector<float> grad;

    int64_t numel() const { return static_cast<int64_t>(value.size()); }
};

class Model;

// Per-sample activation stash plus shared scratch; one instance serves any
// number of sequential forward/backward calls.
struct Workspace {
    explicit Workspace(const ModelConfig& config);

    std::vector<float> input;                      // S*S*1
    std::array<std::vector<float>, 4> conv_out;    // post-conv (ReLU'd in place)
    std::array<std::vector<float>, 4> pooled;
    std::array<std::vector<uint8_t>, 4> argmax;
    std::array<std::vector<float>, 4> gact;        // conv-out-sized gradients
    std::array<std::vector<float>, 4> gpool;
    std::vector<float> dense1_out;                 // ReLU'd in place
    std::vector<float> head_out;
    std::vector<float> gdense1;
    std::vector<float> ghead;
    std::vector<float> col;                        // im2col scratch (max size)
    std::vector<float> wrot;                       // rotated-kernel scratch
};

class Model;

// Per-sample gradient accumulator mirroring the parameter tensors. Batch
// gradients are defined as per-image gradients summed in image order, which
// makes training bit-identical for any worker count.
struct GradBuffers {
    std::vector<std::vector<float>> tensors;

    explicit GradBuffers(const Model& model);
    void zero();
};

class Model {
public:
    Model(const ModelConfig& config, uint64_t init_seed);

    const ModelConfig& config() const { return config_; }
    uint64_t init_seed() const { return init_seed_; }
    std::vector<ParamTensor>& params() { return params_; }
    const std::vector<ParamTensor>& params() const { return params_; }
    int64_t parameter_count() const;

    void zero_grads();

    // Forward one image (ws.input already filled, values scaled to [0,1]);
    // head outputs land in ws.head_out.
    void forward_one(Workspace& ws) const;
    // Backward from d(loss)/d(head output) in ws.ghead; accumulates into
    // `grads`. Requires the matching forward_one stash.
    void backward_one(Workspace& ws, GradBuffers& grads) const;
    // Elementwise add of a sample's gradients into the parameter grad
    // buffers; called in image order.
    void accumulate_grads(const GradBuffers& grads);

    // Stashless batched inference; outputs is n x head_units(). Batched and
    // sample-by-sample evaluation are bitwise identical by construction.
    void predict(std::span<const float> images, int n, float* outputs,
                 Workspace& ws) const;

private:
    ModelConfig config_;
    uint64_t init_seed_ = 0;
    std::vector<ParamTensor> params_; // conv{1..4}.{w,b}, dense1.{w,b}, head.{w,b}

    void initialize_weights();
};

// Loss of a batch of predictions (n x units, row-major) with targets of the
// same shape: per-unit binary cross-entropy (predictions clamped to
// [1e-7, 1-1e-7]) averaged over samples and units for classification, mean
// squared error for regression. grad is d(loss)/d(predictions). Training
// uses the float instantiation; gradient checks use double.
template <typename T>
struct LossResultT {
    double value = 0.0;
    std::vector<T> grad;
};
using LossResult = LossResultT<float>;

template <typename T>
LossResultT<T> loss_batch(Task task, std::span<const T> preds,
                          std::span<const T> targets, int n);

// Single-sample loss used by the training loop; grad_scale folds in the 1/n
// batch factor so per-sample accumulation matches the batch op bitwise.
template <typename T>
double loss_sample(Task task, std::span<const T> pred, std::span<const T> target,
                   std::span<T> grad_out, double grad_scale);

inline LossResult loss_batch(Task task, std::span<const float> preds,
                             std::span<const float> targets, int n) {
    return loss_batch<float>(task, preds, targets, n);
}

} // namespace trajlab::nn
