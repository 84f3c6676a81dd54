#include "trajlab/nn/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "trajlab/nn/kernels.hpp"
#include "trajlab/rng.hpp"

namespace trajlab::nn {

void ModelConfig::validate() const {
    if (input_size < 16 || input_size % 16 != 0)
        throw std::invalid_argument("ModelConfig: input_size must be a positive multiple of 16");
    if (conv_filters != std::array<int, 4>{32, 32, 64, 32})
        throw std::invalid_argument("ModelConfig: conv filter list is fixed to 32/32/64/32");
    if (dense_units != 32)
        throw std::invalid_argument("ModelConfig: dense_units is fixed to 32");
}

namespace {

int stage_channels_in(const ModelConfig& cfg, int s) {
    return s == 0 ? 1 : cfg.conv_filters[s - 1];
}

int stage_spatial(const ModelConfig& cfg, int s) {
    return cfg.input_size >> s;
}

} // namespace

Workspace::Workspace(const ModelConfig& config) {
    config.validate();
    input.resize(static_cast<size_t>(config.input_size) * config.input_size);
    size_t max_col = 0;
    for (int s = 0; s < 4; ++s) {
        const size_t sp = static_cast<size_t>(stage_spatial(config, s));
        const size_t f = static_cast<size_t>(config.conv_filters[s]);
        const size_t cin = static_cast<size_t>(stage_channels_in(config, s));
        conv_out[s].resize(sp * sp * f);
        gact[s].resize(sp * sp * f);
        pooled[s].resize(sp / 2 * (sp / 2) * f);
        gpool[s].resize(pooled[s].size());
        argmax[s].resize(pooled[s].size());
        max_col = std::max(max_col,
                           conv3x3_scratch_elems(static_cast<int>(sp), static_cast<int>(sp),
                                                 static_cast<int>(cin), static_cast<int>(f),
                                                 sizeof(float)));
    }
    dense1_out.resize(static_cast<size_t>(config.dense_units));
    gdense1.resize(dense1_out.size());
    head_out.resize(static_cast<size_t>(config.head_units()));
    ghead.resize(head_out.size());
    col.resize(max_col);
    wrot.resize(9ull * 64 * 64);
}

Model::Model(const ModelConfig& config, uint64_t init_seed)
    : config_(config), init_seed_(init_seed) {
    config_.validate();

    auto add_param = [&](const std::string& name, std::vector<int> shape) {
        int64_t numel = 1;
        for (const int d : shape) numel *= d;
        ParamTensor t;
        t.name = name;
        t.shape = std::move(shape);
        t.value.assign(static_cast<size_t>(numel), 0.0f);
        t.grad.assign(static_cast<size_t>(numel), 0.0f);
        params_.push_back(std::move(t));
    };

    for (int s = 0; s < 4; ++s) {
        const int cin = stage_channels_in(config_, s);
        const int f = config_.conv_filters[s];
        add_param("conv" + std::to_string(s + 1) + ".w", {3, 3, cin, f});
        add_param("conv" + std::to_string(s + 1) + ".b", {f});
    }
    add_param("dense1.w", {config_.flatten_size(), config_.dense_units});
    add_param("dense1.b", {config_.dense_units});
    add_param("head.w", {config_.dense_units, config_.head_units()});
    add_param("head.b", {config_.head_units()});

    initialize_weights();
}

void Model::initialize_weights() {
    // He-style scaled normal, std = sqrt(2 / fan_in); biases stay zero. Fill
    // order is fixed (conv1..conv4, dense1, head) so weights are a pure
    // function of the seed.
    Rng rng(init_seed_);
    auto fill = [&](ParamTensor& t, int fan_in) {
        const double stddev = std::sqrt(2.0 / fan_in);
        for (auto& v : t.value) v = static_cast<float>(rng.normal(stddev));
    };
    for (int s = 0; s < 4; ++s)
        fill(params_[static_cast<size_t>(2 * s)], 9 * stage_channels_in(config_, s));
    fill(params_[8], config_.flatten_size());
    fill(params_[10], config_.dense_units);
}

int64_t Model::parameter_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
}

void Model::zero_grads() {
    for (auto& p : params_)
        std::memset(p.grad.data(), 0, p.grad.size() * sizeof(float));
}

GradBuffers::GradBuffers(const Model& model) {
    for (const auto& p : model.params())
        tensors.emplace_back(p.value.size(), 0.0f);
}

void GradBuffers::zero() {
    for (auto& t : tensors)
        std::memset(t.data(), 0, t.size() * sizeof(float));
}

void Model::accumulate_grads(const GradBuffers& grads) {
    for (size_t t = 0; t < params_.size(); ++t) {
        float* dst = params_[t].grad.data();
        const float* src = grads.tensors[t].data();
        const size_t n = params_[t].grad.size();
        for (size_t i = 0; i < n; ++i) dst[i] += src[i];
    }
}

void Model::forward_one(Workspace& ws) const {
    const float* x = ws.input.data();
    for (int s = 0; s < 4; ++s) {
        const int sp = stage_spatial(config_, s);
        const int cin = stage_channels_in(config_, s);
        const int f = config_.conv_filters[s];
        conv3x3_forward(x, sp, sp, cin, params_[static_cast<size_t>(2 * s)].value.data(),
                        params_[static_cast<size_t>(2 * s + 1)].value.data(), f,
                        ws.conv_out[s].data(), ws.col.data());
        relu_inplace(ws.conv_out[s].data(), static_cast<int64_t>(ws.conv_out[s].size()));
        maxpool2x2_forward(ws.conv_out[s].data(), sp, sp, f, ws.pooled[s].data(),
                           ws.argmax[s].data());
        x = ws.pooled[s].data();
    }

    dense_forward(ws.pooled[3].data(), params_[8].value.data(), params_[9].value.data(),
                  config_.flatten_size(), config_.dense_units, ws.dense1_out.data());
    relu_inplace(ws.dense1_out.data(), config_.dense_units);
    dense_forward(ws.dense1_out.data(), params_[10].value.data(), params_[11].value.data(),
                  config_.dense_units, config_.head_units(), ws.head_out.data());
    if (config_.task == Task::classification)
        sigmoid_inplace(ws.head_out.data(), config_.head_units());
}

void Model::backward_one(Workspace& ws, GradBuffers& grads) const {
    const int units = config_.head_units();

    // Head: sigmoid backward folds into the incoming gradient.
    if (config_.task == Task::classification) {
        for (int u = 0; u < units; ++u) {
            const float y = ws.head_out[static_cast<size_t>(u)];
            ws.ghead[static_cast<size_t>(u)] *= y * (1.0f - y);
        }
    }
    dense_backward(ws.dense1_out.data(), params_[10].value.data(), ws.ghead.data(),
                   config_.dense_units, units, ws.gdense1.data(),
                   grads.tensors[10].data(), grads.tensors[11].data());
    relu_backward_inplace(ws.dense1_out.data(), ws.gdense1.data(), config_.dense_units);
    dense_backward(ws.pooled[3].data(), params_[8].value.data(), ws.gdense1.data(),
                   config_.flatten_size(), config_.dense_units, ws.gpool[3].data(),
                   grads.tensors[8].data(), grads.tensors[9].data());

    for (int s = 3; s >= 0; --s) {
        const int sp = stage_spatial(config_, s);
        const int cin = stage_channels_in(config_, s);
        const int f = config_.conv_filters[s];
        maxpool2x2_backward(ws.gpool[s].data(), sp, sp, f, ws.argmax[s].data(),
                            ws.gact[s].data());
        relu_backward_inplace(ws.conv_out[s].data(), ws.gact[s].data(),
                              static_cast<int64_t>(ws.gact[s].size()));
        const float* in = s == 0 ? ws.input.data() : ws.pooled[s - 1].data();
        float* gin = s == 0 ? nullptr : ws.gpool[s - 1].data(); // input grad unused
        conv3x3_backward(in, sp, sp, cin, params_[static_cast<size_t>(2 * s)].value.data(),
                         f, ws.gact[s].data(), gin,
                         grads.tensors[static_cast<size_t>(2 * s)].data(),
                         grads.tensors[static_cast<size_t>(2 * s + 1)].data(),
                         ws.col.data(), ws.wrot.data());
    }
}

void Model::predict(std::span<const float> images, int n, float* outputs,
                    Workspace& ws) const {
    const size_t img_len = static_cast<size_t>(config_.input_size) * config_.input_size;
    if (images.size() != img_len * static_cast<size_t>(n))
        throw std::invalid_argument("predict: image buffer does not match input_size");
    const int units = config_.head_units();
    for (int i = 0; i < n; ++i) {
        std::memcpy(ws.input.data(), images.data() + img_len * static_cast<size_t>(i),
                    img_len * sizeof(float));
        forward_one(ws);
        std::memcpy(outputs + static_cast<int64_t>(i) * units, ws.head_out.data(),
                    static_cast<size_t>(units) * sizeof(float));
    }
}

template <typename T>
double loss_sample(Task task, std::span<const T> pred, std::span<const T> target,
                   std::span<T> grad_out, double grad_scale) {
    const size_t units = pred.size();
    double value = 0.0;
    if (task == Task::classification) {
        constexpr double clamp_lo = 1e-7;
        constexpr double clamp_hi = 1.0 - 1e-7;
        for (size_t u = 0; u < units; ++u) {
            const double y = target[u];
            const double raw = pred[u];
            if (!std::isfinite(raw) || !std::isfinite(y))
                throw std::runtime_error("loss: non-finite input");
            const double p = std::min(std::max(raw, clamp_lo), clamp_hi);
            value += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
            // Gradient through the clamp is zero outside its range.
            double g = 0.0;
            if (raw > clamp_lo && raw < clamp_hi)
                g = (-y / p + (1.0 - y) / (1.0 - p)) / static_cast<double>(units);
            grad_out[u] = static_cast<T>(g * grad_scale);
        }
        value /= static_cast<double>(units);
    } else {
        for (size_t u = 0; u < units; ++u) {
            const double raw = pred[u];
            if (!std::isfinite(raw) || !std::isfinite(static_cast<double>(target[u])))
                throw std::runtime_error("loss: non-finite input");
            const double d = raw - target[u];
            value += d * d;
            grad_out[u] = static_cast<T>(2.0 * d * grad_scale);
        }
    }
    return value;
}

template <typename T>
LossResultT<T> loss_batch(Task task, std::span<const T> preds,
                          std::span<const T> targets, int n) {
    if (n <= 0) throw std::invalid_argument("loss_batch: empty batch");
    if (preds.size() != targets.size() || preds.size() % static_cast<size_t>(n) != 0)
        throw std::invalid_argument("loss_batch: shape mismatch");
    const size_t units = preds.size() / static_cast<size_t>(n);

    LossResultT<T> out;
    out.grad.assign(preds.size(), T(0));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const size_t off = static_cast<size_t>(i) * units;
        sum += loss_sample<T>(task, preds.subspan(off, units),
                              targets.subspan(off, units),
                              std::span<T>(out.grad).subspan(off, units),
                              1.0 / static_cast<double>(n));
    }
    out.value = sum / static_cast<double>(n);
    return out;
}

template double loss_sample<float>(Task, std::span<const float>,
                                   std::span<const float>, std::span<float>, double);
template double loss_sample<double>(Task, std::span<const double>,
                                    std::span<const double>, std::span<double>, double);
template LossResultT<float> loss_batch<float>(Task, std::span<const float>,
                                              std::span<const float>, int);
template LossResultT<double> loss_batch<double>(Task, std::span<const double>,
                                                std::span<const double>, int);

} // namespace trajlab::nn
