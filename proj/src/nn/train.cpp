#include "trajlab/nn/train.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <thread>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "trajlab/image_io.hpp"
#include "trajlab/nn/kernels.hpp"
#include "trajlab/rng.hpp"

namespace trajlab::nn {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

AdamState::AdamState(const Model& model) {
    for (const auto& p : model.params()) {
        m.emplace_back(p.value.size(), 0.0f);
        v.emplace_back(p.value.size(), 0.0f);
    }
}

void adam_update(Model& model, AdamState& state, const TrainConfig& config) {
    ++state.step;
    const AdamParams<float> hp{static_cast<float>(config.learning_rate),
                               static_cast<float>(config.beta1),
                               static_cast<float>(config.beta2),
                               static_cast<float>(config.epsilon)};
    auto& params = model.params();
    for (size_t t = 0; t < params.size(); ++t)
        adam_update_array(params[t].value.data(), params[t].grad.data(),
                          state.m[t].data(), state.v[t].data(),
                          params[t].numel(), state.step, hp);
}

std::span<const int> LoadedDataset::split_indices(Split s) const {
    switch (s) {
        case Split::train: return train_idx;
        case Split::val: return val_idx;
        case Split::test: return test_idx;
        default: throw std::invalid_argument("split_indices: no such split");
    }
}

void LoadedDataset::fill_target(int sample, std::span<float> target) const {
    const auto& rec = samples[static_cast<size_t>(sample)];
    if (task == Task::classification) {
        target[0] = rec.class_label == 'A' ? 1.0f : 0.0f;
        target[1] = rec.class_label == 'A' ? 0.0f : 1.0f;
    } else {
        target[0] = static_cast<float>(rec.value_label);
    }
}

LoadedDataset load_dataset(const DatasetManifest& manifest,
                           const std::string& manifest_dir) {
    LoadedDataset data;
    data.task = manifest.task;
    if (manifest.records.empty())
        throw std::runtime_error("load_dataset: manifest has no records");

    const std::filesystem::path base(manifest_dir);
    data.samples.reserve(manifest.records.size());
    for (size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& rec = manifest.records[i];
        const GrayImage img = read_pgm((base / rec.image_path).string());
        if (img.width != img.height)
            throw std::runtime_error("load_dataset: non-square image " + rec.image_path);
        if (data.image_size == 0) data.image_size = img.width;
        if (img.width != data.image_size)
            throw std::runtime_error("load_dataset: mixed image sizes in manifest");

        LoadedSample s;
        s.pixels = img.pixels;
        s.class_label = rec.class_label;
        s.value_label = rec.value_label;
        data.samples.push_back(std::move(s));

        const int idx = static_cast<int>(i);
        switch (rec.split) {
            case Split::train: data.train_idx.push_back(idx); break;
            case Split::val: data.val_idx.push_back(idx); break;
            case Split::test: data.test_idx.push_back(idx); break;
            default: break;
        }
    }
    return data;
}

namespace {

void fill_input(const LoadedDataset& data, int sample, std::span<float> out) {
    const auto& px = data.samples[static_cast<size_t>(sample)].pixels;
    constexpr float inv255 = 1.0f / 255.0f;
    for (size_t i = 0; i < px.size(); ++i)
        out[i] = static_cast<float>(px[i]) * inv255;
}

// Static fan-out over [0, n): worker w handles i % workers == w. Each index's
// work is independent, so the schedule never affects values.
void parallel_indices(size_t n, int workers, const std::function<void(int, size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(0, i);
        return;
    }
    const int w = std::min<int>(workers, static_cast<int>(n));
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex mu;
    for (int t = 1; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (size_t i = static_cast<size_t>(t); i < n; i += static_cast<size_t>(w))
                    fn(t, i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    try {
        for (size_t i = 0; i < n; i += static_cast<size_t>(w)) fn(0, i);
    } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Forward pass over `indices`, returning predictions (n x units).
std::vector<float> forward_indices(const Model& model, const LoadedDataset& data,
                                   std::span<const int> indices,
                                   std::vector<Workspace>& ws_pool) {
    const int units = model.config().head_units();
    std::vector<float> preds(indices.size() * static_cast<size_t>(units));
    parallel_indices(indices.size(), static_cast<int>(ws_pool.size()),
                     [&](int worker, size_t i) {
                         Workspace& ws = ws_pool[static_cast<size_t>(worker)];
                         fill_input(data, indices[i], ws.input);
                         model.forward_one(ws);
                         std::copy(ws.head_out.begin(), ws.head_out.end(),
                                   preds.begin() + static_cast<int64_t>(i) * units);
                     });
    return preds;
}

std::vector<float> gather_targets(const LoadedDataset& data,
                                  std::span<const int> indices, int units) {
    std::vector<float> targets(indices.size() * static_cast<size_t>(units));
    for (size_t i = 0; i < indices.size(); ++i)
        data.fill_target(indices[i],
                         std::span<float>(targets).subspan(i * static_cast<size_t>(units),
                                                           static_cast<size_t>(units)));
    return targets;
}

double split_metric(Task task, std::span<const float> preds,
                    std::span<const float> targets, int units, size_t n) {
    if (task == Task::classification) {
        size_t correct = 0;
        for (size_t i = 0; i < n; ++i) {
            const size_t off = i * static_cast<size_t>(units);
            const int pred_class = preds[off] >= preds[off + 1] ? 0 : 1;
            const int true_class = targets[off] >= 0.5f ? 0 : 1;
            if (pred_class == true_class) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(n);
    }
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i)
        sum += std::abs(static_cast<double>(preds[i]) - static_cast<double>(targets[i]));
    return sum / static_cast<double>(n);
}

} // namespace

TrainResult train(const LoadedDataset& data, const ModelConfig& model_config,
                  const TrainConfig& train_config, int workers) {
    model_config.validate();
    train_config.validate();
    if (data.train_idx.empty()) throw std::runtime_error("train: empty training split");
    if (data.val_idx.empty()) throw std::runtime_error("train: empty validation split");
    if (data.image_size != model_config.input_size)
        throw std::runtime_error("train: dataset image size " +
                                 std::to_string(data.image_size) +
                                 " does not match model input size " +
                                 std::to_string(model_config.input_size));
    workers = std::max(1, workers);

    Model model(model_config, train_config.init_seed);
    AdamState adam(model);

    std::vector<Workspace> ws_pool;
    for (int w = 0; w < workers; ++w) ws_pool.emplace_back(model_config);

    const int units = model_config.head_units();
    std::vector<int> order(data.train_idx.begin(), data.train_idx.end());

    // One gradient sink and loss slot per batch position; the reduction over
    // them runs in image order.
    std::vector<GradBuffers> sinks;
    for (int b = 0; b < train_config.batch_size; ++b) sinks.emplace_back(model);
    std::vector<double> sample_losses(static_cast<size_t>(train_config.batch_size));

    TrainResult result{model, {}, 0};
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        // Seeded Fisher-Yates shuffle, reseeded per epoch.
        Rng shuffle_rng(derive_seed(train_config.shuffle_seed, static_cast<uint64_t>(epoch)));
        for (size_t i = order.size() - 1; i > 0; --i) {
            const size_t j = static_cast<size_t>(shuffle_rng.next_below(i + 1));
            std::swap(order[i], order[j]);
        }

        double loss_sum = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(train_config.batch_size)) {
            const size_t bn = std::min(static_cast<size_t>(train_config.batch_size),
                                       order.size() - start);

            parallel_indices(bn, workers, [&](int worker, size_t b) {
                Workspace& ws = ws_pool[static_cast<size_t>(worker)];
                const int sample = order[start + b];
                fill_input(data, sample, ws.input);
                model.forward_one(ws);
                std::vector<float> target(static_cast<size_t>(units));
                data.fill_target(sample, target);
                sample_losses[b] = loss_sample<float>(data.task, ws.head_out, target,
                                                      ws.ghead,
                                                      1.0 / static_cast<double>(bn));
                sinks[b].zero();
                model.backward_one(ws, sinks[b]);
            });

            model.zero_grads();
            double batch_loss = 0.0;
            for (size_t b = 0; b < bn; ++b) {
                batch_loss += sample_losses[b];
                model.accumulate_grads(sinks[b]);
            }
            batch_loss /= static_cast<double>(bn);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch));
            loss_sum += batch_loss * static_cast<double>(bn);
            seen += bn;
            adam_update(model, adam, train_config);
        }

        const auto val_preds = forward_indices(model, data, data.val_idx, ws_pool);
        const auto val_targets = gather_targets(data, data.val_idx, units);
        const auto val_loss = loss_batch(data.task, val_preds, val_targets,
                                         static_cast<int>(data.val_idx.size()));

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(seen);
        stats.val_loss = val_loss.value;
        stats.val_metric = split_metric(data.task, val_preds, val_targets, units,
                                        data.val_idx.size());
        result.history.push_back(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            result.best_epoch = epoch;
            result.model = model;
        }
    }
    return result;
}

std::vector<float> predict_indices(const Model& model, const LoadedDataset& data,
                                   std::span<const int> indices) {
    std::vector<Workspace> ws_pool;
    ws_pool.emplace_back(model.config());
    return forward_indices(model, data, indices, ws_pool);
}

void write_history_csv(const std::vector<EpochStats>& history, Task task,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "epoch,train_loss,val_loss,"
        << (task == Task::classification ? "val_accuracy" : "val_mae") << "\n";
    char buf[160];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch,
                      e.train_loss, e.val_loss, e.val_metric);
        out << buf;
    }
}

} // namespace trajlab::nn
