#include "trajlab/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace trajlab::nn {

namespace {

constexpr char kMagic[8] = {'T', 'L', 'A', 'B', 'C', 'K', 'P', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw std::runtime_error("load_checkpoint: truncated file " + path);
    return v;
}

} // namespace

void save_checkpoint(const Model& model, const CheckpointSeeds& seeds,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);

    out.write(kMagic, sizeof(kMagic));
    put<uint32_t>(out, 1); // version
    const auto& cfg = model.config();
    put<uint8_t>(out, cfg.task == Task::classification ? 0 : 1);
    put<uint32_t>(out, static_cast<uint32_t>(cfg.input_size));
    for (const int f : cfg.conv_filters) put<uint32_t>(out, static_cast<uint32_t>(f));
    put<uint32_t>(out, static_cast<uint32_t>(cfg.dense_units));
    put<uint64_t>(out, model.init_seed());
    put<uint64_t>(out, seeds.init_seed);
    put<uint64_t>(out, seeds.shuffle_seed);
    put<uint64_t>(out, seeds.split_seed);

    put<uint32_t>(out, static_cast<uint32_t>(model.params().size()));
    for (const auto& p : model.params()) {
        put<uint32_t>(out, static_cast<uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put<uint32_t>(out, static_cast<uint32_t>(p.shape.size()));
        for (const int d : p.shape) put<uint32_t>(out, static_cast<uint32_t>(d));
        put<uint64_t>(out, static_cast<uint64_t>(p.numel()));
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);

    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    const auto version = get<uint32_t>(in, path);
    if (version != 1)
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));

    ModelConfig cfg;
    cfg.task = get<uint8_t>(in, path) == 0 ? Task::classification : Task::regression;
    cfg.input_size = static_cast<int>(get<uint32_t>(in, path));
    for (auto& f : cfg.conv_filters) f = static_cast<int>(get<uint32_t>(in, path));
    cfg.dense_units = static_cast<int>(get<uint32_t>(in, path));
    const auto init_seed = get<uint64_t>(in, path);

    CheckpointSeeds seeds;
    seeds.init_seed = get<uint64_t>(in, path);
    seeds.shuffle_seed = get<uint64_t>(in, path);
    seeds.split_seed = get<uint64_t>(in, path);

    LoadedCheckpoint loaded{Model(cfg, init_seed), seeds};

    const auto n_tensors = get<uint32_t>(in, path);
    if (n_tensors != loaded.model.params().size())
        throw std::runtime_error("load_checkpoint: tensor count mismatch in " + path);
    for (auto& p : loaded.model.params()) {
        const auto name_len = get<uint32_t>(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len))
            throw std::runtime_error("load_checkpoint: truncated file " + path);
        if (name != p.name)
            throw std::runtime_error("load_checkpoint: unexpected tensor '" + name +
                                     "', wanted '" + p.name + "'");
        const auto ndim = get<uint32_t>(in, path);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get<uint32_t>(in, path));
        if (shape != p.shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
        const auto numel = get<uint64_t>(in, path);
        if (numel != static_cast<uint64_t>(p.numel()))
            throw std::runtime_error("load_checkpoint: element count mismatch for " + name);
        if (!in.read(reinterpret_cast<char*>(p.value.data()),
                     static_cast<std::streamsize>(p.value.size() * sizeof(float))))
            throw std::runtime_error("load_checkpoint: truncated tensor data in " + path);
    }
    return loaded;
}

} // namespace trajlab::nn
