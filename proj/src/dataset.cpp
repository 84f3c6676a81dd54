#include "trajlab/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "trajlab/image_io.hpp"
#include "trajlab/metrics.hpp"

namespace fs = std::filesystem;

namespace trajlab {

const char* to_string(Task t) {
    return t == Task::classification ? "classification" : "regression";
}

Task task_from_string(const std::string& s) {
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    throw std::invalid_argument("unknown task: '" + s + "'");
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "none";
    }
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "none") return Split::none;
    throw std::invalid_argument("unknown split tag: '" + s + "'");
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void render_cohort_images(const TrajectoryCohort& cohort, int64_t id_offset,
                          const RenderConfig& config, const fs::path& dir,
                          int jobs) {
    auto worker = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            const auto& traj = cohort.trajectories[i];
            const GrayImage img = render(traj.points, config);
            const auto name = "img_" + std::to_string(traj.id + id_offset) + ".pgm";
            write_pgm(img, (dir / name).string());
        }
    };
    const size_t n = cohort.trajectories.size();
    if (jobs <= 1 || n < 2 * static_cast<size_t>(jobs)) {
        worker(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const size_t chunk = (n + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
        const size_t begin = j * chunk;
        const size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
}

DatasetManifest build_dataset(Task task, const RenderConfig& config,
                              const DatasetSeeds& seeds,
                              const std::string& out_dir,
                              const DatasetBuildOptions& opt) {
    config.validate();
    if (opt.per_class < 1)
        throw std::invalid_argument("build_dataset: per_class must be >= 1");

    const fs::path root(out_dir);
    const fs::path manifest_path = root / "manifest.csv";

    if (opt.reuse_existing && fs::exists(manifest_path)) {
        DatasetManifest existing = read_manifest(manifest_path.string());
        if (existing.task == task &&
            existing.records.size() == 2 * static_cast<size_t>(opt.per_class) &&
            !existing.records.empty() && existing.records.front().condition == config)
            return existing;
    }

    const MotilityParams params_a{opt.memory_class_a, opt.sigma, opt.steps};
    const MotilityParams params_b{opt.memory_class_b, opt.sigma, opt.steps};
    const auto cohort_a = generate_cohort(params_a, opt.per_class, seeds.cohort_a, opt.jobs);
    const auto cohort_b = generate_cohort(params_b, opt.per_class, seeds.cohort_b, opt.jobs);

    return build_dataset_from_cohorts(task, cohort_a, cohort_b, config, out_dir, opt.jobs);
}

} // namespace

DatasetManifest build_dataset_from_cohorts(Task task, const TrajectoryCohort& cohort_a,
                                           const TrajectoryCohort& cohort_b,
                                           const RenderConfig& config,
                                           const std::string& out_dir, int jobs) {
    config.validate();
    if (cohort_a.size() != cohort_b.size() || cohort_a.size() == 0)
        throw std::invalid_argument("build_dataset_from_cohorts: cohorts must be "
                                    "non-empty and equally sized");

    const fs::path root(out_dir);
    fs::create_directories(root / config.condition_tag());
    const int64_t per_class = static_cast<int64_t>(cohort_a.size());

    write_cohort_csv(cohort_a, (root / "cohort_a.csv").string());
    write_cohort_csv(cohort_b, (root / "cohort_b.csv").string());

    const fs::path img_dir = root / config.condition_tag();
    render_cohort_images(cohort_a, 0, config, img_dir, jobs);
    render_cohort_images(cohort_b, per_class, config, img_dir, jobs);

    DatasetManifest manifest;
    manifest.task = task;
    manifest.seeds = {cohort_a.base_seed, cohort_b.base_seed, 0};
    manifest.records.reserve(2 * static_cast<size_t>(per_class));

    auto add_records = [&](const TrajectoryCohort& cohort, int64_t id_offset,
                           char class_label) {
        for (const auto& traj : cohort.trajectories) {
            SampleRecord rec;
            const int64_t gid = traj.id + id_offset;
            rec.image_path = config.condition_tag() + "/img_" + std::to_string(gid) + ".pgm";
            rec.traj_id = gid;
            rec.class_label = class_label;
            rec.value_label = directionality(traj);
            rec.split = Split::none;
            rec.condition = config;
            manifest.records.push_back(std::move(rec));
        }
    };
    add_records(cohort_a, 0, 'A');
    add_records(cohort_b, per_class, 'B');

    // Written last: a readable manifest marks the build complete.
    write_manifest(manifest, (root / "manifest.csv").string());
    return manifest;
}

DatasetManifest build_classification_dataset(const RenderConfig& config,
                                             const DatasetSeeds& seeds,
                                             const std::string& out_dir,
                                             const DatasetBuildOptions& opt) {
    return build_dataset(Task::classification, config, seeds, out_dir, opt);
}

DatasetManifest build_regression_dataset(const RenderConfig& config,
                                         const DatasetSeeds& seeds,
                                         const std::string& out_dir,
                                         const DatasetBuildOptions& opt) {
    return build_dataset(Task::regression, config, seeds, out_dir, opt);
}

DatasetManifest assign_splits(const DatasetManifest& manifest, uint64_t split_seed) {
    const size_t n = manifest.records.size();
    if (n < 10)
        throw std::invalid_argument("assign_splits: need at least 10 records, got " +
                                    std::to_string(n));

    DatasetManifest out = manifest;
    out.seeds.split_seed = split_seed;

    auto shuffle_indices = [](std::vector<size_t>& idx, Rng& rng) {
        for (size_t i = idx.size() - 1; i > 0; --i) {
            const size_t j = static_cast<size_t>(rng.next_below(i + 1));
            std::swap(idx[i], idx[j]);
        }
    };
    auto partition = [&](const std::vector<size_t>& idx) {
        const size_t n_train = idx.size() * 8 / 10;
        const size_t n_val = idx.size() / 10;
        for (size_t k = 0; k < idx.size(); ++k) {
            Split s = Split::test;
            if (k < n_train) s = Split::train;
            else if (k < n_train + n_val) s = Split::val;
            out.records[idx[k]].split = s;
        }
    };

    if (manifest.task == Task::classification) {
        std::vector<size_t> a, b;
        for (size_t i = 0; i < n; ++i)
            (manifest.records[i].class_label == 'A' ? a : b).push_back(i);
        if (a.size() != b.size())
            throw std::invalid_argument("assign_splits: class counts differ (" +
                                        std::to_string(a.size()) + " vs " +
                                        std::to_string(b.size()) + ")");
        Rng rng_a(derive_seed(split_seed, 0));
        Rng rng_b(derive_seed(split_seed, 1));
        shuffle_indices(a, rng_a);
        shuffle_indices(b, rng_b);
        partition(a);
        partition(b);
    } else {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        Rng rng(derive_seed(split_seed, 0));
        shuffle_indices(idx, rng);
        partition(idx);
    }
    return out;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_manifest: cannot open " + path);

    char meta[256];
    std::snprintf(meta, sizeof(meta),
                  "# trajlab-manifest task=%s cohort_a=%" PRIu64
                  " cohort_b=%" PRIu64 " split_seed=%" PRIu64 "\n",
                  to_string(manifest.task), manifest.seeds.cohort_a,
                  manifest.seeds.cohort_b, manifest.seeds.split_seed);
    out << meta << "image_path,traj_id,label,split,size,thickness,pattern,edge_mode\n";

    for (const auto& rec : manifest.records) {
        out << rec.image_path << ',' << rec.traj_id << ',';
        if (manifest.task == Task::classification)
            out << rec.class_label;
        else
            out << format_double(rec.value_label);
        out << ',' << to_string(rec.split) << ',' << rec.condition.image_size
            << ',' << rec.condition.thickness << ','
            << to_string(rec.condition.pattern) << ','
            << to_string(rec.condition.edge_mode) << '\n';
    }
    if (!out)
        throw std::runtime_error("write_manifest: write failed for " + path);
}

DatasetManifest read_manifest(const std::string& path, bool validate_images) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_manifest: cannot open " + path);

    DatasetManifest manifest;
    std::string line;
    size_t line_no = 0;

    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty manifest");
    ++line_no;
    {
        char task_buf[32] = {};
        uint64_t a = 0, b = 0, s = 0;
        if (std::sscanf(line.c_str(),
                        "# trajlab-manifest task=%31s cohort_a=%" SCNu64
                        " cohort_b=%" SCNu64 " split_seed=%" SCNu64,
                        task_buf, &a, &b, &s) != 4)
            throw std::runtime_error(path + ":1: missing manifest metadata line");
        manifest.task = task_from_string(task_buf);
        manifest.seeds = {a, b, s};
    }

    if (!std::getline(in, line))
        throw std::runtime_error(path + ": missing header");
    ++line_no;
    if (line != "image_path,traj_id,label,split,size,thickness,pattern,edge_mode")
        throw std::runtime_error(path + ":2: bad header: '" + line + "'");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string f[8];
        for (int i = 0; i < 8; ++i) {
            const bool last = i == 7;
            if (!(last ? static_cast<bool>(std::getline(row, f[i]))
                       : static_cast<bool>(std::getline(row, f[i], ','))))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 8 fields");
        }

        SampleRecord rec;
        rec.image_path = f[0];
        try {
            rec.traj_id = std::stoll(f[1]);
            rec.condition.image_size = std::stoi(f[4]);
            rec.condition.thickness = std::stoi(f[5]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": non-numeric field");
        }
        if (manifest.task == Task::classification) {
            if (f[2] != "A" && f[2] != "B")
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": class label must be A or B, got '" + f[2] + "'");
            rec.class_label = f[2][0];
        } else {
            try {
                rec.value_label = std::stod(f[2]);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": non-numeric regression label '" + f[2] + "'");
            }
            if (!(rec.value_label >= 0.0 && rec.value_label <= 1.0))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": regression label out of [0,1]: " + f[2]);
        }
        try {
            rec.split = split_from_string(f[3]);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        rec.condition.pattern = line_pattern_from_string(f[6]);
        rec.condition.edge_mode = edge_mode_from_string(f[7]);
        manifest.records.push_back(std::move(rec));
    }

    if (validate_images) {
        const fs::path base = fs::path(path).parent_path();
        std::string missing;
        size_t missing_count = 0;
        for (const auto& rec : manifest.records) {
            if (!fs::exists(base / rec.image_path)) {
                ++missing_count;
                if (missing_count <= 10) missing += "\n  " + rec.image_path;
            }
        }
        if (missing_count > 0)
            throw std::runtime_error("read_manifest: " + std::to_string(missing_count) +
                                     " referenced image(s) missing:" + missing);
    }
    return manifest;
}

} // namespace trajlab
