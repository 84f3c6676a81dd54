#include "trajlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "trajlab/metrics.hpp"
#include "trajlab/nn/checkpoint.hpp"
#include "trajlab/nn/kernels.hpp"
#include "trajlab/nn/train.hpp"

namespace fs = std::filesystem;

namespace trajlab {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc: scores/labels length mismatch");

    std::vector<std::pair<double, int>> items(scores.size());
    size_t n_pos = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        items[i] = {scores[i], labels[i] != 0 ? 1 : 0};
        n_pos += static_cast<size_t>(items[i].second);
    }
    const size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auc: need at least one positive and one negative label");

    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Sweep ascending score groups; ties contribute half weight.
    double concordant = 0.0;
    double tied = 0.0;
    size_t neg_below = 0;
    size_t i = 0;
    while (i < items.size()) {
        size_t j = i;
        size_t pos_here = 0, neg_here = 0;
        while (j < items.size() && items[j].first == items[i].first) {
            pos_here += static_cast<size_t>(items[j].second);
            neg_here += 1 - static_cast<size_t>(items[j].second);
            ++j;
        }
        concordant += static_cast<double>(pos_here) * static_cast<double>(neg_below);
        tied += static_cast<double>(pos_here) * static_cast<double>(neg_here);
        neg_below += neg_here;
        i = j;
    }
    return (concordant + 0.5 * tied) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double mae(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || predictions.empty())
        throw std::invalid_argument("mae: need equal non-empty inputs");
    double sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i)
        sum += std::abs(predictions[i] - targets[i]);
    return sum / static_cast<double>(predictions.size());
}

double accuracy(std::span<const double> unit0, std::span<const double> unit1,
                std::span<const int> label_index) {
    if (unit0.size() != unit1.size() || unit0.size() != label_index.size() || unit0.empty())
        throw std::invalid_argument("accuracy: need equal non-empty inputs");
    size_t correct = 0;
    for (size_t i = 0; i < unit0.size(); ++i) {
        const int pred = unit0[i] >= unit1[i] ? 0 : 1;
        if (pred == label_index[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(unit0.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

int RunOptions::per_class() const {
    if (!(scale > 0.0 && scale <= 1.0))
        throw std::invalid_argument("RunOptions: scale must be in (0,1]");
    const int n = static_cast<int>(std::lround(1000.0 * scale));
    return std::max(n, 10);
}

std::vector<RenderConfig> SweepGrid::conditions() const {
    std::vector<RenderConfig> out;
    for (const auto pattern : patterns)
        for (const auto edge : edges)
            for (const int size : sizes)
                for (const int thickness : thicknesses) {
                    RenderConfig cfg;
                    cfg.image_size = size;
                    cfg.thickness = thickness;
                    cfg.pattern = pattern;
                    cfg.edge_mode = edge;
                    out.push_back(cfg);
                }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* metric_name(Task task) {
    return task == Task::classification ? "auc" : "mae";
}

fs::path condition_dir(const std::string& state_dir, Task task,
                       const RenderConfig& condition) {
    return fs::path(state_dir) / to_string(task) / condition.condition_tag();
}

// run<r>.csv holds "run,metric,value"; written atomically via rename so a
// killed process never leaves a readable-but-wrong file.
std::optional<double> read_run_metric(const fs::path& file, Task task) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    std::string header, line;
    if (!std::getline(in, header) || header != "run,metric,value") return std::nullopt;
    if (!std::getline(in, line)) return std::nullopt;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) return std::nullopt;
    if (line.substr(c1 + 1, c2 - c1 - 1) != metric_name(task)) return std::nullopt;
    try {
        return std::stod(line.substr(c2 + 1));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void write_run_metric(const fs::path& file, Task task, int run, double value) {
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << "run,metric,value\n"
            << run << ',' << metric_name(task) << ',' << format_double(value) << '\n';
    }
    fs::rename(tmp, file);
}

double evaluate_test_metric(const nn::Model& model, const nn::LoadedDataset& data) {
    const auto preds = nn::predict_indices(model, data, data.test_idx);
    const size_t n = data.test_idx.size();
    if (data.task == Task::classification) {
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (size_t i = 0; i < n; ++i) {
            scores[i] = preds[2 * i]; // class-A unit
            labels[i] = data.samples[static_cast<size_t>(data.test_idx[i])].class_label == 'A';
        }
        return auc(scores, labels);
    }
    std::vector<double> p(n), t(n);
    for (size_t i = 0; i < n; ++i) {
        p[i] = preds[i];
        t[i] = data.samples[static_cast<size_t>(data.test_idx[i])].value_label;
    }
    return mae(p, t);
}

struct RunJob {
    double value = 0.0;
};

double execute_run(const RenderConfig& condition, Task task, const StudySeeds& seeds,
                   const RunOptions& options, const DatasetManifest& manifest,
                   const fs::path& cond_dir, int run) {
    DatasetManifest with_splits = assign_splits(manifest, seeds.split(run));
    const auto data = nn::load_dataset(with_splits, (cond_dir / "data").string());

    nn::ModelConfig model_cfg;
    model_cfg.input_size = condition.image_size;
    model_cfg.task = task;

    nn::TrainConfig train_cfg;
    train_cfg.epochs = options.epochs;
    train_cfg.init_seed = seeds.init(run);
    train_cfg.shuffle_seed = seeds.shuffle(run);

    auto result = nn::train(data, model_cfg, train_cfg, options.jobs);

    nn::save_checkpoint(result.model,
                        {train_cfg.init_seed, train_cfg.shuffle_seed, seeds.split(run)},
                        (cond_dir / ("checkpoint_run" + std::to_string(run) + ".bin")).string());
    nn::write_history_csv(result.history, task,
                          (cond_dir / ("history_run" + std::to_string(run) + ".csv")).string());

    return evaluate_test_metric(result.model, data);
}

} // namespace

ConditionResult run_condition(const RenderConfig& condition, Task task,
                              const StudySeeds& seeds, const RunOptions& options) {
    if (options.state_dir.empty())
        throw std::invalid_argument("run_condition: state_dir is required");
    if (options.n_runs < 1)
        throw std::invalid_argument("run_condition: n_runs must be >= 1");
    condition.validate();

    const fs::path cond_dir = condition_dir(options.state_dir, task, condition);
    fs::create_directories(cond_dir);

    ConditionResult result;
    result.condition = condition;
    result.task = task;
    result.run_values.assign(static_cast<size_t>(options.n_runs), 0.0);

    // Reuse any completed runs; an interrupted cell resumes from the rest.
    std::vector<int> pending;
    for (int r = 0; r < options.n_runs; ++r) {
        const auto existing =
            read_run_metric(cond_dir / ("run" + std::to_string(r) + ".csv"), task);
        if (existing)
            result.run_values[static_cast<size_t>(r)] = *existing;
        else
            pending.push_back(r);
    }

    if (!pending.empty()) {
        DatasetSeeds dseeds{seeds.cohort_a(), seeds.cohort_b(), 0};
        DatasetBuildOptions build_opt;
        build_opt.per_class = options.per_class();
        build_opt.jobs = options.jobs;
        const std::string data_dir = (cond_dir / "data").string();
        const DatasetManifest manifest =
            task == Task::classification
                ? build_classification_dataset(condition, dseeds, data_dir, build_opt)
                : build_regression_dataset(condition, dseeds, data_dir, build_opt);

        // Runs execute sequentially; `jobs` fans the per-image passes of each
        // batch across workers, which is bit-identical at any width.
        for (const int r : pending) {
            double value = 0.0;
            try {
                value = execute_run(condition, task, seeds, options, manifest, cond_dir, r);
            } catch (const std::exception& e) {
                throw std::runtime_error(condition.condition_tag() + " run " +
                                         std::to_string(r) + ": " + e.what());
            }
            write_run_metric(cond_dir / ("run" + std::to_string(r) + ".csv"), task, r,
                             value);
            result.run_values[static_cast<size_t>(r)] = value;
            if (options.verbose) {
                std::fprintf(stderr, "[%s/%s] run %d: %s=%.4f\n", to_string(task),
                             condition.condition_tag().c_str(), r, metric_name(task),
                             value);
            }
        }
    }

    result.median_value = median(result.run_values);

    // Aggregate file + completion marker.
    {
        std::ofstream out(cond_dir / "runs.csv", std::ios::binary);
        out << "run,metric,value\n";
        for (int r = 0; r < options.n_runs; ++r)
            out << r << ',' << metric_name(task) << ','
                << format_double(result.run_values[static_cast<size_t>(r)]) << '\n';
    }
    {
        std::ofstream out(cond_dir / "done", std::ios::binary);
        out << format_double(result.median_value) << '\n';
    }
    return result;
}

SweepResult sweep(Task task, const SweepGrid& grid, const StudySeeds& seeds,
                  const RunOptions& options) {
    SweepResult result;
    result.task = task;
    const auto conditions = grid.conditions();
    result.cells.resize(conditions.size());

    RunOptions cell_options = options;
    cell_options.jobs = 1; // parallelism is across cells here

    std::mutex mu;
    size_t next = 0;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= conditions.size() || error) return;
                i = next++;
            }
            try {
                auto cell = run_condition(conditions[i], task, seeds, cell_options);
                std::lock_guard lock(mu);
                result.cells[i] = std::move(cell);
            } catch (...) {
                std::lock_guard lock(mu);
                error = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(options.jobs,
                                                  static_cast<int>(conditions.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return result;
}

SweepResult load_sweep(Task task, const SweepGrid& grid, const std::string& state_dir) {
    SweepResult result;
    result.task = task;
    std::string missing;
    for (const auto& condition : grid.conditions()) {
        const fs::path dir = condition_dir(state_dir, task, condition);
        if (!fs::exists(dir / "done")) {
            missing += "\n  " + condition.condition_tag();
            continue;
        }
        ConditionResult cell;
        cell.condition = condition;
        cell.task = task;
        std::ifstream in(dir / "runs.csv");
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto c2 = line.rfind(',');
            cell.run_values.push_back(std::stod(line.substr(c2 + 1)));
        }
        if (cell.run_values.empty())
            throw std::runtime_error("load_sweep: empty runs.csv for " +
                                     condition.condition_tag());
        cell.median_value = median(cell.run_values);
        result.cells.push_back(std::move(cell));
    }
    if (!missing.empty())
        throw std::runtime_error("load_sweep: incomplete sweep, missing cells:" + missing);
    return result;
}

ReportFiles emit_heatmap(const SweepResult& sweep_result, const std::string& out_dir,
                         bool want_csv, bool want_svg) {
    if (sweep_result.cells.empty())
        throw std::invalid_argument("emit_heatmap: empty sweep result");
    fs::create_directories(out_dir);

    const std::string task_name = to_string(sweep_result.task);
    ReportFiles files;

    if (want_csv) {
        files.runs_csv = (fs::path(out_dir) / (task_name + "_runs.csv")).string();
        std::ofstream runs(files.runs_csv, std::ios::binary);
        runs << "pattern,edge_mode,size,thickness,run,metric,value\n";
        for (const auto& cell : sweep_result.cells)
            for (size_t r = 0; r < cell.run_values.size(); ++r)
                runs << to_string(cell.condition.pattern) << ','
                     << to_string(cell.condition.edge_mode) << ','
                     << cell.condition.image_size << ',' << cell.condition.thickness
                     << ',' << r << ',' << metric_name(sweep_result.task) << ','
                     << format_double(cell.run_values[r]) << '\n';

        files.median_csv = (fs::path(out_dir) / (task_name + "_median.csv")).string();
        std::ofstream med(files.median_csv, std::ios::binary);
        med << "pattern,edge_mode,size,thickness,metric,value\n";
        for (const auto& cell : sweep_result.cells)
            med << to_string(cell.condition.pattern) << ','
                << to_string(cell.condition.edge_mode) << ','
                << cell.condition.image_size << ',' << cell.condition.thickness << ','
                << metric_name(sweep_result.task) << ','
                << format_double(cell.median_value) << '\n';
    }

    if (want_svg) {
        files.heatmap_svg = (fs::path(out_dir) / (task_name + "_heatmap.svg")).string();
        std::ofstream svg(files.heatmap_svg, std::ios::binary);
        svg << heatmap_svg(sweep_result);
    }
    return files;
}

} // namespace trajlab
