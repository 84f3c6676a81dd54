#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajlab/dataset.hpp"
#include "trajlab/raster.hpp"

namespace trajlab {

// Evaluation metrics and the 3-runs-per-condition protocol over the
// 36-condition rendering grid.

// Mann-Whitney AUC: (#concordant pairs + 0.5 * #ties) / (#pos * #neg).
// labels are 1 for the positive class (class A) and 0 otherwise. Throws if
// either class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

double mae(std::span<const double> predictions, std::span<const double> targets);

// Fraction of samples whose argmax output unit matches the label index
// (0 = class A, 1 = class B); equal outputs resolve to unit 0.
double accuracy(std::span<const double> unit0, std::span<const double> unit1,
                std::span<const int> label_index);

// Lower median: the (n-1)/2-th order statistic; for the protocol's 3 runs
// this is the middle value.
double median(std::vector<double> values);

// Seed book for a study. Every stream is derived from one master seed with
// fixed tags, so cohorts and split assignments are shared across all
// conditions while runs stay independent.
struct StudySeeds {
    uint64_t master = 0x5EEDBA5EULL;

    uint64_t cohort_a() const { return derive_seed(master, 1); }
    uint64_t cohort_b() const { return derive_seed(master, 2); }
    uint64_t split(int run) const { return derive_seed(master, 100 + static_cast<uint64_t>(run)); }
    uint64_t init(int run) const { return derive_seed(master, 200 + static_cast<uint64_t>(run)); }
    uint64_t shuffle(int run) const { return derive_seed(master, 300 + static_cast<uint64_t>(run)); }
};

struct RunOptions {
    std::string state_dir;  // per-condition artifacts live underneath
    int n_runs = 3;
    double scale = 1.0;     // fraction of the full 1000-per-class dataset
    int epochs = 60;
    int jobs = 1;           // fan-out across runs (and dataset rendering)
    bool verbose = false;

    int per_class() const;
};

struct ConditionResult {
    RenderConfig condition;
    Task task = Task::classification;
    std::vector<double> run_values; // AUC or MAE per run, indexed by run
    double median_value = 0.0;
};

// Builds (or reuses) the condition's dataset, then for each run: assign the
// run's split, train, evaluate the best checkpoint on that run's test split.
// Completed runs persist under <state_dir>/<task>/<condition_tag>/ and are
// skipped on re-entry; a `done` marker closes the cell.
ConditionResult run_condition(const RenderConfig& condition, Task task,
                              const StudySeeds& seeds, const RunOptions& options);

struct SweepGrid {
    std::vector<int> sizes{112, 224, 448};
    std::vector<int> thicknesses{1, 2, 3};
    std::vector<LinePattern> patterns{LinePattern::normal, LinePattern::motion_history};
    std::vector<EdgeMode> edges{EdgeMode::aliased, EdgeMode::antialiased};

    std::vector<RenderConfig> conditions() const;
};

struct SweepResult {
    Task task = Task::classification;
    std::vector<ConditionResult> cells;
};

// Runs every grid cell (resumable; `jobs` cells in flight at a time).
SweepResult sweep(Task task, const SweepGrid& grid, const StudySeeds& seeds,
                  const RunOptions& options);

// Loads a finished sweep from its state directory; throws listing missing
// cells when incomplete.
SweepResult load_sweep(Task task, const SweepGrid& grid, const std::string& state_dir);

// Tidy per-run CSV (pattern,edge_mode,size,thickness,run,metric,value), a
// median-only CSV, and a 4-panel annotated SVG heatmap.
struct ReportFiles {
    std::string runs_csv;
    std::string median_csv;
    std::string heatmap_svg;
};
ReportFiles emit_heatmap(const SweepResult& sweep_result, const std::string& out_dir,
                         bool want_csv = true, bool want_svg = true);

// SVG generation (report.cpp); exposed for tests.
std::string heatmap_svg(const SweepResult& sweep_result);

} // namespace trajlab
