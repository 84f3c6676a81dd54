#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajlab/raster.hpp"
#include "trajlab/trajgen.hpp"

namespace trajlab {

// Image dataset assembly: two 1000-trajectory cohorts (directional memory
// 0.9 for class A, 0.7 for class B; sigma 0.1, T 100) rendered under one
// RenderConfig, with per-sample records and seeded train/val/test splits.
// The same cohorts back both tasks: classification labels the class,
// regression labels the directionality.

enum class Task : uint8_t { classification, regression };

const char* to_string(Task t);
Task task_from_string(const std::string& s);

enum class Split : uint8_t { none, train, val, test };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct SampleRecord {
    std::string image_path; // relative to the manifest's directory
    int64_t traj_id = 0;    // class A keeps cohort ids, class B is offset by N
    char class_label = 'A'; // classification label
    double value_label = 0; // regression label (directionality)
    Split split = Split::none;
    RenderConfig condition;
};

struct DatasetSeeds {
    uint64_t cohort_a = 0;
    uint64_t cohort_b = 0;
    uint64_t split_seed = 0; // recorded by assign_splits
};

struct DatasetManifest {
    Task task = Task::classification;
    std::vector<SampleRecord> records;
    DatasetSeeds seeds;
};

struct DatasetBuildOptions {
    int per_class = 1000; // desk-scale runs shrink this proportionally
    int steps = 100;
    double sigma = 0.1;
    double memory_class_a = 0.9;
    double memory_class_b = 0.7;
    int jobs = 1;
    bool reuse_existing = true; // skip rendering when the manifest is present
};

// Generates (or reuses) the two cohorts, renders every trajectory under
// `config` into <out_dir>/<condition_tag>/img_<traj_id>.pgm, stores the
// cohort CSVs, and writes <out_dir>/manifest.csv last as the completion
// marker. Records come back split = none; splits are assigned per run.
DatasetManifest build_classification_dataset(const RenderConfig& config,
                                             const DatasetSeeds& seeds,
                                             const std::string& out_dir,
                                             const DatasetBuildOptions& opt = {});
DatasetManifest build_regression_dataset(const RenderConfig& config,
                                         const DatasetSeeds& seeds,
                                         const std::string& out_dir,
                                         const DatasetBuildOptions& opt = {});

// Same rendering and manifest assembly, but from already-generated cohorts
// (class A first, ids offset by the cohort size for class B).
DatasetManifest build_dataset_from_cohorts(Task task, const TrajectoryCohort& cohort_a,
                                           const TrajectoryCohort& cohort_b,
                                           const RenderConfig& config,
                                           const std::string& out_dir, int jobs = 1);

// Seeded shuffle, then an 80/10/10 partition (1600/200/200 at full scale).
// Classification is stratified per class. Pure function of (manifest,
// split_seed).
DatasetManifest assign_splits(const DatasetManifest& manifest, uint64_t split_seed);

// Manifest CSV: a metadata line followed by
//   image_path,traj_id,label,split,size,thickness,pattern,edge_mode
void write_manifest(const DatasetManifest& manifest, const std::string& path);
// validate_images additionally checks that every referenced image exists
// (relative to the manifest's directory) and reports all missing paths.
DatasetManifest read_manifest(const std::string& path, bool validate_images = false);

} // namespace trajlab
