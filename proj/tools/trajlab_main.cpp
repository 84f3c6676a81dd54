// trajlab: generate persistent-random-walk trajectories, rasterize them
// under the 36-condition rendering grid, train the study CNN, and report
// AUC/MAE heatmaps. Every subcommand is deterministic given its seeds.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "trajlab/dataset.hpp"
#include "trajlab/eval.hpp"
#include "trajlab/image_io.hpp"
#include "trajlab/metrics.hpp"
#include "trajlab/nn/checkpoint.hpp"
#include "trajlab/nn/train.hpp"
#include "trajlab/trajgen.hpp"

namespace fs = std::filesystem;
using namespace trajlab;

namespace {

constexpr uint64_t kDefaultSeed = 0x5EEDBA5EULL;

std::string out_root() {
    if (const char* env = std::getenv("TRAJLAB_OUT"); env && *env) return env;
    return "out";
}

RenderConfig parse_condition(int size, int thickness, const std::string& pattern,
                             const std::string& edge, int pad) {
    RenderConfig cfg;
    cfg.image_size = size;
    cfg.thickness = thickness;
    cfg.pattern = line_pattern_from_string(pattern);
    cfg.edge_mode = edge_mode_from_string(edge);
    cfg.pad = pad;
    cfg.validate();
    return cfg;
}

std::string format_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ------------------------------------------------------------------ generate

struct GenerateArgs {
    double p = 0.9;
    double sigma = 0.1;
    int steps = 100;
    int n = 1000;
    uint64_t seed = kDefaultSeed;
    int jobs = 1;
    std::string out;
};

int cmd_generate(const GenerateArgs& a) {
    const std::string out = a.out.empty() ? out_root() + "/cohort.csv" : a.out;
    const MotilityParams params{a.p, a.sigma, a.steps};
    const auto cohort = generate_cohort(params, a.n, a.seed, a.jobs);
    if (const fs::path parent = fs::path(out).parent_path(); !parent.empty())
        fs::create_directories(parent);
    write_cohort_csv(cohort, out);
    std::cout << "wrote " << cohort.size() << " trajectories to " << out << "\n";
    return 0;
}

// -------------------------------------------------------------------- render

struct RenderArgs {
    std::string cohort;
    std::string cohort_a;
    std::string cohort_b;
    std::string task;
    int size = 112;
    int thickness = 1;
    std::string pattern = "normal";
    std::string edge = "aliased";
    int pad = 2;
    std::string format = "pgm";
    int jobs = 1;
    std::string out;
};

int cmd_render(const RenderArgs& a) {
    const RenderConfig cfg = parse_condition(a.size, a.thickness, a.pattern, a.edge, a.pad);
    const std::string out = a.out.empty() ? out_root() + "/dataset" : a.out;
    const bool want_png = a.format.find("png") != std::string::npos;

    if (!a.cohort_a.empty() || !a.cohort_b.empty()) {
        if (a.cohort_a.empty() || a.cohort_b.empty() || a.task.empty())
            throw CLI::ValidationError(
                "render", "--cohort-a, --cohort-b and --task must be given together");
        const auto ca = read_cohort_csv(a.cohort_a);
        const auto cb = read_cohort_csv(a.cohort_b);
        const auto manifest =
            build_dataset_from_cohorts(task_from_string(a.task), ca, cb, cfg, out, a.jobs);
        std::cout << "wrote " << manifest.records.size() << " images + manifest to "
                  << out << "\n";
        return 0;
    }

    if (a.cohort.empty())
        throw CLI::ValidationError("render", "need --cohort or --cohort-a/--cohort-b");
    const auto cohort = read_cohort_csv(a.cohort);
    const fs::path dir = fs::path(out) / cfg.condition_tag();
    fs::create_directories(dir);
    auto worker = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            const auto& traj = cohort.trajectories[i];
            const auto img = render(traj.points, cfg);
            const auto base = dir / ("img_" + std::to_string(traj.id));
            write_pgm(img, base.string() + ".pgm");
            if (want_png) write_png(img, base.string() + ".png");
        }
    };
    const size_t n = cohort.size();
    if (a.jobs <= 1 || n < 2 * static_cast<size_t>(a.jobs)) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        const size_t chunk = (n + a.jobs - 1) / a.jobs;
        for (int j = 0; j < a.jobs; ++j) {
            const size_t begin = j * chunk;
            const size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    std::cout << "rendered " << cohort.size() << " images to " << dir.string() << "\n";
    return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
    std::string manifest;
    int epochs = 60;
    double lr = 0.001;
    int batch_size = 32;
    uint64_t init_seed = kDefaultSeed;
    uint64_t shuffle_seed = kDefaultSeed + 1;
    uint64_t split_seed = 0;
    bool has_split_seed = false;
    int jobs = 1;
    std::string checkpoint;
    std::string history;
};

int cmd_train(const TrainArgs& a) {
    DatasetManifest manifest = read_manifest(a.manifest, true);
    if (a.has_split_seed) manifest = assign_splits(manifest, a.split_seed);

    const std::string manifest_dir = fs::path(a.manifest).parent_path().string();
    const auto data = nn::load_dataset(manifest, manifest_dir);

    nn::ModelConfig model_cfg;
    model_cfg.input_size = data.image_size;
    model_cfg.task = manifest.task;

    nn::TrainConfig train_cfg;
    train_cfg.epochs = a.epochs;
    train_cfg.learning_rate = a.lr;
    train_cfg.batch_size = a.batch_size;
    train_cfg.init_seed = a.init_seed;
    train_cfg.shuffle_seed = a.shuffle_seed;

    const auto result = nn::train(data, model_cfg, train_cfg, a.jobs);

    const std::string checkpoint =
        a.checkpoint.empty() ? out_root() + "/checkpoint.bin" : a.checkpoint;
    if (const fs::path parent = fs::path(checkpoint).parent_path(); !parent.empty())
        fs::create_directories(parent);
    nn::save_checkpoint(result.model,
                        {a.init_seed, a.shuffle_seed, a.has_split_seed ? a.split_seed : 0},
                        checkpoint);
    if (!a.history.empty())
        nn::write_history_csv(result.history, manifest.task, a.history);

    std::cout << "model parameters " << result.model.parameter_count()
              << "; best epoch " << result.best_epoch << " val_loss "
              << format_metric(result.history[static_cast<size_t>(result.best_epoch)].val_loss)
              << "; checkpoint " << checkpoint << "\n";
    return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
    std::string manifest;
    std::string checkpoint;
    std::string split = "test";
    uint64_t split_seed = 0;
    bool has_split_seed = false;
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
    DatasetManifest manifest = read_manifest(a.manifest, true);
    if (a.has_split_seed) manifest = assign_splits(manifest, a.split_seed);

    const std::string manifest_dir = fs::path(a.manifest).parent_path().string();
    const auto data = nn::load_dataset(manifest, manifest_dir);
    const auto loaded = nn::load_checkpoint(a.checkpoint);

    const auto split = split_from_string(a.split);
    const auto indices = data.split_indices(split);
    if (indices.empty()) throw std::runtime_error("evaluate: split '" + a.split + "' is empty");

    const auto preds = nn::predict_indices(loaded.model, data, indices);
    const int units = loaded.model.config().head_units();
    std::vector<float> targets(indices.size() * static_cast<size_t>(units));
    for (size_t i = 0; i < indices.size(); ++i)
        data.fill_target(indices[i],
                         std::span<float>(targets).subspan(i * static_cast<size_t>(units),
                                                           static_cast<size_t>(units)));
    const auto loss = nn::loss_batch(data.task, preds, targets,
                                     static_cast<int>(indices.size()));

    std::string report = "metric,value\n";
    if (data.task == Task::classification) {
        std::vector<double> s0(indices.size()), s1(indices.size());
        std::vector<int> pos(indices.size()), label_idx(indices.size());
        for (size_t i = 0; i < indices.size(); ++i) {
            s0[i] = preds[2 * i];
            s1[i] = preds[2 * i + 1];
            const char cl = data.samples[static_cast<size_t>(indices[i])].class_label;
            pos[i] = cl == 'A';
            label_idx[i] = cl == 'A' ? 0 : 1;
        }
        report += "auc," + format_metric(auc(s0, pos)) + "\n";
        report += "accuracy," + format_metric(accuracy(s0, s1, label_idx)) + "\n";
    } else {
        std::vector<double> p(indices.size()), t(indices.size());
        for (size_t i = 0; i < indices.size(); ++i) {
            p[i] = preds[i];
            t[i] = data.samples[static_cast<size_t>(indices[i])].value_label;
        }
        report += "mae," + format_metric(mae(p, t)) + "\n";
    }
    report += "loss," + format_metric(loss.value) + "\n";

    std::cout << report;
    if (!a.out.empty()) {
        if (const fs::path parent = fs::path(a.out).parent_path(); !parent.empty())
            fs::create_directories(parent);
        std::ofstream f(a.out, std::ios::binary);
        if (!f) throw std::runtime_error("evaluate: cannot open " + a.out);
        f << report;
    }
    return 0;
}

// --------------------------------------------------------------- sweep/report

struct SweepArgs {
    std::string task = "classification";
    std::string out;
    uint64_t seed = kDefaultSeed;
    double scale = 1.0;
    int epochs = 60;
    int runs = 3;
    int jobs = 1;
    std::vector<int> sizes{112, 224, 448};
    std::vector<int> thicknesses{1, 2, 3};
    std::vector<std::string> patterns{"normal", "motion"};
    std::vector<std::string> edges{"aliased", "antialiased"};
};

SweepGrid parse_grid(const SweepArgs& a) {
    SweepGrid grid;
    grid.sizes = a.sizes;
    grid.thicknesses = a.thicknesses;
    grid.patterns.clear();
    for (const auto& p : a.patterns) grid.patterns.push_back(line_pattern_from_string(p));
    grid.edges.clear();
    for (const auto& e : a.edges) grid.edges.push_back(edge_mode_from_string(e));
    return grid;
}

int cmd_sweep(const SweepArgs& a) {
    const std::string out = a.out.empty() ? out_root() + "/sweep" : a.out;
    const SweepGrid grid = parse_grid(a);

    StudySeeds seeds;
    seeds.master = a.seed;
    RunOptions options;
    options.state_dir = out;
    options.n_runs = a.runs;
    options.scale = a.scale;
    options.epochs = a.epochs;
    options.jobs = a.jobs;
    options.verbose = true;

    const auto result = sweep(task_from_string(a.task), grid, seeds, options);
    std::cout << "sweep complete: " << result.cells.size() << " cells in " << out << "\n";
    return 0;
}

struct ReportArgs {
    std::string sweep_dir;
    std::string task = "classification";
    std::string out;
    std::string format = "csv,svg";
    SweepArgs grid_args; // reuses the grid filter flags
};

int cmd_report(const ReportArgs& a) {
    const std::string out = a.out.empty() ? out_root() + "/report" : a.out;
    const SweepGrid grid = parse_grid(a.grid_args);
    const auto result = load_sweep(task_from_string(a.task), grid, a.sweep_dir);
    const bool want_csv = a.format.find("csv") != std::string::npos;
    const bool want_svg = a.format.find("svg") != std::string::npos;
    const auto files = emit_heatmap(result, out, want_csv, want_svg);
    if (!files.runs_csv.empty())
        std::cout << files.runs_csv << "\n" << files.median_csv << "\n";
    if (!files.heatmap_svg.empty()) std::cout << files.heatmap_svg << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"trajectory rendering study: generation, rasterization, CNN "
                 "training, and evaluation"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a trajectory cohort CSV");
    generate->add_option("--p", gen.p, "Directional memory in [0,1]")->capture_default_str();
    generate->add_option("--sigma", gen.sigma, "Step noise std-dev")->capture_default_str();
    generate->add_option("--steps", gen.steps, "Time steps T")->capture_default_str();
    generate->add_option("--n", gen.n, "Cohort size")->capture_default_str();
    generate->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
    generate->add_option("--jobs", gen.jobs, "Worker threads")->capture_default_str();
    generate->add_option("--out", gen.out, "Output CSV (default $TRAJLAB_OUT/cohort.csv)");

    RenderArgs ren;
    auto* render_cmd = app.add_subcommand("render", "Rasterize cohorts to images");
    render_cmd->add_option("--cohort", ren.cohort, "Cohort CSV (images only)");
    render_cmd->add_option("--cohort-a", ren.cohort_a, "Class A cohort CSV");
    render_cmd->add_option("--cohort-b", ren.cohort_b, "Class B cohort CSV");
    render_cmd->add_option("--task", ren.task, "classification|regression (dataset mode)");
    render_cmd->add_option("--size", ren.size, "Image size in pixels")->capture_default_str();
    render_cmd->add_option("--thickness", ren.thickness, "Line thickness")->capture_default_str();
    render_cmd->add_option("--pattern", ren.pattern, "normal|motion")->capture_default_str();
    render_cmd->add_option("--edge", ren.edge, "aliased|antialiased")->capture_default_str();
    render_cmd->add_option("--pad", ren.pad, "Frame margin in pixels")->capture_default_str();
    render_cmd->add_option("--format", ren.format, "pgm or pgm,png")->capture_default_str();
    render_cmd->add_option("--jobs", ren.jobs, "Worker threads")->capture_default_str();
    render_cmd->add_option("--out", ren.out, "Output dir (default $TRAJLAB_OUT/dataset)");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train the CNN on a dataset manifest");
    train_cmd->add_option("--manifest", tr.manifest, "Dataset manifest CSV")->required();
    train_cmd->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--batch-size", tr.batch_size, "Minibatch size")->capture_default_str();
    train_cmd->add_option("--init-seed", tr.init_seed, "Weight init seed")->capture_default_str();
    train_cmd->add_option("--shuffle-seed", tr.shuffle_seed, "Epoch shuffle seed")->capture_default_str();
    auto* tss = train_cmd->add_option("--split-seed", tr.split_seed,
                                      "Assign train/val/test splits with this seed");
    train_cmd->add_option("--jobs", tr.jobs,
                          "Batch worker threads; results are identical for any value")
        ->capture_default_str();
    train_cmd->add_option("--checkpoint", tr.checkpoint,
                          "Checkpoint path (default $TRAJLAB_OUT/checkpoint.bin)");
    train_cmd->add_option("--history", tr.history, "Per-epoch history CSV path");

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a split");
    evaluate_cmd->add_option("--manifest", ev.manifest, "Dataset manifest CSV")->required();
    evaluate_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
    evaluate_cmd->add_option("--split", ev.split, "train|val|test")->capture_default_str();
    auto* ess = evaluate_cmd->add_option("--split-seed", ev.split_seed,
                                         "Assign splits with this seed first");
    evaluate_cmd->add_option("--out", ev.out, "Also write metrics CSV here");

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the rendering-condition grid");
    sweep_cmd->add_option("--task", sw.task, "classification|regression")->capture_default_str();
    sweep_cmd->add_option("--out", sw.out, "State dir (default $TRAJLAB_OUT/sweep)");
    sweep_cmd->add_option("--seed", sw.seed, "Master study seed")->capture_default_str();
    sweep_cmd->add_option("--scale", sw.scale, "Dataset scale in (0,1]")->capture_default_str();
    sweep_cmd->add_option("--epochs", sw.epochs, "Training epochs per run")->capture_default_str();
    sweep_cmd->add_option("--runs", sw.runs, "Runs per condition")->capture_default_str();
    sweep_cmd->add_option("--jobs", sw.jobs, "Concurrent condition cells")->capture_default_str();
    sweep_cmd->add_option("--sizes", sw.sizes, "Image sizes")->capture_default_str();
    sweep_cmd->add_option("--thicknesses", sw.thicknesses, "Line thicknesses")->capture_default_str();
    sweep_cmd->add_option("--patterns", sw.patterns, "Line patterns")->capture_default_str();
    sweep_cmd->add_option("--edges", sw.edges, "Edge modes")->capture_default_str();

    ReportArgs rep;
    auto* report_cmd = app.add_subcommand("report", "Emit CSVs and SVG heatmap from a sweep");
    report_cmd->add_option("--sweep-dir", rep.sweep_dir, "Sweep state dir")->required();
    report_cmd->add_option("--task", rep.task, "classification|regression")->capture_default_str();
    report_cmd->add_option("--out", rep.out, "Report dir (default $TRAJLAB_OUT/report)");
    report_cmd->add_option("--format", rep.format, "csv,svg subset")->capture_default_str();
    report_cmd->add_option("--sizes", rep.grid_args.sizes, "Image sizes")->capture_default_str();
    report_cmd->add_option("--thicknesses", rep.grid_args.thicknesses, "Line thicknesses")->capture_default_str();
    report_cmd->add_option("--patterns", rep.grid_args.patterns, "Line patterns")->capture_default_str();
    report_cmd->add_option("--edges", rep.grid_args.edges, "Edge modes")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        tr.has_split_seed = tss->count() > 0;
        ev.has_split_seed = ess->count() > 0;
        if (generate->parsed()) return cmd_generate(gen);
        if (render_cmd->parsed()) return cmd_render(ren);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (evaluate_cmd->parsed()) return cmd_evaluate(ev);
        if (sweep_cmd->parsed()) return cmd_sweep(sw);
        if (report_cmd->parsed()) return cmd_report(rep);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
