#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajlab/eval.hpp"
#include "trajlab/rng.hpp"

using namespace trajlab;
namespace fs = std::filesystem;

namespace {

// O(n^2) pairwise brute force: the independent AUC oracle.
double auc_bruteforce(std::span<const double> scores, std::span<const int> labels) {
    double num = 0.0;
    size_t n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i]) {
            ++n_pos;
            for (size_t j = 0; j < scores.size(); ++j) {
                if (labels[j]) continue;
                if (scores[i] > scores[j]) num += 1.0;
                else if (scores[i] == scores[j]) num += 0.5;
            }
        } else {
            ++n_neg;
        }
    }
    return num / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

SweepResult fake_sweep(Task task) {
    SweepResult out;
    out.task = task;
    Rng rng(4096);
    for (const auto& condition : SweepGrid{}.conditions()) {
        ConditionResult cell;
        cell.condition = condition;
        cell.task = task;
        for (int r = 0; r < 3; ++r)
            cell.run_values.push_back(task == Task::classification
                                          ? 0.5 + 0.45 * rng.uniform01()
                                          : 0.04 + 0.06 * rng.uniform01());
        cell.median_value = median(cell.run_values);
        out.cells.push_back(std::move(cell));
    }
    return out;
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

} // namespace

TEST_CASE("auc handles perfect separation, ties, and degenerate input") {
    const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> labels{1, 1, 0, 0};
    CHECK(auc(scores, labels) == 1.0);

    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    CHECK(auc(flat, labels) == 0.5);

    const std::vector<int> single{1, 1, 1, 1};
    CHECK_THROWS(auc(scores, single));
}

TEST_CASE("auc equals the O(n^2) brute force on 200 random sets") {
    Rng rng(55);
    for (int rep = 0; rep < 200; ++rep) {
        const size_t n = 10 + rng.next_below(60);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (size_t i = 0; i < n; ++i) {
            // Quantized scores inject plenty of ties.
            scores[i] = static_cast<double>(rng.next_below(20)) / 20.0;
            labels[i] = static_cast<int>(rng.next_below(2));
            has_pos |= labels[i] == 1;
            has_neg |= labels[i] == 0;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[n - 1] = 0;
        const double got = auc(scores, labels);
        const double want = auc_bruteforce(scores, labels);
        CHECK(std::abs(got - want) < 1e-12);
    }
}

TEST_CASE("auc invariances: monotone transforms and label complement") {
    Rng rng(66);
    const size_t n = 100;
    std::vector<double> scores(n), warped(n);
    std::vector<int> labels(n), flipped(n);
    for (size_t i = 0; i < n; ++i) {
        scores[i] = rng.normal(1.0);
        warped[i] = std::exp(2.0 * scores[i]) + 3.0; // strictly increasing
        labels[i] = static_cast<int>(rng.next_below(2));
        flipped[i] = 1 - labels[i];
    }
    labels[0] = 1;
    labels[1] = 0;
    flipped[0] = 0;
    flipped[1] = 1;

    const double base = auc(scores, labels);
    CHECK(auc(warped, labels) == doctest::Approx(base).epsilon(1e-12));
    CHECK(auc(scores, flipped) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("mae and accuracy") {
    const std::vector<double> p{0.5}, t{0.7};
    CHECK(mae(p, t) == doctest::Approx(0.2).epsilon(1e-12));

    const std::vector<double> same{0.1, 0.2, 0.3};
    CHECK(mae(same, same) == 0.0);

    Rng rng(77);
    std::vector<double> a(500), b(500);
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal(1.0);
        b[i] = rng.normal(1.0);
    }
    double want = 0.0;
    for (size_t i = 0; i < a.size(); ++i) want += std::abs(a[i] - b[i]);
    want /= static_cast<double>(a.size());
    CHECK(mae(a, b) == doctest::Approx(want).epsilon(1e-12));

    // mae(a,c) <= mae(a,b) + mae(b,c)
    std::vector<double> c(500);
    for (auto& v : c) v = rng.normal(1.0);
    CHECK(mae(a, c) <= mae(a, b) + mae(b, c) + 1e-12);

    const std::vector<double> u0{0.9, 0.3, 0.5};
    const std::vector<double> u1{0.1, 0.7, 0.5};
    const std::vector<int> idx{0, 1, 0};
    CHECK(accuracy(u0, u1, idx) == 1.0); // tie resolves to unit 0

    const std::vector<double> short_t{0.5};
    CHECK_THROWS(mae(p, std::span<const double>(short_t.data(), 0)));
}

TEST_CASE("median is the middle order statistic") {
    CHECK(median({0.9, 0.5, 0.8}) == 0.8);
    CHECK(median({0.1}) == 0.1);
    CHECK(median({3.0, 1.0, 2.0, 5.0, 4.0}) == 3.0);
}

TEST_CASE("the full grid has exactly 36 conditions") {
    const auto conditions = SweepGrid{}.conditions();
    CHECK(conditions.size() == 36);
}

TEST_CASE("heatmap report: CSV shapes, median consistency, SVG structure") {
    const auto dir = fs::temp_directory_path() / "trajlab_test_eval" / "report";
    fs::remove_all(dir);
    const auto sweep_result = fake_sweep(Task::classification);
    const auto files = emit_heatmap(sweep_result, dir.string());

    // Runs CSV: 36 cells x 3 runs.
    std::ifstream runs(files.runs_csv);
    std::string line;
    std::getline(runs, line);
    CHECK(line == "pattern,edge_mode,size,thickness,run,metric,value");
    size_t run_rows = 0;
    std::map<std::string, std::vector<double>> by_cell;
    while (std::getline(runs, line)) {
        if (line.empty()) continue;
        ++run_rows;
        std::istringstream ss(line);
        std::string f[7];
        for (int i = 0; i < 7; ++i) std::getline(ss, f[i], ',');
        by_cell[f[0] + "," + f[1] + "," + f[2] + "," + f[3]].push_back(std::stod(f[6]));
    }
    CHECK(run_rows == 36 * 3);

    // Median CSV: 36 rows, each the median of its runs rows.
    std::ifstream med(files.median_csv);
    std::getline(med, line);
    CHECK(line == "pattern,edge_mode,size,thickness,metric,value");
    size_t med_rows = 0;
    while (std::getline(med, line)) {
        if (line.empty()) continue;
        ++med_rows;
        std::istringstream ss(line);
        std::string f[6];
        for (int i = 0; i < 6; ++i) std::getline(ss, f[i], ',');
        const auto key = f[0] + "," + f[1] + "," + f[2] + "," + f[3];
        REQUIRE(by_cell.count(key) == 1);
        CHECK(std::stod(f[5]) == median(by_cell[key]));
    }
    CHECK(med_rows == 36);

    // SVG: 4 panels, 9 annotated cells each, one colorbar.
    std::ifstream svg_in(files.heatmap_svg);
    const std::string svg((std::istreambuf_iterator<char>(svg_in)),
                          std::istreambuf_iterator<char>());
    CHECK(count_occurrences(svg, "class=\"title\"") == 4);
    CHECK(count_occurrences(svg, "class=\"cell\"") == 36);
    CHECK(count_occurrences(svg, "(A) Normal Aliased") == 1);
    CHECK(count_occurrences(svg, "(D) Motion Antialiased") == 1);
    CHECK(count_occurrences(svg, "url(#cbar)") == 1);
    CHECK(svg.find(">AUC<") != std::string::npos);

    // Determinism: emitting again yields identical bytes.
    const auto dir2 = fs::temp_directory_path() / "trajlab_test_eval" / "report2";
    const auto files2 = emit_heatmap(sweep_result, dir2.string());
    std::ifstream s1(files.heatmap_svg), s2(files2.heatmap_svg);
    const std::string b1((std::istreambuf_iterator<char>(s1)),
                         std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(s2)),
                         std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("run_condition completes, persists, and resumes") {
    const auto dir = fs::temp_directory_path() / "trajlab_test_eval" / "cond";
    fs::remove_all(dir);

    RenderConfig condition;
    condition.image_size = 16;
    condition.thickness = 1;

    StudySeeds seeds;
    seeds.master = 1234;
    RunOptions options;
    options.state_dir = dir.string();
    options.n_runs = 3;
    options.scale = 0.01; // clamps to the 10-per-class floor
    options.epochs = 1;

    const auto first = run_condition(condition, Task::classification, seeds, options);
    REQUIRE(first.run_values.size() == 3);
    CHECK(first.median_value == median(first.run_values));

    const auto cell_dir = dir / "classification" / condition.condition_tag();
    CHECK(fs::exists(cell_dir / "done"));
    CHECK(fs::exists(cell_dir / "runs.csv"));
    CHECK(fs::exists(cell_dir / "checkpoint_run0.bin"));

    // Re-entry loads the persisted runs without retraining.
    const auto again = run_condition(condition, Task::classification, seeds, options);
    CHECK(again.run_values == first.run_values);

    // Simulated partial state: drop one run file, keep the others.
    fs::remove(cell_dir / "done");
    fs::remove(cell_dir / "run1.csv");
    const auto resumed = run_condition(condition, Task::classification, seeds, options);
    CHECK(resumed.run_values == first.run_values);

    // load_sweep refuses an incomplete grid and lists the missing cell.
    SweepGrid grid;
    grid.sizes = {16};
    grid.thicknesses = {1, 2};
    grid.patterns = {LinePattern::normal};
    grid.edges = {EdgeMode::aliased};
    CHECK_THROWS_WITH_AS(load_sweep(Task::classification, grid, dir.string()),
                         doctest::Contains("normal_aliased_16_t2"), std::runtime_error);
}
