#include "trajlab/trajgen.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace trajlab {

void MotilityParams::validate() const {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("MotilityParams: p must be in [0,1]");
    if (!(sigma > 0.0))
        throw std::invalid_argument("MotilityParams: sigma must be > 0");
    if (steps < 2)
        throw std::invalid_argument("MotilityParams: steps must be >= 2");
}

namespace {

// Displacements are snapped to a 2^-32 grid. Position sums then stay exact
// in double precision (coordinates are far below 2^21), so a repeated
// displacement reproduces identical point differences bit for bit. The
// quantization error (~2e-10) is orders of magnitude below every statistical
// tolerance on the generator.
double snap_to_grid(double v) {
    return std::ldexp(std::nearbyint(std::ldexp(v, 32)), -32);
}

} // namespace

Point2 sample_step(Rng& rng, double sigma) {
    auto [dx, dy] = rng.normal_pair(sigma);
    return {snap_to_grid(dx), snap_to_grid(dy)};
}

Trajectory generate_trajectory(const MotilityParams& params, uint64_t seed) {
    params.validate();
    Rng rng(seed);

    Trajectory traj;
    traj.params = params;
    traj.seed = seed;
    traj.points.reserve(static_cast<size_t>(params.steps) + 1);

    traj.points.push_back({0.0, 0.0});
    Point2 delta = sample_step(rng, params.sigma);
    traj.points.push_back(traj.points.back() + delta);

    // Persistence repeats the previous displacement bitwise, so a p=1 walk
    // is exactly collinear and equally spaced.
    for (int t = 1; t < params.steps; ++t) {
        const double alpha = rng.uniform01();
        if (alpha >= params.p) delta = sample_step(rng, params.sigma);
        traj.points.push_back(traj.points.back() + delta);
    }
    return traj;
}

TrajectoryCohort generate_cohort(const MotilityParams& params, int count,
                                 uint64_t base_seed, int jobs) {
    params.validate();
    if (count < 1)
        throw std::invalid_argument("generate_cohort: count must be >= 1");
    if (jobs < 1) jobs = 1;

    TrajectoryCohort cohort;
    cohort.base_seed = base_seed;
    cohort.params = params;
    cohort.trajectories.resize(static_cast<size_t>(count));

    auto worker = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            Trajectory t = generate_trajectory(params, derive_seed(base_seed, static_cast<uint64_t>(i)));
            t.id = i;
            cohort.trajectories[static_cast<size_t>(i)] = std::move(t);
        }
    };

    if (jobs == 1 || count < 2 * jobs) {
        worker(0, count);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (count + jobs - 1) / jobs;
        for (int j = 0; j < jobs; ++j) {
            const int begin = j * chunk;
            const int end = std::min(count, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return cohort;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& path, size_t line_no,
                             const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_double_field(const std::string& field, const std::string& path,
                          size_t line_no, const char* name) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        parse_fail(path, line_no, std::string("non-numeric ") + name + ": '" + field + "'");
    }
    if (pos != field.size())
        parse_fail(path, line_no, std::string("non-numeric ") + name + ": '" + field + "'");
    return v;
}

} // namespace

void write_cohort_csv(const TrajectoryCohort& cohort, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_cohort_csv: cannot open " + path);

    char meta[256];
    std::snprintf(meta, sizeof(meta),
                  "# trajlab-cohort p=%.17g sigma=%.17g steps=%d base_seed=%" PRIu64 "\n",
                  cohort.params.p, cohort.params.sigma, cohort.params.steps,
                  cohort.base_seed);
    out << meta << "traj_id,t,x,y\n";

    for (const auto& traj : cohort.trajectories) {
        for (size_t t = 0; t < traj.points.size(); ++t) {
            out << traj.id << ',' << t << ','
                << format_double(traj.points[t].x) << ','
                << format_double(traj.points[t].y) << '\n';
        }
    }
    if (!out)
        throw std::runtime_error("write_cohort_csv: write failed for " + path);
}

TrajectoryCohort read_cohort_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_cohort_csv: cannot open " + path);

    TrajectoryCohort cohort;
    std::string line;
    size_t line_no = 0;

    // Metadata line.
    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    ++line_no;
    {
        uint64_t base_seed = 0;
        double p = 0.0, sigma = 0.0;
        int steps = 0;
        if (std::sscanf(line.c_str(),
                        "# trajlab-cohort p=%lf sigma=%lf steps=%d base_seed=%" SCNu64,
                        &p, &sigma, &steps, &base_seed) != 4)
            parse_fail(path, line_no, "missing cohort metadata line");
        cohort.params = {p, sigma, steps};
        cohort.base_seed = base_seed;
    }

    if (!std::getline(in, line)) parse_fail(path, 2, "missing header");
    ++line_no;
    if (line != "traj_id,t,x,y")
        parse_fail(path, line_no, "bad header: '" + line + "'");

    int64_t current_id = -1;
    size_t expected_t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;

        std::istringstream row(line);
        std::string f_id, f_t, f_x, f_y;
        if (!std::getline(row, f_id, ',') || !std::getline(row, f_t, ',') ||
            !std::getline(row, f_x, ',') || !std::getline(row, f_y))
            parse_fail(path, line_no, "expected 4 comma-separated fields");

        const int64_t id = static_cast<int64_t>(
            parse_double_field(f_id, path, line_no, "traj_id"));
        const size_t t = static_cast<size_t>(
            parse_double_field(f_t, path, line_no, "t"));
        const double x = parse_double_field(f_x, path, line_no, "x");
        const double y = parse_double_field(f_y, path, line_no, "y");

        if (id != current_id) {
            if (id != current_id + 1)
                parse_fail(path, line_no, "trajectory ids must be dense ascending");
            current_id = id;
            expected_t = 0;
            cohort.trajectories.push_back({});
            cohort.trajectories.back().id = id;
            cohort.trajectories.back().params = cohort.params;
            cohort.trajectories.back().seed = derive_seed(cohort.base_seed,
                                                          static_cast<uint64_t>(id));
        }
        if (t != expected_t)
            parse_fail(path, line_no, "point index t out of order");
        ++expected_t;
        cohort.trajectories.back().points.push_back({x, y});
    }

    if (cohort.trajectories.empty())
        throw std::runtime_error(path + ": cohort has no trajectories");
    for (const auto& traj : cohort.trajectories) {
        if (traj.points.size() != static_cast<size_t>(cohort.params.steps) + 1)
            throw std::runtime_error(path + ": trajectory " + std::to_string(traj.id) +
                                     " has wrong point count");
    }
    return cohort;
}

} // namespace trajlab
