#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajlab/geometry.hpp"
#include "trajlab/rng.hpp"

namespace trajlab {

// Persistent-random-walk trajectory generation.
//
// Each step either repeats the previous displacement (probability p, the
// directional memory) or draws a fresh isotropic Gaussian displacement with
// standard deviation sigma per axis. Trajectories are pure functions of
// (params, seed); cohorts derive one seed per trajectory id so generation
// order and worker count never change the output.

struct MotilityParams {
    double p = 0.9;     // probability of repeating the previous displacement
    double sigma = 0.1; // per-axis std-dev of a fresh displacement
    int steps = 100;    // number of displacements T; emits T+1 points

    void validate() const;
};

struct Trajectory {
    int64_t id = 0;
    std::vector<Point2> points; // points[0] == (0,0), size == steps + 1
    MotilityParams params;
    uint64_t seed = 0;
};

struct TrajectoryCohort {
    std::vector<Trajectory> trajectories; // ids dense 0..N-1
    uint64_t base_seed = 0;
    MotilityParams params;

    size_t size() const { return trajectories.size(); }
};

// Two independent N(0, sigma^2) draws (dx, dy), snapped to a 2^-32 grid so
// that accumulating positions is exact; advances rng by exactly one
// Box-Muller pair.
Point2 sample_step(Rng& rng, double sigma);

Trajectory generate_trajectory(const MotilityParams& params, uint64_t seed);

// Trajectory i uses derive_seed(base_seed, i); `jobs` only controls fan-out,
// never content.
TrajectoryCohort generate_cohort(const MotilityParams& params, int count,
                                 uint64_t base_seed, int jobs = 1);

// CSV cohort format:
//   # trajlab-cohort p=<p> sigma=<sigma> steps=<T> base_seed=<seed>
//   traj_id,t,x,y
// Coordinates are printed with 17 significant digits, which round-trips
// IEEE doubles exactly.
void write_cohort_csv(const TrajectoryCohort& cohort, const std::string& path);
TrajectoryCohort read_cohort_csv(const std::string& path);

} // namespace trajlab
