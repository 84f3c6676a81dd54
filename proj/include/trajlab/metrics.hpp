#pragma once

#include <span>

#include "trajlab/geometry.hpp"
#include "trajlab/trajgen.hpp"

namespace trajlab {

// Scalar trajectory descriptors. All pure functions.

// Sum of Euclidean segment lengths over consecutive point pairs.
double path_length(std::span<const Point2> points);

// Euclidean distance from first to last point.
double displacement(std::span<const Point2> points);

// Directionality D = displacement / path length, in [0,1]. D is exactly 0
// when the path length is 0 (all points bitwise coincident) and approaches 1
// for straight paths.
double directionality(std::span<const Point2> points);

inline double path_length(const Trajectory& t) { return path_length(std::span<const Point2>(t.points)); }
inline double displacement(const Trajectory& t) { return displacement(std::span<const Point2>(t.points)); }
inline double directionality(const Trajectory& t) { return directionality(std::span<const Point2>(t.points)); }

} // namespace trajlab
