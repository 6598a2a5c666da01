#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "lagoon/point.hpp"

namespace lagoon {

using Index = std::int32_t;

namespace cdt {

struct Segment {
    Index a = 0;
    Index b = 0;
    int tag = 0;
};

/// Planar straight-line graph. The segments must enclose a bounded region
/// and may not cross each other except at shared endpoints.
struct Pslg {
    std::vector<Point2> points;
    std::vector<Segment> segments;
};

struct RefineOptions {
    /// Triangles with a larger circumradius are split.
    double max_circumradius = 0.0;
    /// Optional local circumradius bound evaluated at triangle centroids;
    /// combined with max_circumradius by taking the smaller value.
    std::function<double(Point2)> size_field;
    /// Triangles with a smaller minimum angle are split (Ruppert's bound
    /// guarantees termination up to about 20.7 degrees).
    double min_angle_deg = 20.0;
    std::size_t max_vertices = 4'000'000;
};

struct Triangulation {
    std::vector<Point2> points;
    std::vector<std::array<Index, 3>> triangles; // counterclockwise
    std::vector<Segment> segments;               // final subsegments with inherited tags
};

/// Constrained Delaunay triangulation of the region enclosed by the PSLG
/// segments, refined with Ruppert's algorithm. Segments are recovered by
/// midpoint splitting, so every output subsegment is a mesh edge. Throws
/// MeshError when the vertex cap is reached.
Triangulation refine(const Pslg& pslg, const RefineOptions& options);

} // namespace cdt
} // namespace lagoon
