#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "lagoon/delaunay.hpp"
#include "lagoon/geometry.hpp"
#include "lagoon/point.hpp"

namespace lagoon {

/// A labeled mesh edge. Nodes are ordered so the owning region lies on the
/// left; for interface edges of a full mesh that region is Seg. The right
/// normal is therefore the outward normal of the owning region (for the
/// interface of a full mesh: the normal pointing into Main).
struct LabeledEdge {
    std::array<Index, 2> nodes{};
    BoundaryLabel label = BoundaryLabel::GammaZero;
};

struct TriMesh {
    std::vector<Point2> nodes;
    std::vector<std::array<Index, 3>> triangles; // counterclockwise
    std::vector<Region> regions;                 // one per triangle
    std::vector<LabeledEdge> edges;
    /// Node injection into the parent mesh; empty for a root mesh.
    std::vector<Index> parent_node;

    [[nodiscard]] std::size_t node_count() const { return nodes.size(); }
    [[nodiscard]] std::size_t triangle_count() const { return triangles.size(); }

    [[nodiscard]] double triangle_area(std::size_t t) const;
    [[nodiscard]] Point2 centroid(std::size_t t) const;
    [[nodiscard]] double edge_length(std::size_t e) const;
    [[nodiscard]] Point2 edge_normal(std::size_t e) const;
    [[nodiscard]] Point2 edge_midpoint(std::size_t e) const;

    [[nodiscard]] double area() const;
    [[nodiscard]] double area(Region region) const;
    [[nodiscard]] double label_length(BoundaryLabel label) const;
    /// Sorted, unique nodes touching edges with the given label.
    [[nodiscard]] std::vector<Index> label_nodes(BoundaryLabel label) const;
    [[nodiscard]] std::vector<std::size_t> label_edges(BoundaryLabel label) const;
    [[nodiscard]] bool has_label(BoundaryLabel label) const;

    /// Throws MeshError on out-of-range indices, non-positive triangles or
    /// size mismatches.
    void validate() const;
};

struct MeshOptions {
    double min_angle_deg = 22.0;
    std::size_t max_vertices = 2'000'000;
    /// When positive, the channel is meshed with edges of about
    /// delta / channel_cells (never coarser than target_h), and the size
    /// grows linearly with distance from the channel at rate `grading`.
    double channel_cells = 0.0;
    double grading = 0.3;
};

/// Conforming triangulation of the lagoon with the interface embedded as
/// mesh edges. The half-domain x <= 0 is meshed and reflected, so the mesh
/// is exactly mirror-symmetric about the channel axis. Edges are at most
/// about 1.15 * target_h long in the interior; boundary curves keep their
/// polygon vertices and are split further where longer than the local size.
TriMesh triangulate(const LagoonGeometry& geom, double target_h, const MeshOptions& options = {});

/// Triangulation of an arbitrary simple counterclockwise polygon; segment i
/// (loop[i] -> loop[i+1]) gets labels[i]. All triangles are tagged Main.
TriMesh triangulate_polygon(const std::vector<Point2>& loop, const std::vector<BoundaryLabel>& labels,
                            double target_h, const MeshOptions& options = {});

/// Triangles of one region with a recorded injection back into the parent's
/// nodes. Interface edges become boundary edges oriented for the region.
TriMesh extract_submesh(const TriMesh& mesh, Region region);

struct MeshQuality {
    double min_angle_deg = 0.0;
    double max_angle_deg = 0.0;
    double max_aspect = 0.0; // circumradius / (2 * inradius); 1 for equilateral
    double h_min = 0.0;      // shortest edge
    double h_max = 0.0;      // longest edge
    std::size_t nodes = 0;
    std::size_t triangles = 0;
    std::size_t edges = 0; // unique triangle edges
    std::size_t gamma_in_edges = 0;
    std::size_t gamma_zero_edges = 0;
    std::size_t interface_edges = 0;
};

MeshQuality mesh_quality_report(const TriMesh& mesh);

/// Unique undirected edges of the triangulation.
std::vector<std::array<Index, 2>> unique_edges(const TriMesh& mesh);

/// Text format: "nodes N" block of "x y", "triangles M" block of
/// "a b c region", "edges K" block of "a b label", optional "parents N".
void write_mesh(std::ostream& os, const TriMesh& mesh);
TriMesh read_mesh(std::istream& is);

} // namespace lagoon
