#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lagoon/point.hpp"

namespace lagoon {

enum class BoundaryLabel { GammaIn, GammaZero, GammaInterface };
enum class Region { Main, Seg };

std::string_view to_string(BoundaryLabel label);
std::string_view to_string(Region region);

/// Shape parameters of the two-chamber lagoon: a main disk with a straight
/// entrance chord at the bottom and a secondary disk on top, joined by a
/// vertical channel whose mid-height cross-section is the interface.
struct GeometryParams {
    double r_main = 1.0;
    double r_seg = 0.6;
    double channel_length = 0.5;
    double delta = 0.2;           // channel (interface) width
    double entrance_width = 0.45; // length of the entrance chord
    double boundary_segments_per_unit = 200.0;

    /// Throws GeometryError when the parameter set cannot produce a valid domain.
    void validate() const;
};

/// An open labeled polyline of the boundary.
struct Curve {
    BoundaryLabel label;
    std::vector<Point2> points;

    [[nodiscard]] double length() const;
};

struct LagoonGeometry {
    GeometryParams params;

    /// Closed counterclockwise outer loop, no repeated end vertex. Segment
    /// i joins loop[i] and loop[(i + 1) % size].
    std::vector<Point2> loop;
    std::vector<BoundaryLabel> segment_labels;

    /// Interface polyline from the left channel wall to the right one (y = 0).
    std::vector<Point2> interface;

    Point2 main_center;
    Point2 seg_center;
    double entrance_y = 0.0; // height of the entrance chord
    double top_y = 0.0;      // top of the secondary disk

    double area_total = 0.0;
    double area_main = 0.0;
    double area_seg = 0.0;

    [[nodiscard]] Region region_of(Point2 p) const { return p.y < 0.0 ? Region::Main : Region::Seg; }

    /// Maximal runs of equally labeled loop segments, followed by the interface.
    [[nodiscard]] std::vector<Curve> curves() const;

    /// Polygon of the main sub-lagoon (loop part below the interface closed by it).
    [[nodiscard]] std::vector<Point2> main_polygon() const;
    [[nodiscard]] std::vector<Point2> seg_polygon() const;
};

LagoonGeometry build_lagoon(const GeometryParams& params);

/// Same as build_lagoon but r_seg is adjusted so that both sub-lagoons have
/// the same polygon area.
LagoonGeometry build_equal_area_lagoon(GeometryParams params);

/// Plain-text export: one block per curve, "label count" then "x y" lines.
void write_polygon_file(std::ostream& os, const LagoonGeometry& geom);

enum class ProfileKind { Poiseuille, Constant, ExactPointwise, ExactVariational };

std::string_view to_string(ProfileKind kind);
ProfileKind parse_profile_kind(std::string_view text);

/// Shape of the normal velocity across the interface, normalized to unit
/// integral over [0, width].
struct InterfaceProfile {
    ProfileKind kind = ProfileKind::Poiseuille;
    double width = 0.2;

    /// Weight per unit length at arc position s in [0, width]. Only defined
    /// for the analytic kinds (Poiseuille, Constant).
    [[nodiscard]] double weight(double s) const;
};

} // namespace lagoon
