#include "lagoon/mesh.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <limits>
#include <numbers>
#include <tuple>
#include <ostream>
#include <sstream>
#include <string>

#include "lagoon/error.hpp"

namespace lagoon {

double TriMesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    return 0.5 * orient2d(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

Point2 TriMesh::centroid(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point2 s = nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]];
    return {s.x / 3.0, s.y / 3.0};
}

double TriMesh::edge_length(std::size_t e) const {
    return distance(nodes[edges[e].nodes[0]], nodes[edges[e].nodes[1]]);
}

Point2 TriMesh::edge_normal(std::size_t e) const {
    const Point2 d = nodes[edges[e].nodes[1]] - nodes[edges[e].nodes[0]];
    const double len = norm(d);
    return {d.y / len, -d.x / len};
}

Point2 TriMesh::edge_midpoint(std::size_t e) const {
    return midpoint(nodes[edges[e].nodes[0]], nodes[edges[e].nodes[1]]);
}

double TriMesh::area() const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
    return a;
}

double TriMesh::area(Region region) const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        if (regions[t] == region) a += triangle_area(t);
    }
    return a;
}

double TriMesh::label_length(BoundaryLabel label) const {
    double len = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].label == label) len += edge_length(e);
    }
    return len;
}

std::vector<Index> TriMesh::label_nodes(BoundaryLabel label) const {
    std::vector<Index> out;
    for (const LabeledEdge& e : edges) {
        if (e.label != label) continue;
        out.push_back(e.nodes[0]);
        out.push_back(e.nodes[1]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> TriMesh::label_edges(BoundaryLabel label) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].label == label) out.push_back(e);
    }
    return out;
}

bool TriMesh::has_label(BoundaryLabel label) const {
    return std::any_of(edges.begin(), edges.end(), [&](const LabeledEdge& e) { return e.label == label; });
}

void TriMesh::validate() const {
    const auto n = static_cast<Index>(nodes.size());
    if (regions.size() != triangles.size()) throw MeshError("region tags do not match triangle count");
    if (!parent_node.empty() && parent_node.size() != nodes.size())
        throw MeshError("parent injection does not match node count");
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (Index v : triangles[t]) {
            if (v < 0 || v >= n) throw MeshError("triangle references a missing node");
        }
        if (!(triangle_area(t) > 0.0)) throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
    }
    for (const LabeledEdge& e : edges) {
        for (Index v : e.nodes) {
            if (v < 0 || v >= n) throw MeshError("edge references a missing node");
        }
    }
}

namespace {

constexpr int kAxisTag = 3;

int tag_of(BoundaryLabel label) { return static_cast<int>(label); }
BoundaryLabel label_of(int tag) { return static_cast<BoundaryLabel>(tag); }

// Accumulates PSLG points and segments, splitting segments longer than h.
class PslgBuilder {
public:
    explicit PslgBuilder(std::function<double(Point2)> size) : size_(std::move(size)) {}

    Index point(Point2 p) {
        const auto [it, inserted] = index_.try_emplace({p.x, p.y}, static_cast<Index>(pslg_.points.size()));
        if (inserted) pslg_.points.push_back(p);
        return it->second;
    }

    void segment(Point2 a, Point2 b, int tag) {
        const double h = std::min({size_(a), size_(b), size_(midpoint(a, b))});
        const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / h - 1e-9)));
        Index prev = point(a);
        for (int i = 1; i <= n; ++i) {
            const Point2 p = i == n ? b : a + (static_cast<double>(i) / n) * (b - a);
            const Index cur = point(p);
            pslg_.segments.push_back({prev, cur, tag});
            prev = cur;
        }
    }

    [[nodiscard]] const cdt::Pslg& pslg() const { return pslg_; }

private:
    std::function<double(Point2)> size_;
    cdt::Pslg pslg_;
    std::map<std::pair<double, double>, Index> index_;
};

std::uint64_t directed_key(Index a, Index b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

// Orients labeled edges so the owning triangle (Seg for interface edges)
// lies on the left.
void orient_edges(TriMesh& mesh) {
    std::map<std::uint64_t, std::size_t> owner;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i) owner[directed_key(tri[i], tri[(i + 1) % 3])] = t;
    }
    for (LabeledEdge& e : mesh.edges) {
        const auto fwd = owner.find(directed_key(e.nodes[0], e.nodes[1]));
        const auto bwd = owner.find(directed_key(e.nodes[1], e.nodes[0]));
        if (fwd == owner.end() && bwd == owner.end()) throw MeshError("labeled edge is not a mesh edge");
        if (e.label == BoundaryLabel::GammaInterface) {
            if (fwd == owner.end() || bwd == owner.end()) throw MeshError("interface edge on the boundary");
            if (mesh.regions[fwd->second] != Region::Seg) std::swap(e.nodes[0], e.nodes[1]);
            const auto f = owner.find(directed_key(e.nodes[0], e.nodes[1]));
            const auto b = owner.find(directed_key(e.nodes[1], e.nodes[0]));
            if (mesh.regions[f->second] != Region::Seg || mesh.regions[b->second] != Region::Main)
                throw MeshError("interface edge does not separate Main from Seg");
        } else {
            if (fwd != owner.end() && bwd != owner.end()) throw MeshError("boundary edge is interior");
            if (fwd == owner.end()) std::swap(e.nodes[0], e.nodes[1]);
        }
    }
}

// Renumbers nodes in (y, x) order.
void sort_nodes(TriMesh& mesh) {
    std::vector<Index> order(mesh.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const Point2 pa = mesh.nodes[a], pb = mesh.nodes[b];
        return pa.y != pb.y ? pa.y < pb.y : pa.x < pb.x;
    });
    std::vector<Index> remap(order.size());
    std::vector<Point2> nodes(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        remap[order[k]] = static_cast<Index>(k);
        nodes[k] = mesh.nodes[order[k]];
    }
    mesh.nodes = std::move(nodes);
    for (auto& tri : mesh.triangles) {
        for (Index& v : tri) v = remap[v];
    }
    for (auto& e : mesh.edges) {
        for (Index& v : e.nodes) v = remap[v];
    }
}

std::size_t find_point(const std::vector<Point2>& pts, Point2 p) {
    const auto it = std::find(pts.begin(), pts.end(), p);
    if (it == pts.end()) throw MeshError("geometry is missing a construction vertex");
    return static_cast<std::size_t>(it - pts.begin());
}

} // namespace

TriMesh triangulate(const LagoonGeometry& geom, double target_h, const MeshOptions& options) {
    if (!(target_h > 0.0) || !(target_h < 0.5 * geom.params.delta))
        throw InvalidArgument("target_h must satisfy 0 < target_h < delta/2");

    const auto& loop = geom.loop;
    const std::size_t n = loop.size();
    const std::size_t mid = find_point(loop, {0.0, geom.entrance_y});
    const std::size_t top = find_point(loop, {0.0, geom.top_y});

    std::function<double(Point2)> size = [target_h](Point2) { return target_h; };
    if (options.channel_cells > 0.0) {
        const double h_channel = std::min(target_h, geom.params.delta / options.channel_cells);
        const double half_width = 0.5 * geom.params.delta;
        const double half_length = 0.5 * geom.params.channel_length;
        const double grading = options.grading;
        size = [=](Point2 p) {
            const double dx = std::max(0.0, std::abs(p.x) - half_width);
            const double dy = std::max(0.0, std::abs(p.y) - half_length);
            return std::min(target_h, h_channel + grading * std::hypot(dx, dy));
        };
    }
    PslgBuilder builder(size);
    // Left half of the outer loop: top -> left side -> entrance-chord midpoint.
    for (std::size_t i = top; i != mid; i = (i + 1) % n) {
        builder.segment(loop[i], loop[(i + 1) % n], tag_of(geom.segment_labels[i]));
    }
    builder.segment({0.0, geom.entrance_y}, {0.0, 0.0}, kAxisTag);
    builder.segment({0.0, 0.0}, {0.0, geom.top_y}, kAxisTag);
    const std::size_t half = geom.interface.size() / 2;
    if (geom.interface[half] != Point2{0.0, 0.0}) throw MeshError("interface is not centered on the axis");
    for (std::size_t i = 0; i < half; ++i) {
        builder.segment(geom.interface[i], geom.interface[i + 1], tag_of(BoundaryLabel::GammaInterface));
    }

    cdt::RefineOptions ropt;
    ropt.max_circumradius = target_h / std::sqrt(3.0);
    if (options.channel_cells > 0.0) ropt.size_field = [size](Point2 p) { return size(p) / std::sqrt(3.0); };
    ropt.min_angle_deg = options.min_angle_deg;
    ropt.max_vertices = options.max_vertices;
    const cdt::Triangulation half_mesh = cdt::refine(builder.pslg(), ropt);

    TriMesh mesh;
    mesh.nodes = half_mesh.points;
    std::vector<Index> mirror_of(half_mesh.points.size());
    for (std::size_t i = 0; i < half_mesh.points.size(); ++i) {
        const Point2 p = half_mesh.points[i];
        if (p.x > 0.0) throw MeshError("half-domain mesh crossed the symmetry axis");
        if (p.x == 0.0) {
            mirror_of[i] = static_cast<Index>(i);
        } else {
            mirror_of[i] = static_cast<Index>(mesh.nodes.size());
            mesh.nodes.push_back({-p.x, p.y});
        }
    }
    for (const auto& t : half_mesh.triangles) {
        mesh.triangles.push_back(t);
        mesh.triangles.push_back({mirror_of[t[0]], mirror_of[t[2]], mirror_of[t[1]]});
    }
    for (const auto& s : half_mesh.segments) {
        if (s.tag == kAxisTag) continue;
        mesh.edges.push_back({{s.a, s.b}, label_of(s.tag)});
        mesh.edges.push_back({{mirror_of[s.a], mirror_of[s.b]}, label_of(s.tag)});
    }
    sort_nodes(mesh);
    mesh.regions.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        mesh.regions[t] = geom.region_of(mesh.centroid(t));
    }
    orient_edges(mesh);
    std::sort(mesh.edges.begin(), mesh.edges.end(), [](const LabeledEdge& a, const LabeledEdge& b) {
        return std::tie(a.label, a.nodes) < std::tie(b.label, b.nodes);
    });
    mesh.validate();
    return mesh;
}

TriMesh triangulate_polygon(const std::vector<Point2>& loop, const std::vector<BoundaryLabel>& labels,
                            double target_h, const MeshOptions& options) {
    if (loop.size() < 3 || labels.size() != loop.size()) throw InvalidArgument("polygon needs >= 3 labeled vertices");
    if (!(target_h > 0.0)) throw InvalidArgument("target_h must be positive");
    PslgBuilder builder([target_h](Point2) { return target_h; });
    for (std::size_t i = 0; i < loop.size(); ++i) {
        builder.segment(loop[i], loop[(i + 1) % loop.size()], tag_of(labels[i]));
    }
    cdt::RefineOptions ropt;
    ropt.max_circumradius = target_h / std::sqrt(3.0);
    ropt.min_angle_deg = options.min_angle_deg;
    ropt.max_vertices = options.max_vertices;
    const cdt::Triangulation tri = cdt::refine(builder.pslg(), ropt);

    TriMesh mesh;
    mesh.nodes = tri.points;
    mesh.triangles = tri.triangles;
    for (const auto& s : tri.segments) mesh.edges.push_back({{s.a, s.b}, label_of(s.tag)});
    sort_nodes(mesh);
    mesh.regions.assign(mesh.triangles.size(), Region::Main);
    orient_edges(mesh);
    std::sort(mesh.edges.begin(), mesh.edges.end(), [](const LabeledEdge& a, const LabeledEdge& b) {
        return std::tie(a.label, a.nodes) < std::tie(b.label, b.nodes);
    });
    mesh.validate();
    return mesh;
}

TriMesh extract_submesh(const TriMesh& mesh, Region region) {
    TriMesh sub;
    std::vector<Index> local(mesh.nodes.size(), -1);
    std::map<std::uint64_t, std::size_t> owner;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (mesh.regions[t] != region) continue;
        std::array<Index, 3> tri{};
        for (int i = 0; i < 3; ++i) {
            const Index g = mesh.triangles[t][i];
            if (local[g] < 0) {
                local[g] = static_cast<Index>(sub.nodes.size());
                sub.nodes.push_back(mesh.nodes[g]);
                sub.parent_node.push_back(g);
            }
            tri[i] = local[g];
        }
        for (int i = 0; i < 3; ++i) owner[directed_key(mesh.triangles[t][i], mesh.triangles[t][(i + 1) % 3])] = t;
        sub.triangles.push_back(tri);
        sub.regions.push_back(region);
    }
    for (const LabeledEdge& e : mesh.edges) {
        LabeledEdge le = e;
        if (e.label == BoundaryLabel::GammaInterface && region == Region::Main) std::swap(le.nodes[0], le.nodes[1]);
        if (owner.find(directed_key(le.nodes[0], le.nodes[1])) == owner.end()) continue;
        le.nodes = {local[le.nodes[0]], local[le.nodes[1]]};
        sub.edges.push_back(le);
    }
    sub.validate();
    return sub;
}

std::vector<std::array<Index, 2>> unique_edges(const TriMesh& mesh) {
    std::vector<std::array<Index, 2>> out;
    out.reserve(3 * mesh.triangles.size());
    for (const auto& tri : mesh.triangles) {
        for (int i = 0; i < 3; ++i) {
            const Index a = tri[i], b = tri[(i + 1) % 3];
            out.push_back({std::min(a, b), std::max(a, b)});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MeshQuality mesh_quality_report(const TriMesh& mesh) {
    MeshQuality q;
    q.nodes = mesh.nodes.size();
    q.triangles = mesh.triangles.size();
    q.edges = unique_edges(mesh).size();
    q.min_angle_deg = 180.0;
    q.h_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Point2 p[3] = {mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]};
        const double len[3] = {distance(p[1], p[2]), distance(p[2], p[0]), distance(p[0], p[1])};
        for (int i = 0; i < 3; ++i) {
            const double a = len[i], b = len[(i + 1) % 3], c = len[(i + 2) % 3];
            const double cosine = std::clamp((b * b + c * c - a * a) / (2.0 * b * c), -1.0, 1.0);
            const double angle = std::acos(cosine) * 180.0 / std::numbers::pi;
            q.min_angle_deg = std::min(q.min_angle_deg, angle);
            q.max_angle_deg = std::max(q.max_angle_deg, angle);
            q.h_min = std::min(q.h_min, a);
            q.h_max = std::max(q.h_max, a);
        }
        const double area = mesh.triangle_area(t);
        const double aspect = len[0] * len[1] * len[2] * (len[0] + len[1] + len[2]) / (16.0 * area * area);
        q.max_aspect = std::max(q.max_aspect, aspect);
    }
    for (const LabeledEdge& e : mesh.edges) {
        switch (e.label) {
        case BoundaryLabel::GammaIn: ++q.gamma_in_edges; break;
        case BoundaryLabel::GammaZero: ++q.gamma_zero_edges; break;
        case BoundaryLabel::GammaInterface: ++q.interface_edges; break;
        }
    }
    return q;
}

void write_mesh(std::ostream& os, const TriMesh& mesh) {
    os << std::setprecision(17);
    os << "nodes " << mesh.nodes.size() << '\n';
    for (const Point2& p : mesh.nodes) os << p.x << ' ' << p.y << '\n';
    os << "triangles " << mesh.triangles.size() << '\n';
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        os << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << to_string(mesh.regions[t]) << '\n';
    }
    os << "edges " << mesh.edges.size() << '\n';
    for (const LabeledEdge& e : mesh.edges) os << e.nodes[0] << ' ' << e.nodes[1] << ' ' << to_string(e.label) << '\n';
    if (!mesh.parent_node.empty()) {
        os << "parents " << mesh.parent_node.size() << '\n';
        for (Index p : mesh.parent_node) os << p << '\n';
    }
}

TriMesh read_mesh(std::istream& is) {
    TriMesh mesh;
    std::string word;
    std::size_t count = 0;
    const auto expect = [&](const char* name) {
        if (!(is >> word >> count) || word != name) throw MeshError(std::string("mesh file: expected block '") + name + "'");
    };
    expect("nodes");
    mesh.nodes.resize(count);
    for (Point2& p : mesh.nodes) {
        if (!(is >> p.x >> p.y)) throw MeshError("mesh file: truncated node block");
    }
    expect("triangles");
    mesh.triangles.resize(count);
    mesh.regions.resize(count);
    for (std::size_t t = 0; t < count; ++t) {
        auto& tri = mesh.triangles[t];
        if (!(is >> tri[0] >> tri[1] >> tri[2] >> word)) throw MeshError("mesh file: truncated triangle block");
        if (word == "Main") mesh.regions[t] = Region::Main;
        else if (word == "Seg") mesh.regions[t] = Region::Seg;
        else throw MeshError("mesh file: unknown region '" + word + "'");
    }
    expect("edges");
    mesh.edges.resize(count);
    for (LabeledEdge& e : mesh.edges) {
        if (!(is >> e.nodes[0] >> e.nodes[1] >> word)) throw MeshError("mesh file: truncated edge block");
        if (word == "GammaIn") e.label = BoundaryLabel::GammaIn;
        else if (word == "GammaZero") e.label = BoundaryLabel::GammaZero;
        else if (word == "GammaInterface") e.label = BoundaryLabel::GammaInterface;
        else throw MeshError("mesh file: unknown label '" + word + "'");
    }
    if (is >> word) {
        if (word != "parents" || !(is >> count)) throw MeshError("mesh file: unexpected trailing block");
        mesh.parent_node.resize(count);
        for (Index& p : mesh.parent_node) {
            if (!(is >> p)) throw MeshError("mesh file: truncated parents block");
        }
    }
    mesh.validate();
    return mesh;
}

} // namespace lagoon
