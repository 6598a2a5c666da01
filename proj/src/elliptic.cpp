#include "lagoon/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lagoon/error.hpp"

namespace lagoon {

void PhysicalParams::validate() const {
    if (!depth) throw InvalidArgument("depth function is empty");
    if (!(theta0 >= 0.0) || !std::isfinite(theta0)) throw InvalidArgument("theta0 must be finite and >= 0");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("nu must be finite and > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be finite and > 0");
}

namespace {

struct EdgeGeometry {
    Point2 a, b, m;
    double length;
};

EdgeGeometry edge_geometry(const TriMesh& mesh, std::size_t e) {
    if (e >= mesh.edges.size()) throw InvalidArgument("flux edge index " + std::to_string(e) + " out of range");
    const auto& ed = mesh.edges[e];
    const Point2 a = mesh.nodes[static_cast<std::size_t>(ed.nodes[0])];
    const Point2 b = mesh.nodes[static_cast<std::size_t>(ed.nodes[1])];
    return {a, b, midpoint(a, b), distance(a, b)};
}

double edge_integral(const TriMesh& mesh, const PhysicalParams& params, const FluxData::EdgeFlux& f) {
    const EdgeGeometry g = edge_geometry(mesh, f.edge);
    return g.length / 6.0 *
           (params.depth(g.a) * f.q_start + 4.0 * params.depth(g.m) * f.q_mid + params.depth(g.b) * f.q_end);
}

double depth_checked(const PhysicalParams& params, Point2 p) {
    const double d = params.depth(p);
    if (!(d > 0.0)) throw InvalidArgument("depth must be positive everywhere");
    return d;
}

// Source integral  int theta phi_i  with the three-edge-midpoint rule.
std::vector<double> assemble_source(const TriMesh& mesh, const PhysicalParams& params, const SourceFunction& source) {
    std::vector<double> load(mesh.node_count(), 0.0);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = mesh.triangle_area(t);
        if (!source) {
            for (Index v : tri) load[static_cast<std::size_t>(v)] += params.theta0 * area / 3.0;
            continue;
        }
        const Point2 p0 = mesh.nodes[static_cast<std::size_t>(tri[0])];
        const Point2 p1 = mesh.nodes[static_cast<std::size_t>(tri[1])];
        const Point2 p2 = mesh.nodes[static_cast<std::size_t>(tri[2])];
        const double s01 = source(midpoint(p0, p1));
        const double s12 = source(midpoint(p1, p2));
        const double s20 = source(midpoint(p2, p0));
        // phi_0 is 1/2 at the midpoints of its two edges and 0 at the third.
        load[static_cast<std::size_t>(tri[0])] += area / 3.0 * 0.5 * (s01 + s20);
        load[static_cast<std::size_t>(tri[1])] += area / 3.0 * 0.5 * (s01 + s12);
        load[static_cast<std::size_t>(tri[2])] += area / 3.0 * 0.5 * (s12 + s20);
    }
    return load;
}

} // namespace

double FluxData::total(const TriMesh& mesh, const PhysicalParams& params) const {
    double s = 0.0;
    for (const auto& f : edges) s += edge_integral(mesh, params, f);
    for (const auto& [node, value] : nodal) s += value;
    return s;
}

double FluxData::total(const TriMesh& mesh, const PhysicalParams& params, BoundaryLabel label) const {
    double s = 0.0;
    for (const auto& f : edges) {
        if (mesh.edges.at(f.edge).label == label) s += edge_integral(mesh, params, f);
    }
    return s;
}

void FluxData::append(const FluxData& other) {
    edges.insert(edges.end(), other.edges.begin(), other.edges.end());
    nodal.insert(nodal.end(), other.nodal.begin(), other.nodal.end());
}

FluxData FluxData::scaled(double factor) const {
    FluxData out = *this;
    for (auto& f : out.edges) {
        f.q_start *= factor;
        f.q_mid *= factor;
        f.q_end *= factor;
    }
    for (auto& n : out.nodal) n.second *= factor;
    return out;
}

std::vector<double> EllipticSystem::load() const {
    std::vector<double> b(source_load.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = source_load[i] + flux_load[i];
    return b;
}

std::vector<double> assemble_flux_load(const TriMesh& mesh, const PhysicalParams& params, const FluxData& flux) {
    std::vector<double> load(mesh.node_count(), 0.0);
    for (const auto& f : flux.edges) {
        const EdgeGeometry g = edge_geometry(mesh, f.edge);
        const double d0 = params.depth(g.a) * f.q_start;
        const double dm = params.depth(g.m) * f.q_mid;
        const double d1 = params.depth(g.b) * f.q_end;
        const auto& ed = mesh.edges[f.edge];
        load[static_cast<std::size_t>(ed.nodes[0])] += g.length * (d0 / 6.0 + dm / 3.0);
        load[static_cast<std::size_t>(ed.nodes[1])] += g.length * (dm / 3.0 + d1 / 6.0);
    }
    for (const auto& [node, value] : flux.nodal) {
        if (node < 0 || static_cast<std::size_t>(node) >= mesh.node_count()) {
            throw InvalidArgument("nodal flux index " + std::to_string(node) + " out of range");
        }
        load[static_cast<std::size_t>(node)] += value;
    }
    return load;
}

EllipticSystem assemble_potential_system(const TriMesh& mesh, const PhysicalParams& params, const FluxData& flux,
                                         const SourceFunction& source) {
    params.validate();
    const std::size_t n = mesh.node_count();
    TripletBuilder builder(n);
    builder.reserve(9 * mesh.triangle_count());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        std::array<Point2, 3> p{};
        for (int k = 0; k < 3; ++k) p[static_cast<std::size_t>(k)] = mesh.nodes[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
        const double area = mesh.triangle_area(t);
        const double d = depth_checked(params, mesh.centroid(t));
        // grad phi_k = perp(opposite edge) / (2 area)
        std::array<Point2, 3> g{};
        for (std::size_t k = 0; k < 3; ++k) {
            const Point2 e = p[(k + 2) % 3] - p[(k + 1) % 3];
            g[k] = Point2{-e.y, e.x} * (1.0 / (2.0 * area));
        }
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                builder.add(static_cast<std::size_t>(tri[i]), static_cast<std::size_t>(tri[j]), d * area * dot(g[i], g[j]));
            }
        }
    }
    EllipticSystem sys;
    sys.stiffness = builder.build(true);
    sys.source_load = assemble_source(mesh, params, source);
    sys.flux_load = assemble_flux_load(mesh, params, flux);
    return sys;
}

FluxData build_entrance_flux(const TriMesh& mesh, const PhysicalParams& params, double extra_outflow) {
    params.validate();
    const auto edges = mesh.label_edges(BoundaryLabel::GammaIn);
    // Normalize by the depth-weighted length so the integrated inflow is exact.
    double weighted = 0.0;
    for (std::size_t e : edges) {
        const EdgeGeometry g = edge_geometry(mesh, e);
        weighted += g.length / 6.0 * (params.depth(g.a) + 4.0 * params.depth(g.m) + params.depth(g.b));
    }
    if (edges.empty() || !(weighted > 0.0)) throw InvalidArgument("mesh has no entrance (GammaIn) edges");
    const double q = -(params.theta0 * mesh.area() + extra_outflow) / weighted;
    FluxData flux;
    flux.edges.reserve(edges.size());
    for (std::size_t e : edges) flux.edges.push_back({e, q, q, q});
    return flux;
}

PotentialSolution solve_potential(const TriMesh& mesh, const PhysicalParams& params, const FluxData& flux,
                                  const PotentialOptions& options, const SourceFunction& source) {
    const EllipticSystem sys = assemble_potential_system(mesh, params, flux, source);
    std::vector<double> b = sys.load();

    double source_total = 0.0, source_abs = 0.0;
    for (double v : sys.source_load) source_total += v, source_abs += std::abs(v);
    const double flux_total = std::accumulate(sys.flux_load.begin(), sys.flux_load.end(), 0.0);

    PotentialSolution sol;
    sol.balance_defect = source_total + flux_total;
    if (options.project_load) {
        // Subtract the L2 projection of the defect onto the constants.
        const double area = mesh.area();
        std::vector<double> mass(mesh.node_count(), 0.0);
        for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
            for (Index v : mesh.triangles[t]) mass[static_cast<std::size_t>(v)] += mesh.triangle_area(t) / 3.0;
        }
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= sol.balance_defect * mass[i] / area;
    } else if (std::abs(sol.balance_defect) > options.balance_tol * std::max(1.0, source_abs)) {
        throw CompatibilityError("flux data does not balance the source: defect " +
                                     std::to_string(sol.balance_defect),
                                 sol.balance_defect);
    }

    SolverOptions so = options.solver;
    so.nullspace = Nullspace::Constants;
    so.compatibility_tol = std::max(so.compatibility_tol, options.balance_tol);
    sol.psi = cg_solve(sys.stiffness, b, so, &sol.report);
    return sol;
}

VelocityField recover_velocity(const TriMesh& mesh, std::span<const double> psi) {
    if (psi.size() != mesh.node_count()) throw InvalidArgument("field size does not match the mesh node count");
    VelocityField u(mesh.triangle_count());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Point2 p0 = mesh.nodes[static_cast<std::size_t>(tri[0])];
        const Point2 p1 = mesh.nodes[static_cast<std::size_t>(tri[1])];
        const Point2 p2 = mesh.nodes[static_cast<std::size_t>(tri[2])];
        const double f0 = psi[static_cast<std::size_t>(tri[0])];
        const double f1 = psi[static_cast<std::size_t>(tri[1])];
        const double f2 = psi[static_cast<std::size_t>(tri[2])];
        const Point2 e1 = p1 - p0;
        const Point2 e2 = p2 - p0;
        const double det = cross(e1, e2);
        const double d1 = f1 - f0;
        const double d2 = f2 - f0;
        u[t] = Point2{(d1 * e2.y - d2 * e1.y) / det, (d2 * e1.x - d1 * e2.x) / det};
    }
    return u;
}

FluxData boundary_flux_extract(const TriMesh& mesh, std::span<const double> psi, const SparseMatrix& a,
                               std::span<const double> b_tilde, BoundaryLabel label) {
    if (psi.size() != mesh.node_count() || a.rows() != mesh.node_count() || b_tilde.size() != mesh.node_count()) {
        throw InvalidArgument("field, matrix and load sizes must match the mesh");
    }
    const auto nodes = mesh.label_nodes(label);
    if (nodes.empty()) throw InvalidArgument(std::string("mesh has no edges labeled ") + std::string(to_string(label)));
    const std::vector<double> r = a.multiply(psi);
    FluxData flux;
    flux.nodal.reserve(nodes.size());
    for (Index v : nodes) {
        const auto i = static_cast<std::size_t>(v);
        flux.nodal.emplace_back(v, r[i] - b_tilde[i]);
    }
    return flux;
}

} // namespace lagoon
