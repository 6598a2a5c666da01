#include "lagoon/decomposition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "lagoon/error.hpp"

namespace lagoon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr Point2 kTransDirection{0.0, 1.0}; // Main -> Seg across the interface

double simpson(double length, double a, double m, double b) { return length / 6.0 * (a + 4.0 * m + b); }

struct EdgePoints {
    Point2 a, m, b;
    double length;
};

EdgePoints edge_points(const TriMesh& mesh, std::size_t e) {
    const Point2 a = mesh.nodes[static_cast<std::size_t>(mesh.edges[e].nodes[0])];
    const Point2 b = mesh.nodes[static_cast<std::size_t>(mesh.edges[e].nodes[1])];
    return {a, midpoint(a, b), b, distance(a, b)};
}

std::vector<std::size_t> interface_edges(const TriMesh& full) {
    auto edges = full.label_edges(BoundaryLabel::GammaInterface);
    if (edges.empty() || !(full.label_length(BoundaryLabel::GammaInterface) > 0.0)) {
        throw InvalidArgument("mesh has no interface edges");
    }
    return edges;
}

double seg_evaporation(const TriMesh& full, const PhysicalParams& params) {
    return params.theta0 * full.area(Region::Seg);
}

double depth_weighted(const TriMesh& full, const PhysicalParams& params, const FluxData::EdgeFlux& f) {
    const EdgePoints p = edge_points(full, f.edge);
    return simpson(p.length, params.depth(p.a) * f.q_start, params.depth(p.m) * f.q_mid, params.depth(p.b) * f.q_end);
}

void rescale_edges(InterfaceFlux& flux, const TriMesh& full, const PhysicalParams& params) {
    double total = 0.0;
    for (const auto& f : flux.edges) total += depth_weighted(full, params, f);
    if (flux.q_seg == 0.0) {
        for (auto& f : flux.edges) f.q_start = f.q_mid = f.q_end = 0.0;
        flux.rescale = total == 0.0 ? 1.0 : 0.0;
        return;
    }
    if (!(std::abs(total) > 0.0)) throw SolverError("interface flux integrates to zero and cannot be rescaled", {});
    flux.rescale = flux.q_seg / total;
    for (auto& f : flux.edges) {
        f.q_start *= flux.rescale;
        f.q_mid *= flux.rescale;
        f.q_end *= flux.rescale;
    }
}

std::vector<Index> inverse_injection(const TriMesh& sub, std::size_t parent_nodes) {
    std::vector<Index> inv(parent_nodes, -1);
    for (std::size_t i = 0; i < sub.parent_node.size(); ++i) inv[static_cast<std::size_t>(sub.parent_node[i])] = static_cast<Index>(i);
    return inv;
}

std::uint64_t pair_key(Index a, Index b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

double InterfaceFlux::total(const TriMesh& full, const PhysicalParams& params) const {
    double s = 0.0;
    for (const auto& f : edges) s += depth_weighted(full, params, f);
    for (const auto& n : nodal) s += n.second;
    return s;
}

InterfaceFlux interface_flux(const TriMesh& full, const InterfaceProfile& profile, const PhysicalParams& params) {
    params.validate();
    if (profile.kind != ProfileKind::Poiseuille && profile.kind != ProfileKind::Constant) {
        throw InvalidArgument("model interface profile must be poiseuille or constant");
    }
    const auto edges = interface_edges(full);
    const auto nodes = full.label_nodes(BoundaryLabel::GammaInterface);
    Point2 left = full.nodes[static_cast<std::size_t>(nodes.front())];
    Point2 right = left;
    for (Index v : nodes) {
        const Point2 p = full.nodes[static_cast<std::size_t>(v)];
        if (p.x < left.x) left = p;
        if (p.x > right.x) right = p;
    }
    const double width = distance(left, right);
    const InterfaceProfile shape{profile.kind, width};
    const auto weight = [&](Point2 p) { return shape.weight(std::clamp(distance(p, left), 0.0, width)); };

    InterfaceFlux flux;
    flux.kind = profile.kind;
    flux.q_seg = seg_evaporation(full, params);
    for (std::size_t e : edges) {
        const EdgePoints p = edge_points(full, e);
        flux.edges.push_back({e, weight(p.a), weight(p.m), weight(p.b)});
    }
    rescale_edges(flux, full, params);
    return flux;
}

InterfaceFlux exact_pointwise_profile(const TriMesh& full, const VelocityField& u_ref, const PhysicalParams& params) {
    params.validate();
    if (u_ref.size() != full.triangle_count()) throw InvalidArgument("velocity field size does not match the mesh");
    const auto edges = interface_edges(full);
    std::map<std::uint64_t, std::size_t> main_side;
    for (std::size_t t = 0; t < full.triangle_count(); ++t) {
        if (full.regions[t] != Region::Main) continue;
        const auto& tri = full.triangles[t];
        for (std::size_t k = 0; k < 3; ++k) main_side[pair_key(tri[k], tri[(k + 1) % 3])] = t;
    }
    InterfaceFlux flux;
    flux.kind = ProfileKind::ExactPointwise;
    flux.q_seg = seg_evaporation(full, params);
    for (std::size_t e : edges) {
        const auto it = main_side.find(pair_key(full.edges[e].nodes[0], full.edges[e].nodes[1]));
        if (it == main_side.end()) throw MeshError("interface edge without a Main-side triangle");
        const double q = dot(u_ref[it->second], kTransDirection);
        flux.edges.push_back({e, q, q, q});
    }
    rescale_edges(flux, full, params);
    return flux;
}

InterfaceFlux exact_variational_profile(const TriMesh& full, const TriMesh& main, std::span<const double> psi_ref,
                                        const PhysicalParams& params) {
    if (psi_ref.size() != full.node_count()) throw InvalidArgument("reference potential size does not match the mesh");
    InterfaceFlux flux;
    flux.kind = ProfileKind::ExactVariational;
    flux.q_seg = seg_evaporation(full, params);
    std::vector<double> restricted(main.node_count());
    for (std::size_t i = 0; i < restricted.size(); ++i) restricted[i] = psi_ref[static_cast<std::size_t>(main.parent_node[i])];
    const FluxData inflow = build_entrance_flux(main, params, flux.q_seg);
    const EllipticSystem sys = assemble_potential_system(main, params, inflow);
    const FluxData local = boundary_flux_extract(main, restricted, sys.stiffness, sys.load(), BoundaryLabel::GammaInterface);
    for (const auto& [node, value] : local.nodal) flux.nodal.emplace_back(main.parent_node[static_cast<std::size_t>(node)], value);
    return flux;
}

FluxData restrict_interface_flux(const InterfaceFlux& flux, const TriMesh& full, const TriMesh& sub) {
    if (sub.parent_node.size() != sub.node_count()) throw InvalidArgument("submesh has no parent injection");
    std::map<std::uint64_t, std::size_t> sub_edges;
    for (std::size_t e = 0; e < sub.edges.size(); ++e) {
        if (sub.edges[e].label != BoundaryLabel::GammaInterface) continue;
        const Index a = sub.parent_node[static_cast<std::size_t>(sub.edges[e].nodes[0])];
        const Index b = sub.parent_node[static_cast<std::size_t>(sub.edges[e].nodes[1])];
        sub_edges[pair_key(a, b)] = e;
    }
    FluxData out;
    int side = 0;
    for (const auto& f : flux.edges) {
        const auto& fe = full.edges.at(f.edge);
        const auto it = sub_edges.find(pair_key(fe.nodes[0], fe.nodes[1]));
        if (it == sub_edges.end()) throw InvalidArgument("interface edge missing from the submesh");
        const auto& se = sub.edges[it->second];
        const bool same = sub.parent_node[static_cast<std::size_t>(se.nodes[0])] == fe.nodes[0];
        // Full-mesh interface edges have Seg on the left; Main reverses them.
        if (same) {
            out.edges.push_back({it->second, -f.q_start, -f.q_mid, -f.q_end});
        } else {
            out.edges.push_back({it->second, f.q_end, f.q_mid, f.q_start});
        }
        side = same ? -1 : 1;
    }
    if (!flux.nodal.empty()) {
        if (side == 0) {
            const bool is_main = std::all_of(sub.regions.begin(), sub.regions.end(), [](Region r) { return r == Region::Main; });
            side = is_main ? 1 : -1;
        }
        const std::vector<Index> inv = inverse_injection(sub, full.node_count());
        for (const auto& [node, value] : flux.nodal) {
            const Index local = inv.at(static_cast<std::size_t>(node));
            if (local < 0) throw InvalidArgument("interface node missing from the submesh");
            out.nodal.emplace_back(local, side * value);
        }
    }
    return out;
}

ReferenceRun run_reference(const TriMesh& full, const PhysicalParams& params, const TransportConfig& transport,
                           const DecompositionOptions& options) {
    params.validate();
    ReferenceRun ref;
    ref.mesh = full;
    ref.main_mesh = extract_submesh(full, Region::Main);
    ref.seg_mesh = extract_submesh(full, Region::Seg);

    auto start = Clock::now();
    const FluxData inflow = build_entrance_flux(full, params);
    PotentialSolution pot = solve_potential(full, params, inflow, options.potential);
    ref.fields.psi = std::move(pot.psi);
    ref.fields.potential_report = pot.report;
    ref.fields.u = recover_velocity(full, ref.fields.psi);
    ref.t_psi_s = seconds_since(start);

    start = Clock::now();
    TransportConfig cfg = transport;
    cfg.dirichlet_labels = {BoundaryLabel::GammaIn};
    cfg.neumann_labels = {};
    ref.fields.transport = run_confinement(full, ref.fields.u, cfg);
    ref.fields.g = ref.fields.transport.g;
    ref.t_transport_s = seconds_since(start);
    return ref;
}

FieldSet solve_main(const ReferenceRun& ref, const InterfaceFlux& flux, const PhysicalParams& params,
                    const TransportConfig& transport, const DecompositionOptions& options, TraceRecord* trace,
                    double* balance_defect) {
    const TriMesh& main = ref.main_mesh;
    const double q_interface = flux.total(ref.mesh, params);
    FluxData data = build_entrance_flux(main, params, q_interface);
    if (balance_defect) {
        *balance_defect = data.total(main, params, BoundaryLabel::GammaIn) + params.theta0 * main.area() + flux.q_seg;
    }
    data.append(restrict_interface_flux(flux, ref.mesh, main));

    FieldSet out;
    auto start = Clock::now();
    PotentialSolution pot = solve_potential(main, params, data, options.potential);
    out.psi = std::move(pot.psi);
    out.potential_report = pot.report;
    out.u = recover_velocity(main, out.psi);
    out.t_psi_s = seconds_since(start);
    start = Clock::now();

    TransportConfig cfg = transport;
    cfg.dirichlet_labels = {BoundaryLabel::GammaIn};
    cfg.neumann_labels = {BoundaryLabel::GammaInterface};
    TransportHooks hooks;
    hooks.record_nodes = main.label_nodes(BoundaryLabel::GammaInterface);
    out.transport = run_confinement(main, out.u, cfg, hooks);
    out.g = out.transport.g;
    out.t_transport_s = seconds_since(start);
    if (trace) *trace = out.transport.record;
    return out;
}

FieldSet solve_seg(const ReferenceRun& ref, const InterfaceFlux& flux, const TraceRecord& main_trace,
                   const PhysicalParams& params, const TransportConfig& transport,
                   const DecompositionOptions& options, double* balance_defect) {
    const TriMesh& seg = ref.seg_mesh;
    const FluxData data = restrict_interface_flux(flux, ref.mesh, seg);
    if (balance_defect) *balance_defect = data.total(seg, params) + params.theta0 * seg.area();

    FieldSet out;
    auto start = Clock::now();
    PotentialSolution pot = solve_potential(seg, params, data, options.potential);
    out.psi = std::move(pot.psi);
    out.potential_report = pot.report;
    out.u = recover_velocity(seg, out.psi);
    out.t_psi_s = seconds_since(start);

    const std::vector<Index> inv = inverse_injection(seg, ref.mesh.node_count());
    TraceRecord local;
    local.values = main_trace.values;
    local.nodes.reserve(main_trace.nodes.size());
    for (Index v : main_trace.nodes) {
        const Index parent = ref.main_mesh.parent_node.at(static_cast<std::size_t>(v));
        const Index s = inv.at(static_cast<std::size_t>(parent));
        if (s < 0) throw InvalidArgument("trace node is not on the Seg submesh");
        local.nodes.push_back(s);
    }

    TransportConfig cfg = transport;
    cfg.dirichlet_labels = {};
    cfg.neumann_labels = {};
    TransportHooks hooks;
    hooks.dirichlet_trace = &local;
    start = Clock::now();
    out.transport = run_confinement(seg, out.u, cfg, hooks);
    out.g = out.transport.g;
    out.t_transport_s = seconds_since(start);
    return out;
}

CoupledRun run_decomposition(const ReferenceRun& ref, ProfileKind kind, const PhysicalParams& params,
                             const TransportConfig& transport, const DecompositionOptions& options) {
    CoupledRun run;
    run.profile_kind = kind;
    auto start = Clock::now();
    switch (kind) {
    case ProfileKind::Poiseuille:
    case ProfileKind::Constant:
        run.flux = interface_flux(ref.mesh, InterfaceProfile{kind, ref.mesh.label_length(BoundaryLabel::GammaInterface)},
                                  params);
        break;
    case ProfileKind::ExactPointwise:
        run.flux = exact_pointwise_profile(ref.mesh, ref.fields.u, params);
        break;
    case ProfileKind::ExactVariational:
        run.flux = exact_variational_profile(ref.mesh, ref.main_mesh, ref.fields.psi, params);
        break;
    }
    run.t_psi_s = seconds_since(start);

    run.main = solve_main(ref, run.flux, params, transport, options, &run.trace, &run.main_balance_defect);
    run.t_psi_s += run.main.t_psi_s;
    run.t_transport_s = run.main.t_transport_s;

    std::vector<double> restricted(ref.main_mesh.node_count());
    for (std::size_t i = 0; i < restricted.size(); ++i) {
        restricted[i] = ref.fields.psi[static_cast<std::size_t>(ref.main_mesh.parent_node[i])];
    }
    const double shift = mean(restricted) - mean(run.main.psi);
    for (std::size_t i = 0; i < restricted.size(); ++i) {
        run.max_psi_deviation = std::max(run.max_psi_deviation, std::abs(run.main.psi[i] + shift - restricted[i]));
    }

    const double T = transport.T;
    run.main_error = linf_relative_error(run.main.g, ref.fields.g, ref.main_mesh.parent_node, T, options.error_floor);
    if (options.solve_seg) {
        run.seg = solve_seg(ref, run.flux, run.trace, params, transport, options, &run.seg_balance_defect);
        run.seg_error = linf_relative_error(run.seg->g, ref.fields.g, ref.seg_mesh.parent_node, T, options.error_floor);
        run.t_psi_s += run.seg->t_psi_s;
        run.t_transport_s += run.seg->t_transport_s;
    }
    return run;
}

ErrorMetric linf_relative_error(std::span<const double> g_test, std::span<const double> g_ref,
                                std::span<const Index> injection, double T, double floor) {
    if (g_test.size() != injection.size()) throw InvalidArgument("test field and injection sizes differ");
    if (floor < 0.0 || !(T > 0.0)) throw InvalidArgument("floor must be >= 0 and T > 0");
    ErrorMetric m;
    m.floor = floor * T;
    for (std::size_t i = 0; i < g_test.size(); ++i) {
        const auto parent = static_cast<std::size_t>(injection[i]);
        if (parent >= g_ref.size()) throw InvalidArgument("injection index out of range");
        const double ref = g_ref[parent];
        const double diff = std::abs(g_test[i] - ref);
        m.absolute = std::max(m.absolute, diff);
        if (!(std::abs(ref) > m.floor)) continue;
        ++m.counted;
        const double rel = diff / std::abs(ref);
        if (rel > m.relative || m.argmax < 0) {
            m.relative = rel;
            m.argmax = static_cast<Index>(i);
        }
    }
    if (m.counted == 0) throw InvalidArgument("every node falls below the error floor");
    return m;
}

ScalarField pipeline_field(const ReferenceRun& ref, std::span<const double> g_main, std::span<const double> g_seg) {
    if (g_main.size() != ref.main_mesh.node_count() || g_seg.size() != ref.seg_mesh.node_count()) {
        throw InvalidArgument("submesh field sizes do not match");
    }
    ScalarField g(ref.mesh.node_count(), 0.0);
    for (std::size_t i = 0; i < g_seg.size(); ++i) g[static_cast<std::size_t>(ref.seg_mesh.parent_node[i])] = g_seg[i];
    for (std::size_t i = 0; i < g_main.size(); ++i) g[static_cast<std::size_t>(ref.main_mesh.parent_node[i])] = g_main[i];
    return g;
}

} // namespace lagoon
