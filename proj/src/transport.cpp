#include "lagoon/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lagoon/error.hpp"

namespace lagoon {

std::size_t TransportConfig::steps() const {
    const double h = time_step();
    const double n = std::round(T / h);
    if (n < 1.0 || std::abs(n * h - T) > 1e-9 * T) {
        throw InvalidArgument("time step must divide the horizon T into a whole number of steps");
    }
    return static_cast<std::size_t>(n);
}

void TransportConfig::validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("nu must be finite and > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be finite and > 0");
    if (dt < 0.0 || !std::isfinite(dt)) throw InvalidArgument("dt must be finite and > 0");
    if (time_step() > T) throw InvalidArgument("dt must not exceed T");
    if (supg_parameter < 0.0) throw InvalidArgument("supg_parameter must be >= 0");
    for (BoundaryLabel l : dirichlet_labels) {
        if (neumann_labels.count(l)) {
            throw InvalidArgument(std::string("label ") + std::string(to_string(l)) +
                                  " is both Dirichlet and Neumann");
        }
    }
    (void)steps();
}

namespace {

struct Element {
    std::array<std::size_t, 3> v{};
    std::array<Point2, 3> grad{};
    double area = 0.0;
    double diameter = 0.0;
};

Element element(const TriMesh& mesh, std::size_t t) {
    Element el;
    std::array<Point2, 3> p{};
    for (std::size_t k = 0; k < 3; ++k) {
        el.v[k] = static_cast<std::size_t>(mesh.triangles[t][k]);
        p[k] = mesh.nodes[el.v[k]];
    }
    el.area = mesh.triangle_area(t);
    for (std::size_t k = 0; k < 3; ++k) {
        const Point2 e = p[(k + 2) % 3] - p[(k + 1) % 3];
        el.grad[k] = Point2{-e.y, e.x} * (1.0 / (2.0 * el.area));
        el.diameter = std::max(el.diameter, norm(e));
    }
    return el;
}

void accumulate(TripletBuilder& out, const SparseMatrix& m, double scale) {
    const auto off = m.row_offsets();
    const auto cols = m.columns();
    const auto vals = m.values();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) out.add(i, static_cast<std::size_t>(cols[k]), scale * vals[k]);
    }
}

std::vector<Index> ramp_nodes(const TriMesh& mesh, const TransportConfig& cfg) {
    std::vector<Index> nodes;
    for (BoundaryLabel l : cfg.dirichlet_labels) {
        const auto ln = mesh.label_nodes(l);
        nodes.insert(nodes.end(), ln.begin(), ln.end());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

struct SteppingOperators {
    SparseMatrix lhs; // Dirichlet rows replaced by identity
    SparseMatrix rhs; // (M + M_supg) / dt
    std::vector<char> is_dirichlet;
    double max_cell_peclet = 0.0;
};

SteppingOperators build_stepping(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg,
                                 const std::vector<Index>& dirichlet) {
    const TransportOperators ops = assemble_transport_operators(mesh, u, cfg);
    const std::size_t n = mesh.node_count();
    const double inv_dt = 1.0 / cfg.time_step();

    SteppingOperators s;
    s.max_cell_peclet = ops.max_cell_peclet;
    s.is_dirichlet.assign(n, 0);
    for (Index v : dirichlet) s.is_dirichlet[static_cast<std::size_t>(v)] = 1;

    TripletBuilder rb(n);
    accumulate(rb, ops.mass, inv_dt);
    accumulate(rb, ops.supg_mass, inv_dt);
    s.rhs = rb.build(false);

    TripletBuilder full(n);
    accumulate(full, s.rhs, 1.0);
    accumulate(full, ops.advection, 1.0);
    accumulate(full, ops.diffusion, cfg.nu);
    accumulate(full, ops.supg, 1.0);
    const SparseMatrix a = full.build(false);

    TripletBuilder lb(n);
    lb.reserve(a.nonzeros());
    const auto off = a.row_offsets();
    const auto cols = a.columns();
    const auto vals = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        if (s.is_dirichlet[i]) {
            lb.add(i, i, 1.0);
            continue;
        }
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) lb.add(i, static_cast<std::size_t>(cols[k]), vals[k]);
    }
    s.lhs = lb.build(false);
    return s;
}

std::vector<Index> merged(std::vector<Index> a, const std::vector<Index>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

double ramp_value(const TransportConfig& cfg, std::size_t step, std::size_t steps) {
    return step >= steps ? 0.0 : cfg.T - cfg.T * static_cast<double>(step) / static_cast<double>(steps);
}

void check_trace_nodes(const TriMesh& mesh, const std::vector<Index>& nodes, std::size_t values) {
    if (nodes.size() != values) throw InvalidArgument("trace node and value counts differ");
    for (Index v : nodes) {
        if (v < 0 || static_cast<std::size_t>(v) >= mesh.node_count()) throw InvalidArgument("trace node out of range");
    }
}

} // namespace

TransportOperators assemble_transport_operators(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg) {
    cfg.validate();
    if (u.size() != mesh.triangle_count()) throw InvalidArgument("velocity field size does not match the triangle count");
    const std::size_t n = mesh.node_count();
    const double dt = cfg.time_step();
    TripletBuilder mass(n), adv(n), diff(n), supg(n), supg_mass(n);
    for (auto* b : {&mass, &adv, &diff, &supg, &supg_mass}) b->reserve(9 * mesh.triangle_count());

    TransportOperators ops;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const Element el = element(mesh, t);
        const Point2 ut = u[t];
        const double speed = norm(ut);
        std::array<double, 3> ug{};
        double ug_abs = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            ug[k] = dot(ut, el.grad[k]);
            ug_abs += std::abs(ug[k]);
        }
        ops.max_cell_peclet = std::max(ops.max_cell_peclet, speed * el.diameter / (2.0 * cfg.nu));
        // Streamline element length h_u = 2|u| / sum_k |u.grad phi_k|.
        double tau = 0.0;
        if (cfg.supg && ug_abs > 0.0) tau = cfg.supg_parameter * std::min(1.0 / ug_abs, dt);

        for (std::size_t i = 0; i < 3; ++i) {
            if (cfg.lumped_mass) {
                mass.add(el.v[i], el.v[i], el.area / 3.0);
            }
            for (std::size_t j = 0; j < 3; ++j) {
                if (!cfg.lumped_mass) mass.add(el.v[i], el.v[j], el.area * (i == j ? 2.0 : 1.0) / 12.0);
                adv.add(el.v[i], el.v[j], el.area / 3.0 * ug[j]);
                diff.add(el.v[i], el.v[j], el.area * dot(el.grad[i], el.grad[j]));
                if (tau > 0.0) {
                    supg.add(el.v[i], el.v[j], tau * el.area * ug[i] * ug[j]);
                    supg_mass.add(el.v[i], el.v[j], tau * el.area / 3.0 * ug[i]);
                }
            }
        }
    }
    ops.mass = mass.build(true);
    ops.advection = adv.build(false);
    ops.diffusion = diff.build(true);
    ops.supg = supg.build(true);
    ops.supg_mass = supg_mass.build(false);
    return ops;
}

TransportSystem assemble_transport_step(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg,
                                        std::span<const double> g_prev, std::size_t step,
                                        const std::vector<Index>& trace_nodes, std::span<const double> trace_values) {
    if (g_prev.size() != mesh.node_count()) throw InvalidArgument("previous field size does not match the mesh");
    check_trace_nodes(mesh, trace_nodes, trace_values.size());
    const std::vector<Index> ramp = ramp_nodes(mesh, cfg);
    const SteppingOperators s = build_stepping(mesh, u, cfg, merged(ramp, trace_nodes));
    TransportSystem sys;
    sys.matrix = s.lhs;
    sys.rhs = s.rhs.multiply(g_prev);
    const double value = ramp_value(cfg, step, cfg.steps());
    for (Index v : ramp) sys.rhs[static_cast<std::size_t>(v)] = value;
    for (std::size_t k = 0; k < trace_nodes.size(); ++k) sys.rhs[static_cast<std::size_t>(trace_nodes[k])] = trace_values[k];
    sys.dirichlet_nodes = merged(ramp, trace_nodes);
    return sys;
}

TransportResult run_confinement(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg,
                                const TransportHooks& hooks) {
    cfg.validate();
    const std::size_t steps = cfg.steps();
    const double dt = cfg.time_step();
    const std::vector<Index> ramp = ramp_nodes(mesh, cfg);
    std::vector<Index> trace_nodes;
    if (hooks.dirichlet_trace) {
        const TraceRecord& tr = *hooks.dirichlet_trace;
        if (tr.values.size() != steps) {
            throw InvalidArgument("trace has " + std::to_string(tr.values.size()) + " steps, transport needs " +
                                  std::to_string(steps));
        }
        for (const auto& row : tr.values) check_trace_nodes(mesh, tr.nodes, row.size());
        trace_nodes = tr.nodes;
    }
    for (Index v : hooks.record_nodes) {
        if (v < 0 || static_cast<std::size_t>(v) >= mesh.node_count()) throw InvalidArgument("record node out of range");
    }

    const SteppingOperators ops = build_stepping(mesh, u, cfg, merged(ramp, trace_nodes));

    TransportResult res;
    res.steps = steps;
    res.max_cell_peclet = ops.max_cell_peclet;
    if (!cfg.supg && ops.max_cell_peclet > 10.0) {
        std::ostringstream os;
        os << "cell Peclet number " << ops.max_cell_peclet << " exceeds 10 without stabilization";
        res.warnings.push_back(os.str());
    }
    res.record.nodes = hooks.record_nodes;
    res.record.values.reserve(steps);

    std::vector<double> g(mesh.node_count(), cfg.T);
    std::vector<double> g_old = g;
    std::vector<double> guess(mesh.node_count());
    std::vector<double> rhs(mesh.node_count());
    for (std::size_t step = 1; step <= steps; ++step) {
        ops.rhs.multiply(g, rhs);
        const double value = ramp_value(cfg, step, steps);
        for (Index v : ramp) rhs[static_cast<std::size_t>(v)] = value;
        const std::vector<double>* trace_row = hooks.dirichlet_trace ? &hooks.dirichlet_trace->values[step - 1] : nullptr;
        if (trace_row) {
            for (std::size_t k = 0; k < trace_nodes.size(); ++k) rhs[static_cast<std::size_t>(trace_nodes[k])] = (*trace_row)[k];
        }
        SolveReport rep;
        for (std::size_t i = 0; i < g.size(); ++i) guess[i] = 2.0 * g[i] - g_old[i];
        std::vector<double> next = bicgstab_solve(ops.lhs, rhs, cfg.solver, &rep, guess);
        res.solver_iterations += rep.iterations;
        for (Index v : ramp) next[static_cast<std::size_t>(v)] = value;
        if (trace_row) {
            for (std::size_t k = 0; k < trace_nodes.size(); ++k) next[static_cast<std::size_t>(trace_nodes[k])] = (*trace_row)[k];
        }

        const double tau = cfg.T * static_cast<double>(step) / static_cast<double>(steps);
        for (std::size_t i = 0; i < next.size(); ++i) {
            res.max_lower_violation = std::max(res.max_lower_violation, (cfg.T - tau) - next[i]);
            res.max_upper_violation = std::max(res.max_upper_violation, next[i] - cfg.T);
            res.max_age_rate_excess = std::max(res.max_age_rate_excess, next[i] - g[i] - dt);
        }
        for (Index v : ramp) {
            if (next[static_cast<std::size_t>(v)] != value) res.dirichlet_exact = false;
        }
        g_old.swap(g);
        g.swap(next);

        if (!res.record.nodes.empty()) {
            std::vector<double> row(res.record.nodes.size());
            for (std::size_t k = 0; k < row.size(); ++k) row[k] = g[static_cast<std::size_t>(res.record.nodes[k])];
            res.record.values.push_back(std::move(row));
        }
        if (hooks.on_step) hooks.on_step(step, tau, g);
    }
    res.g = std::move(g);
    return res;
}

} // namespace lagoon
