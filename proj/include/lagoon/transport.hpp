#pragma once

#include <set>
#include <string>
#include <vector>

#include "lagoon/elliptic.hpp"
#include "lagoon/mesh.hpp"
#include "lagoon/sparse.hpp"

namespace lagoon {

struct TransportConfig {
    double nu = 0.01;
    double T = 5.0;
    double dt = 0.0; // 0 selects T / 200
    /// Boundary labels carrying the ramp g = T - tau.
    std::set<BoundaryLabel> dirichlet_labels{BoundaryLabel::GammaIn};
    /// Labels with homogeneous Neumann data (the natural condition).
    std::set<BoundaryLabel> neumann_labels{};
    bool supg = true;
    double supg_parameter = 1.0;
    bool lumped_mass = false;
    SolverOptions solver{1e-10, 20000, Nullspace::None, true, 1e-10, true};

    [[nodiscard]] double time_step() const { return dt > 0.0 ? dt : T / 200.0; }
    [[nodiscard]] std::size_t steps() const;
    void validate() const;
};

/// Values on a fixed node set, one row per time step (row k holds the
/// values after step k + 1).
struct TraceRecord {
    std::vector<Index> nodes;
    std::vector<std::vector<double>> values;
};

/// Component matrices of the semi-discrete tracer equation.
struct TransportOperators {
    SparseMatrix mass;      // int phi_i phi_j (row-summed when lumped)
    SparseMatrix advection; // int phi_i u.grad phi_j
    SparseMatrix diffusion; // int grad phi_i . grad phi_j
    SparseMatrix supg;      // int tau (u.grad phi_i)(u.grad phi_j)
    SparseMatrix supg_mass; // int tau (u.grad phi_i) phi_j
    double max_cell_peclet = 0.0;
};

TransportOperators assemble_transport_operators(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg);

struct TransportSystem {
    SparseMatrix matrix;
    std::vector<double> rhs;
    std::vector<Index> dirichlet_nodes;
};

/// Implicit Euler system for the step that ends at tau = step * dt.
/// Dirichlet rows are identity rows carrying the prescribed value. Nodes of
/// `trace` (when given) are Dirichlet nodes too, with value trace_values.
TransportSystem assemble_transport_step(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg,
                                        std::span<const double> g_prev, std::size_t step,
                                        const std::vector<Index>& trace_nodes = {},
                                        std::span<const double> trace_values = {});

struct TransportHooks {
    /// Dirichlet data replayed node-wise per step.
    const TraceRecord* dirichlet_trace = nullptr;
    /// Nodes whose values are recorded after every step.
    std::vector<Index> record_nodes;
    /// Called with (step, tau, g) after every step when set.
    std::function<void(std::size_t, double, std::span<const double>)> on_step;
};

struct TransportResult {
    ScalarField g; // g(T)
    std::size_t steps = 0;
    std::size_t solver_iterations = 0;
    double max_lower_violation = 0.0; // max (T - tau) - g
    double max_upper_violation = 0.0; // max g - T
    double max_age_rate_excess = 0.0; // max g(tau_k) - g(tau_{k-1}) - dt
    bool dirichlet_exact = true;
    double max_cell_peclet = 0.0;
    std::vector<std::string> warnings;
    TraceRecord record;
};

/// Confinement tracer  g_tau + u.grad g - nu lap g = 0  from g(0) = T to
/// tau = T with the Dirichlet ramp on the configured labels.
TransportResult run_confinement(const TriMesh& mesh, const VelocityField& u, const TransportConfig& cfg,
                                const TransportHooks& hooks = {});

} // namespace lagoon
