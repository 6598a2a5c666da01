#pragma once

#include <optional>
#include <vector>

#include "lagoon/elliptic.hpp"
#include "lagoon/geometry.hpp"
#include "lagoon/mesh.hpp"
#include "lagoon/transport.hpp"

namespace lagoon {

/// Water flux through the interface of a full mesh. F is a flux density
/// positive from Main into Seg; edge entries refer to interface edges of the
/// full mesh (oriented with Seg on the left), nodal entries to full-mesh
/// nodes and hold already-integrated fluxes.
struct InterfaceFlux {
    ProfileKind kind = ProfileKind::Poiseuille;
    std::vector<FluxData::EdgeFlux> edges;
    std::vector<std::pair<Index, double>> nodal;
    double q_seg = 0.0;   // target  theta0 |Omega_seg|
    double rescale = 1.0; // factor applied to sampled data (pointwise profile)

    /// Integrated Main-to-Seg flux  int (h-b) F dl  + sum nodal.
    [[nodiscard]] double total(const TriMesh& full, const PhysicalParams& params) const;
};

/// Model profile F = f_pr(s) Q_seg along the interface, normalized so that
/// the integrated flux equals Q_seg. Kind must be Poiseuille or Constant.
InterfaceFlux interface_flux(const TriMesh& full, const InterfaceProfile& profile, const PhysicalParams& params);

/// u_ref . n_trans sampled on the Main-side triangle of every interface
/// edge, rescaled so the integrated flux equals Q_seg.
InterfaceFlux exact_pointwise_profile(const TriMesh& full, const VelocityField& u_ref, const PhysicalParams& params);

/// Variationally consistent nodal flux of the reference potential seen from
/// the Main submesh.
InterfaceFlux exact_variational_profile(const TriMesh& full, const TriMesh& main, std::span<const double> psi_ref,
                                        const PhysicalParams& params);

/// Outward Neumann data of a Main or Seg submesh for the given interface flux.
FluxData restrict_interface_flux(const InterfaceFlux& flux, const TriMesh& full, const TriMesh& sub);

struct FieldSet {
    ScalarField psi;
    VelocityField u;
    ScalarField g;
    SolveReport potential_report;
    TransportResult transport;
    double t_psi_s = 0.0;
    double t_transport_s = 0.0;
};

struct ReferenceRun {
    TriMesh mesh;
    TriMesh main_mesh;
    TriMesh seg_mesh;
    FieldSet fields;
    double t_psi_s = 0.0;
    double t_transport_s = 0.0;
};

struct ErrorMetric {
    double relative = 0.0;
    double absolute = 0.0;
    Index argmax = -1;   // submesh node of the largest relative error
    double floor = 0.0;  // absolute threshold on |g_ref|
    std::size_t counted = 0;
};

struct CoupledRun {
    ProfileKind profile_kind = ProfileKind::Poiseuille;
    InterfaceFlux flux;
    FieldSet main;
    std::optional<FieldSet> seg;
    TraceRecord trace; // Main-side values on the Main submesh interface nodes
    ErrorMetric main_error;
    std::optional<ErrorMetric> seg_error;
    double main_balance_defect = 0.0; // Gamma_in inflow + theta0 |main| + Q_seg
    double seg_balance_defect = 0.0;  // interface inflow + theta0 |seg|
    double max_psi_deviation = 0.0;   // max |psi_main - psi_ref| after mean alignment
    double t_psi_s = 0.0;
    double t_transport_s = 0.0;
};

struct DecompositionOptions {
    PotentialOptions potential{{1e-11, 50000, Nullspace::Constants, true, 1e-10}, 1e-10, false};
    bool solve_seg = true;
    double error_floor = 1e-3; // fraction of T
};

/// Potential and tracer on the full mesh.
ReferenceRun run_reference(const TriMesh& full, const PhysicalParams& params, const TransportConfig& transport,
                           const DecompositionOptions& options = {});

/// Truncated Main solve with the chosen interface profile, then the Seg solve
/// driven by the recorded interface trace.
CoupledRun run_decomposition(const ReferenceRun& ref, ProfileKind kind, const PhysicalParams& params,
                             const TransportConfig& transport, const DecompositionOptions& options = {});

/// Main-lagoon fields with the given interface flux.
FieldSet solve_main(const ReferenceRun& ref, const InterfaceFlux& flux, const PhysicalParams& params,
                    const TransportConfig& transport, const DecompositionOptions& options, TraceRecord* trace,
                    double* balance_defect = nullptr);

/// Seg-lagoon fields; the interface carries the Dirichlet trace recorded on
/// the Main submesh.
FieldSet solve_seg(const ReferenceRun& ref, const InterfaceFlux& flux, const TraceRecord& main_trace,
                   const PhysicalParams& params, const TransportConfig& transport,
                   const DecompositionOptions& options, double* balance_defect = nullptr);

/// max |g_test - g_ref| / |g_ref| over submesh nodes with |g_ref| > floor * T.
ErrorMetric linf_relative_error(std::span<const double> g_test, std::span<const double> g_ref,
                                std::span<const Index> injection, double T, double floor = 1e-3);

/// Full-mesh field assembled from the Main and Seg submesh fields (interface
/// nodes take the Main value).
ScalarField pipeline_field(const ReferenceRun& ref, std::span<const double> g_main, std::span<const double> g_seg);

} // namespace lagoon
