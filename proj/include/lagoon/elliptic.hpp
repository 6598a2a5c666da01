#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lagoon/mesh.hpp"
#include "lagoon/sparse.hpp"

namespace lagoon {

using ScalarField = std::vector<double>;   // one value per node
using VelocityField = std::vector<Point2>; // one vector per triangle

struct PhysicalParams {
    /// Water column depth h - b; sampled at element centroids and edge points.
    std::function<double(Point2)> depth = [](Point2) { return 1.0; };
    double theta0 = 1.0; // uniform evaporation density
    double nu = 0.01;
    double T = 5.0;

    void validate() const;
};

/// Neumann data for the potential problem. q is the signed normal flux
/// density u.n with n the outward normal of the meshed domain (q > 0 means
/// water leaves the domain). Each edge entry carries q at the start, the
/// midpoint and the end of the edge (exact for profiles up to quadratic).
/// Nodal loads are already-integrated flux contributions (consistent fluxes).
struct FluxData {
    struct EdgeFlux {
        std::size_t edge = 0;
        double q_start = 0.0;
        double q_mid = 0.0;
        double q_end = 0.0;
    };
    std::vector<EdgeFlux> edges;
    std::vector<std::pair<Index, double>> nodal;

    /// Integrated outward flux  sum_e  int (h-b) q dl  + sum nodal.
    [[nodiscard]] double total(const TriMesh& mesh, const PhysicalParams& params) const;
    /// Integrated outward flux through edges with the given label (edge part only).
    [[nodiscard]] double total(const TriMesh& mesh, const PhysicalParams& params, BoundaryLabel label) const;

    void append(const FluxData& other);
    FluxData scaled(double factor) const;
};

/// Source term override for verification problems; defaults to theta0.
using SourceFunction = std::function<double(Point2)>;

struct EllipticSystem {
    SparseMatrix stiffness;          // int (h-b) grad phi_i . grad phi_j
    std::vector<double> source_load; // int theta phi_i
    std::vector<double> flux_load;   // boundary flux contributions
    [[nodiscard]] std::vector<double> load() const;
};

EllipticSystem assemble_potential_system(const TriMesh& mesh, const PhysicalParams& params, const FluxData& flux,
                                         const SourceFunction& source = {});

/// Load vector  int (h-b) q phi_i dl  (plus nodal loads) of the given flux data.
std::vector<double> assemble_flux_load(const TriMesh& mesh, const PhysicalParams& params, const FluxData& flux);

/// Uniform entrance inflow balancing the total evaporation over the mesh:
/// int_{GammaIn} (h-b) q dl = -theta0 |mesh| - extra_outflow.
FluxData build_entrance_flux(const TriMesh& mesh, const PhysicalParams& params, double extra_outflow = 0.0);

struct PotentialOptions {
    SolverOptions solver{};
    /// Tolerance of the global balance  int theta + outward flux = 0.
    double balance_tol = 1e-10;
    /// Remove the discrete compatibility defect before solving (for
    /// manufactured sources whose quadrature does not integrate to zero).
    bool project_load = false;
};

struct PotentialSolution {
    ScalarField psi; // zero nodal mean
    SolveReport report;
    double balance_defect = 0.0; // int theta + outward flux
};

/// P1 Galerkin solution of  -div((h-b) grad psi) = theta  with
/// d psi / dn = q on the labeled boundary. Throws CompatibilityError when
/// the flux data does not balance the source.
PotentialSolution solve_potential(const TriMesh& mesh, const PhysicalParams& params, const FluxData& flux,
                                  const PotentialOptions& options = {}, const SourceFunction& source = {});

/// Gradient of the P1 interpolant of psi, one vector per triangle.
VelocityField recover_velocity(const TriMesh& mesh, std::span<const double> psi);

/// Variationally consistent flux on the nodes of `label`: the residual
/// A psi - b_tilde, where b_tilde is the load without that label's
/// contribution. Entries are integrated outward fluxes (nodal loads).
FluxData boundary_flux_extract(const TriMesh& mesh, std::span<const double> psi, const SparseMatrix& a,
                               std::span<const double> b_tilde, BoundaryLabel label);

} // namespace lagoon
