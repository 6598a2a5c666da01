#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lagoon/decomposition.hpp"
#include "lagoon/geometry.hpp"
#include "lagoon/mesh.hpp"
#include "lagoon/transport.hpp"

namespace lagoon {

struct ExperimentConfig {
    GeometryParams geometry{};
    bool equal_area = false; // build_equal_area_lagoon instead of build_lagoon
    double theta0 = 1.0;
    double T = 5.0;
    double dt = 0.0;  // 0 selects T / 200
    double nu = 0.01; // diffusivity of the width sweeps and the pipeline
    double h = 0.02;
    double min_angle_deg = 22.0;
    double channel_cells = 20.0;
    double grading = 0.3;
    bool supg = true;
    double supg_parameter = 1.0;
    bool lumped_mass = false;
    double error_floor = 1e-3;
    std::vector<double> delta_list{0.20, 0.15, 0.10, 0.05}; // delta / r_main
    std::vector<double> nu_list{0.1, 0.05, 0.01, 0.005};
    double nu_sweep_delta = 0.20; // delta / r_main of the diffusivity sweep
    double pipeline_delta = 0.20;
    ProfileKind uc_profile = ProfileKind::Poiseuille;
    ProfileKind pipeline_profile = ProfileKind::ExactPointwise;
    std::string out_dir = "out";
    unsigned workers = 1;
    unsigned seed = 0; // reserved

    void validate() const;
    [[nodiscard]] MeshOptions mesh_options() const;
    [[nodiscard]] TransportConfig transport(double nu_value) const;
    [[nodiscard]] PhysicalParams physical(double nu_value) const;
    [[nodiscard]] GeometryParams geometry_for(double delta_over_r) const;
};

/// Applies one dotted key (e.g. "mesh.h", "sweep.delta_list"). Throws
/// ConfigError for unknown keys or malformed values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Lines "key = value"; '#' starts a comment; "[section]" prefixes later keys.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Every recognized key with its current value, in "key = value" form.
std::string dump_config(const ExperimentConfig& cfg);
std::vector<std::string> config_keys();

struct RunDiagnostics {
    double reference_balance = 0.0; // Gamma_in inflow + int theta on the full mesh
    double main_balance = 0.0;      // Gamma_in inflow + theta0 |main| + Q_seg
    double interface_balance = 0.0; // int_Gamma F - Q_seg
    double seg_balance = 0.0;       // interface inflow + theta0 |seg|
    double max_lower_violation = 0.0;
    double max_upper_violation = 0.0;
    bool dirichlet_exact = true;
    double psi_deviation = 0.0;
    double rescale = 1.0;
    std::vector<std::string> warnings;
};

struct ResultRow {
    std::string config_id;
    std::string table; // uc, c, nu, pipeline
    double delta_over_r1 = 0.0;
    double nu = 0.0;
    ProfileKind profile = ProfileKind::Poiseuille;
    double linf_rel_err = 0.0;
    double linf_abs_err = 0.0;
    double floor = 0.0;
    std::size_t nodes = 0;
    double h = 0.0;
    double t_mesh_s = 0.0;
    double t_psi_s = 0.0;
    double t_transport_s = 0.0;
    std::optional<double> benchmark; // reference value for comparison
    std::optional<double> ratio;     // table c: uc error / this error
    RunDiagnostics diagnostics;
};

/// Sum of table rows and pipeline rows.
struct ExperimentResults {
    std::vector<ResultRow> uc;
    std::vector<ResultRow> c;
    std::vector<ResultRow> nu;
    std::vector<ResultRow> pipeline;
    [[nodiscard]] std::vector<ResultRow> all_rows() const;
};

std::vector<ResultRow> run_table_uc(const ExperimentConfig& cfg);
std::vector<ResultRow> run_table_c(const ExperimentConfig& cfg);
std::vector<ResultRow> run_table_diffusivity(const ExperimentConfig& cfg);
/// Reference, Main and Seg runs at pipeline_delta; writes ref.vtk, main.vtk,
/// seg.vtk and diff.vtk into out_dir and returns the main, seg and
/// concatenated-field rows.
std::vector<ResultRow> run_full_pipeline(const ExperimentConfig& cfg);
/// Every table and the pipeline with shared reference runs.
ExperimentResults run_all(const ExperimentConfig& cfg);

inline const char* results_header() {
    return "config_id,delta_over_r1,nu,profile,linf_rel_err,linf_abs_err,floor,nodes,h,t_mesh_s,t_psi_s,t_transport_s";
}
void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
/// Table layout with the benchmark column (and ratio column for table c).
void write_table_csv(std::ostream& os, const std::vector<ResultRow>& rows);
/// Writes results.csv plus table_uc.csv, table_c.csv, table_nu.csv (those
/// that are non-empty) into dir.
void write_outputs(const std::string& dir, const ExperimentResults& results);

/// Benchmark errors for the width and diffusivity sweeps.
std::optional<double> benchmark_value(const std::string& table, double delta_over_r1, double nu);

} // namespace lagoon
