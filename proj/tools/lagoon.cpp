#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lagoon/error.hpp"
#include "lagoon/experiments.hpp"
#include "lagoon/io.hpp"

namespace {

using lagoon::ExperimentConfig;
using lagoon::ResultRow;

struct Overrides {
    std::string config_path;
    std::string out;
    std::string h;
    std::string delta_list;
    std::string nu_list;
    std::string profile;
    std::string workers;
    std::vector<std::string> settings;
};

ExperimentConfig build_config(const Overrides& o, const std::string& subcommand) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = lagoon::load_config(o.config_path);
    for (const std::string& s : o.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw lagoon::ConfigError("--set expects key=value, got '" + s + "'");
        lagoon::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!o.out.empty()) lagoon::set_config_value(cfg, "output.dir", o.out);
    if (!o.h.empty()) lagoon::set_config_value(cfg, "mesh.h", o.h);
    if (!o.delta_list.empty()) lagoon::set_config_value(cfg, "sweep.delta_list", o.delta_list);
    if (!o.nu_list.empty()) lagoon::set_config_value(cfg, "sweep.nu_list", o.nu_list);
    if (!o.workers.empty()) lagoon::set_config_value(cfg, "run.workers", o.workers);
    if (!o.profile.empty()) {
        lagoon::set_config_value(cfg, subcommand == "pipeline" ? "pipeline.profile" : "table_uc.profile", o.profile);
    }
    cfg.validate();
    return cfg;
}

void print_rows(const std::vector<ResultRow>& rows) {
    std::printf("%-16s %8s %8s %-18s %14s %14s %8s\n", "config_id", "delta", "nu", "profile", "linf_rel_err",
                "benchmark", "nodes");
    for (const ResultRow& r : rows) {
        char bench[32] = "";
        if (r.benchmark) std::snprintf(bench, sizeof bench, "%.6g", *r.benchmark);
        std::printf("%-16s %8.4g %8.4g %-18s %14.6g %14s %8zu\n", r.config_id.c_str(), r.delta_over_r1, r.nu,
                    std::string(lagoon::to_string(r.profile)).c_str(), r.linf_rel_err, bench, r.nodes);
        for (const std::string& w : r.diagnostics.warnings) std::printf("  warning: %s\n", w.c_str());
    }
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_rows(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows, const char* table_file) {
    std::ofstream results(out_path(cfg, "results.csv"));
    lagoon::write_results_csv(results, rows);
    if (table_file != nullptr) {
        std::ofstream table(out_path(cfg, table_file));
        lagoon::write_table_csv(table, rows);
    }
    print_rows(rows);
}

std::string tag(double delta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "d%.0f", delta * 100.0);
    return buf;
}

lagoon::LagoonGeometry geometry(const ExperimentConfig& cfg, double delta) {
    const auto gp = cfg.geometry_for(delta);
    return cfg.equal_area ? lagoon::build_equal_area_lagoon(gp) : lagoon::build_lagoon(gp);
}

void run_mesh(const ExperimentConfig& cfg) {
    for (double delta : cfg.delta_list) {
        const auto start = std::chrono::steady_clock::now();
        const lagoon::TriMesh mesh = lagoon::triangulate(geometry(cfg, delta), cfg.h, cfg.mesh_options());
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const lagoon::MeshQuality q = lagoon::mesh_quality_report(mesh);
        std::printf("%s nodes=%zu triangles=%zu min_angle=%.2f max_angle=%.2f max_aspect=%.3f h_min=%.4g h_max=%.4g "
                    "gamma_in=%zu gamma_zero=%zu interface=%zu area_main=%.6f area_seg=%.6f t_mesh_s=%.3f\n",
                    tag(delta).c_str(), q.nodes, q.triangles, q.min_angle_deg, q.max_angle_deg, q.max_aspect, q.h_min,
                    q.h_max, q.gamma_in_edges, q.gamma_zero_edges, q.interface_edges, mesh.area(lagoon::Region::Main),
                    mesh.area(lagoon::Region::Seg), seconds);
        std::ofstream msh(out_path(cfg, "mesh-" + tag(delta) + ".txt"));
        lagoon::write_mesh(msh, mesh);
        lagoon::write_vtk_file(out_path(cfg, "mesh-" + tag(delta) + ".vtk"), mesh, {});
    }
}

void run_reference_cmd(const ExperimentConfig& cfg) {
    const double delta = cfg.delta_list.front();
    const lagoon::TriMesh mesh = lagoon::triangulate(geometry(cfg, delta), cfg.h, cfg.mesh_options());
    const auto params = cfg.physical(cfg.nu);
    const lagoon::ReferenceRun ref = lagoon::run_reference(mesh, params, cfg.transport(cfg.nu));
    const auto& t = ref.fields.transport;
    std::printf("%s nodes=%zu steps=%zu potential_iterations=%zu transport_iterations=%zu max_cell_peclet=%.3g "
                "lower_violation=%.3g upper_violation=%.3g dirichlet_exact=%s t_psi_s=%.3f t_transport_s=%.3f\n",
                tag(delta).c_str(), mesh.node_count(), t.steps, ref.fields.potential_report.iterations,
                t.solver_iterations, t.max_cell_peclet, t.max_lower_violation, t.max_upper_violation,
                t.dirichlet_exact ? "true" : "false", ref.t_psi_s, ref.t_transport_s);
    for (const std::string& w : t.warnings) std::printf("  warning: %s\n", w.c_str());
    lagoon::write_vtk_file(out_path(cfg, "ref.vtk"), mesh,
                           {{{"g", ref.fields.g}, {"psi", ref.fields.psi}}, {}, {{"u", ref.fields.u}}});
    std::ofstream csv(out_path(cfg, "ref.csv"));
    lagoon::write_field_csv(csv, mesh, ref.fields.g);
}

int fail(const std::string& code, const std::string& message) {
    nlohmann::json j{{"status", "error"}, {"code", code}, {"message", message}};
    std::cerr << j.dump() << std::endl;
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confinement (water age) simulations of a two-basin lagoon"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config_path, "key = value configuration file");
    app.add_option("--out", o.out, "output directory (output.dir)");
    app.add_option("--h", o.h, "target mesh size (mesh.h)");
    app.add_option("--delta-list", o.delta_list, "comma separated delta / r_main values (sweep.delta_list)");
    app.add_option("--nu-list", o.nu_list, "comma separated diffusivities (sweep.nu_list)");
    app.add_option("--profile", o.profile,
                   "interface profile: poiseuille, constant, exact-pointwise, exact-variational");
    app.add_option("--workers", o.workers, "worker threads (run.workers)");
    app.add_option("--set", o.settings, "any configuration key, as key=value")->take_all();
    bool dump = false;
    app.add_flag("--dump-config", dump, "print the effective configuration and exit");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"mesh", "generate meshes for every delta and print quality reports"},
        {"reference", "full-domain potential and tracer at the first delta"},
        {"table-uc", "model-profile interface errors over the delta sweep"},
        {"table-c", "exact-profile interface errors over the delta sweep"},
        {"table-nu", "exact-profile interface errors over the diffusivity sweep"},
        {"pipeline", "reference, main and seg runs with VTK output"},
        {"all", "every table and the pipeline"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const ExperimentConfig cfg = build_config(o, command);
        if (dump) {
            cfg.validate();
            std::fputs(lagoon::dump_config(cfg).c_str(), stdout);
            return 0;
        }
        if (command == "mesh") {
            run_mesh(cfg);
        } else if (command == "reference") {
            run_reference_cmd(cfg);
        } else if (command == "table-uc") {
            write_rows(cfg, lagoon::run_table_uc(cfg), "table_uc.csv");
        } else if (command == "table-c") {
            write_rows(cfg, lagoon::run_table_c(cfg), "table_c.csv");
        } else if (command == "table-nu") {
            write_rows(cfg, lagoon::run_table_diffusivity(cfg), "table_nu.csv");
        } else if (command == "pipeline") {
            write_rows(cfg, lagoon::run_full_pipeline(cfg), nullptr);
        } else {
            const lagoon::ExperimentResults results = lagoon::run_all(cfg);
            lagoon::write_outputs(cfg.out_dir, results);
            print_rows(results.all_rows());
        }
    } catch (const lagoon::Error& e) {
        return fail(e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
