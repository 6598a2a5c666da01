#include "lagoon/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "lagoon/error.hpp"
#include "lagoon/io.hpp"

namespace lagoon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (trim(value.substr(used)).empty() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': '" + value + "' is not a number");
}

unsigned parse_unsigned(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v < 0.0 || v != std::floor(v) || v > 1e6) throw ConfigError("key '" + key + "': expected a non-negative integer");
    return static_cast<unsigned>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': '" + value + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

ProfileKind parse_profile(const std::string& key, const std::string& value) {
    try {
        return parse_profile_kind(value);
    } catch (const Error&) {
        throw ConfigError("key '" + key + "': unknown profile '" + value + "'");
    }
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string format_list(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_number(values[i]);
    return s;
}

struct Key {
    const char* name;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Member>
Key number_key(const char* name, Member member) {
    return {name,
            [member](ExperimentConfig& c, const std::string& k, const std::string& v) { member(c) = parse_double(k, v); },
            [member](const ExperimentConfig& c) { return format_number(member(const_cast<ExperimentConfig&>(c))); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(number_key("geometry.r_main", [](ExperimentConfig& c) -> double& { return c.geometry.r_main; }));
        k.push_back(number_key("geometry.r_seg", [](ExperimentConfig& c) -> double& { return c.geometry.r_seg; }));
        k.push_back(number_key("geometry.channel_length",
                               [](ExperimentConfig& c) -> double& { return c.geometry.channel_length; }));
        k.push_back(number_key("geometry.entrance_width",
                               [](ExperimentConfig& c) -> double& { return c.geometry.entrance_width; }));
        k.push_back(number_key("geometry.boundary_segments_per_unit",
                               [](ExperimentConfig& c) -> double& { return c.geometry.boundary_segments_per_unit; }));
        k.push_back({"geometry.equal_area",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.equal_area = parse_bool(key, v); },
                     [](const ExperimentConfig& c) { return std::string(c.equal_area ? "true" : "false"); }});
        k.push_back(number_key("physics.theta0", [](ExperimentConfig& c) -> double& { return c.theta0; }));
        k.push_back(number_key("physics.T", [](ExperimentConfig& c) -> double& { return c.T; }));
        k.push_back(number_key("physics.dt", [](ExperimentConfig& c) -> double& { return c.dt; }));
        k.push_back(number_key("physics.nu", [](ExperimentConfig& c) -> double& { return c.nu; }));
        k.push_back(number_key("mesh.h", [](ExperimentConfig& c) -> double& { return c.h; }));
        k.push_back(number_key("mesh.min_angle", [](ExperimentConfig& c) -> double& { return c.min_angle_deg; }));
        k.push_back(number_key("mesh.channel_cells", [](ExperimentConfig& c) -> double& { return c.channel_cells; }));
        k.push_back(number_key("mesh.grading", [](ExperimentConfig& c) -> double& { return c.grading; }));
        k.push_back({"transport.supg",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.supg = parse_bool(key, v); },
                     [](const ExperimentConfig& c) { return std::string(c.supg ? "true" : "false"); }});
        k.push_back(number_key("transport.supg_parameter", [](ExperimentConfig& c) -> double& { return c.supg_parameter; }));
        k.push_back({"transport.lumped_mass",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.lumped_mass = parse_bool(key, v); },
                     [](const ExperimentConfig& c) { return std::string(c.lumped_mass ? "true" : "false"); }});
        k.push_back(number_key("metrics.error_floor", [](ExperimentConfig& c) -> double& { return c.error_floor; }));
        k.push_back({"sweep.delta_list",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.delta_list = parse_list(key, v); },
                     [](const ExperimentConfig& c) { return format_list(c.delta_list); }});
        k.push_back({"sweep.nu_list",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.nu_list = parse_list(key, v); },
                     [](const ExperimentConfig& c) { return format_list(c.nu_list); }});
        k.push_back(number_key("sweep.nu_delta", [](ExperimentConfig& c) -> double& { return c.nu_sweep_delta; }));
        k.push_back({"table_uc.profile",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.uc_profile = parse_profile(key, v); },
                     [](const ExperimentConfig& c) { return std::string(to_string(c.uc_profile)); }});
        k.push_back(number_key("pipeline.delta", [](ExperimentConfig& c) -> double& { return c.pipeline_delta; }));
        k.push_back({"pipeline.profile",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                         c.pipeline_profile = parse_profile(key, v);
                     },
                     [](const ExperimentConfig& c) { return std::string(to_string(c.pipeline_profile)); }});
        k.push_back({"output.dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                     [](const ExperimentConfig& c) { return c.out_dir; }});
        k.push_back({"run.workers",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.workers = parse_unsigned(key, v); },
                     [](const ExperimentConfig& c) { return std::to_string(c.workers); }});
        k.push_back({"run.seed",
                     [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.seed = parse_unsigned(key, v); },
                     [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
        return k;
    }();
    return table;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn fn) {
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (n <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

LagoonGeometry make_geometry(const ExperimentConfig& cfg, double delta_over_r) {
    const GeometryParams gp = cfg.geometry_for(delta_over_r);
    return cfg.equal_area ? build_equal_area_lagoon(gp) : build_lagoon(gp);
}

// One reference configuration and the profiles evaluated against it.
struct Case {
    double delta = 0.0;
    double nu = 0.0;
    std::set<ProfileKind> profiles;
    bool pipeline = false;
};

struct ProfileOutcome {
    ProfileKind kind{};
    ErrorMetric error;
    RunDiagnostics diagnostics;
    double t_psi_s = 0.0;
    double t_transport_s = 0.0;
};

struct CaseOutcome {
    std::size_t nodes = 0;
    double t_mesh_s = 0.0;
    double ref_t_psi_s = 0.0;
    double ref_t_transport_s = 0.0;
    std::vector<ProfileOutcome> profiles;
    std::vector<ResultRow> pipeline_rows;
};

void add_case(std::vector<Case>& cases, double delta, double nu, ProfileKind kind, bool pipeline = false) {
    for (Case& c : cases) {
        if (c.delta == delta && c.nu == nu) {
            c.profiles.insert(kind);
            c.pipeline = c.pipeline || pipeline;
            return;
        }
    }
    cases.push_back({delta, nu, {kind}, pipeline});
}

void merge_bounds(RunDiagnostics& d, const TransportResult& t) {
    d.max_lower_violation = std::max(d.max_lower_violation, t.max_lower_violation);
    d.max_upper_violation = std::max(d.max_upper_violation, t.max_upper_violation);
    d.dirichlet_exact = d.dirichlet_exact && t.dirichlet_exact;
    d.warnings.insert(d.warnings.end(), t.warnings.begin(), t.warnings.end());
}

std::string delta_tag(double delta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "d%.0f", std::round(delta * 100.0));
    return buf;
}

void write_pipeline_fields(const ExperimentConfig& cfg, const ReferenceRun& ref, const CoupledRun& run,
                           std::span<const double> g_full) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(cfg.out_dir) / name).string(); };
    write_vtk_file(path("ref.vtk"), ref.mesh,
                   {{{"g", ref.fields.g}, {"psi", ref.fields.psi}}, {}, {{"u", ref.fields.u}}});
    write_vtk_file(path("main.vtk"), ref.main_mesh,
                   {{{"g", run.main.g}, {"psi", run.main.psi}}, {}, {{"u", run.main.u}}});
    write_vtk_file(path("seg.vtk"), ref.seg_mesh, {{{"g", run.seg->g}, {"psi", run.seg->psi}}, {}, {{"u", run.seg->u}}});
    std::vector<double> diff(g_full.size()), rel(g_full.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = g_full[i] - ref.fields.g[i];
        rel[i] = std::abs(ref.fields.g[i]) > cfg.error_floor * cfg.T ? diff[i] / ref.fields.g[i] : 0.0;
    }
    write_vtk_file(path("diff.vtk"), ref.mesh,
                   {{{"g_pipeline", g_full}, {"g_ref", ref.fields.g}, {"diff", diff}, {"rel_diff", rel}}, {}, {}});
}

CaseOutcome run_case(const ExperimentConfig& cfg, const Case& c) {
    CaseOutcome out;
    auto start = Clock::now();
    const LagoonGeometry geom = make_geometry(cfg, c.delta);
    const TriMesh mesh = triangulate(geom, cfg.h, cfg.mesh_options());
    out.t_mesh_s = seconds_since(start);
    out.nodes = mesh.node_count();

    const PhysicalParams params = cfg.physical(c.nu);
    const TransportConfig transport = cfg.transport(c.nu);
    DecompositionOptions options;
    options.error_floor = cfg.error_floor;
    const ReferenceRun ref = run_reference(mesh, params, transport, options);
    out.ref_t_psi_s = ref.t_psi_s;
    out.ref_t_transport_s = ref.t_transport_s;

    const double ref_balance = build_entrance_flux(mesh, params).total(mesh, params) + params.theta0 * mesh.area();

    for (ProfileKind kind : c.profiles) {
        const bool with_seg = c.pipeline && kind == cfg.pipeline_profile;
        options.solve_seg = with_seg;
        const CoupledRun run = run_decomposition(ref, kind, params, transport, options);

        ProfileOutcome po;
        po.kind = kind;
        po.error = run.main_error;
        po.t_psi_s = run.t_psi_s;
        po.t_transport_s = run.t_transport_s;
        RunDiagnostics& d = po.diagnostics;
        d.reference_balance = ref_balance;
        d.main_balance = run.main_balance_defect;
        d.interface_balance = run.flux.total(mesh, params) - run.flux.q_seg;
        d.seg_balance = with_seg ? run.seg_balance_defect : 0.0;
        d.psi_deviation = run.max_psi_deviation;
        d.rescale = run.flux.rescale;
        merge_bounds(d, ref.fields.transport);
        merge_bounds(d, run.main.transport);
        if (run.seg) merge_bounds(d, run.seg->transport);

        if (with_seg) {
            const ScalarField full = pipeline_field(ref, run.main.g, run.seg->g);
            std::vector<Index> identity(mesh.node_count());
            for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<Index>(i);
            const ErrorMetric full_error = linf_relative_error(full, ref.fields.g, identity, cfg.T, cfg.error_floor);
            write_pipeline_fields(cfg, ref, run, full);
            const auto row = [&](const char* id, const ErrorMetric& m, std::size_t nodes) {
                ResultRow r;
                r.config_id = id;
                r.table = "pipeline";
                r.delta_over_r1 = c.delta;
                r.nu = c.nu;
                r.profile = kind;
                r.linf_rel_err = m.relative;
                r.linf_abs_err = m.absolute;
                r.floor = m.floor;
                r.nodes = nodes;
                r.h = cfg.h;
                r.t_mesh_s = out.t_mesh_s;
                r.t_psi_s = ref.t_psi_s + run.t_psi_s;
                r.t_transport_s = ref.t_transport_s + run.t_transport_s;
                r.diagnostics = d;
                return r;
            };
            out.pipeline_rows.push_back(row("pipeline-main", run.main_error, ref.main_mesh.node_count()));
            out.pipeline_rows.push_back(row("pipeline-seg", *run.seg_error, ref.seg_mesh.node_count()));
            out.pipeline_rows.push_back(row("pipeline-full", full_error, mesh.node_count()));
        }
        out.profiles.push_back(std::move(po));
    }
    return out;
}

std::vector<CaseOutcome> run_cases(const ExperimentConfig& cfg, const std::vector<Case>& cases) {
    std::vector<CaseOutcome> out(cases.size());
    parallel_for(cases.size(), cfg.workers, [&](std::size_t i) { out[i] = run_case(cfg, cases[i]); });
    return out;
}

const ProfileOutcome* find_outcome(const std::vector<Case>& cases, const std::vector<CaseOutcome>& outcomes,
                                   double delta, double nu, ProfileKind kind) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (cases[i].delta != delta || cases[i].nu != nu) continue;
        for (const auto& p : outcomes[i].profiles) {
            if (p.kind == kind) return &p;
        }
    }
    return nullptr;
}

ResultRow table_row(const ExperimentConfig& cfg, const std::string& table, const std::string& id, double delta,
                    double nu, const CaseOutcome& outcome, const ProfileOutcome& p) {
    ResultRow r;
    r.config_id = id;
    r.table = table;
    r.delta_over_r1 = delta;
    r.nu = nu;
    r.profile = p.kind;
    r.linf_rel_err = p.error.relative;
    r.linf_abs_err = p.error.absolute;
    r.floor = p.error.floor;
    r.nodes = outcome.nodes;
    r.h = cfg.h;
    r.t_mesh_s = outcome.t_mesh_s;
    r.t_psi_s = outcome.ref_t_psi_s + p.t_psi_s;
    r.t_transport_s = outcome.ref_t_transport_s + p.t_transport_s;
    r.benchmark = benchmark_value(table, delta, nu);
    r.diagnostics = p.diagnostics;
    return r;
}

const CaseOutcome& outcome_of(const std::vector<Case>& cases, const std::vector<CaseOutcome>& outcomes, double delta,
                              double nu) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (cases[i].delta == delta && cases[i].nu == nu) return outcomes[i];
    }
    throw Error("internal", "missing experiment case");
}

struct Plan {
    bool uc = false;
    bool c = false;
    bool nu = false;
    bool pipeline = false;
};

ExperimentResults execute(const ExperimentConfig& cfg, const Plan& plan) {
    cfg.validate();
    std::vector<Case> cases;
    if (plan.uc || plan.c) {
        for (double d : cfg.delta_list) {
            add_case(cases, d, cfg.nu, cfg.uc_profile);
            if (plan.c) add_case(cases, d, cfg.nu, ProfileKind::ExactPointwise);
        }
    }
    if (plan.nu) {
        for (double nu : cfg.nu_list) add_case(cases, cfg.nu_sweep_delta, nu, ProfileKind::ExactPointwise);
    }
    if (plan.pipeline) add_case(cases, cfg.pipeline_delta, cfg.nu, cfg.pipeline_profile, true);

    const std::vector<CaseOutcome> outcomes = run_cases(cfg, cases);
    ExperimentResults res;
    for (double d : cfg.delta_list) {
        if (!plan.uc && !plan.c) break;
        const CaseOutcome& oc = outcome_of(cases, outcomes, d, cfg.nu);
        const ProfileOutcome* uc = find_outcome(cases, outcomes, d, cfg.nu, cfg.uc_profile);
        if (plan.uc) res.uc.push_back(table_row(cfg, "uc", "uc-" + delta_tag(d), d, cfg.nu, oc, *uc));
        if (plan.c) {
            const ProfileOutcome* ex = find_outcome(cases, outcomes, d, cfg.nu, ProfileKind::ExactPointwise);
            ResultRow r = table_row(cfg, "c", "c-" + delta_tag(d), d, cfg.nu, oc, *ex);
            if (r.linf_rel_err > 0.0) r.ratio = uc->error.relative / r.linf_rel_err;
            res.c.push_back(std::move(r));
        }
    }
    if (plan.nu) {
        for (double nu : cfg.nu_list) {
            const CaseOutcome& oc = outcome_of(cases, outcomes, cfg.nu_sweep_delta, nu);
            const ProfileOutcome* ex = find_outcome(cases, outcomes, cfg.nu_sweep_delta, nu, ProfileKind::ExactPointwise);
            res.nu.push_back(table_row(cfg, "nu", "nu-" + format_number(nu), cfg.nu_sweep_delta, nu, oc, *ex));
        }
    }
    if (plan.pipeline) res.pipeline = outcome_of(cases, outcomes, cfg.pipeline_delta, cfg.nu).pipeline_rows;
    return res;
}

} // namespace

void ExperimentConfig::validate() const {
    if (delta_list.empty()) throw ConfigError("sweep.delta_list must not be empty");
    if (nu_list.empty()) throw ConfigError("sweep.nu_list must not be empty");
    if (!(h > 0.0)) throw ConfigError("mesh.h must be positive");
    if (workers == 0) throw ConfigError("run.workers must be at least 1");
    if (error_floor < 0.0) throw ConfigError("metrics.error_floor must be >= 0");
    if (channel_cells < 0.0 || grading <= 0.0) throw ConfigError("mesh.channel_cells must be >= 0 and mesh.grading > 0");
    try {
        std::vector<double> deltas = delta_list;
        deltas.push_back(nu_sweep_delta);
        deltas.push_back(pipeline_delta);
        for (double d : deltas) {
            const GeometryParams gp = geometry_for(d);
            gp.validate();
            if (!(h < 0.5 * gp.delta)) {
                throw ConfigError("mesh.h = " + format_number(h) + " needs to be below delta/2 = " +
                                  format_number(0.5 * gp.delta));
            }
        }
        physical(nu).validate();
        for (double v : nu_list) {
            physical(v).validate();
            transport(v).validate();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

MeshOptions ExperimentConfig::mesh_options() const {
    MeshOptions m;
    m.min_angle_deg = min_angle_deg;
    m.channel_cells = channel_cells;
    m.grading = grading;
    return m;
}

TransportConfig ExperimentConfig::transport(double nu_value) const {
    TransportConfig t;
    t.nu = nu_value;
    t.T = T;
    t.dt = dt;
    t.supg = supg;
    t.supg_parameter = supg_parameter;
    t.lumped_mass = lumped_mass;
    return t;
}

PhysicalParams ExperimentConfig::physical(double nu_value) const {
    PhysicalParams p;
    p.theta0 = theta0;
    p.nu = nu_value;
    p.T = T;
    return p;
}

GeometryParams ExperimentConfig::geometry_for(double delta_over_r) const {
    GeometryParams g = geometry;
    g.delta = delta_over_r * geometry.r_main;
    return g;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const Key& k : keys()) {
        if (key == k.name) {
            k.set(cfg, key, trim(value));
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(number) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        set_config_value(cfg, key, line.substr(eq + 1));
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read configuration file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    ExperimentConfig cfg;
    apply_config_text(cfg, ss.str());
    return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const Key& k : keys()) out.emplace_back(k.name);
    return out;
}

std::vector<ResultRow> ExperimentResults::all_rows() const {
    std::vector<ResultRow> rows = uc;
    rows.insert(rows.end(), c.begin(), c.end());
    rows.insert(rows.end(), nu.begin(), nu.end());
    rows.insert(rows.end(), pipeline.begin(), pipeline.end());
    return rows;
}

std::vector<ResultRow> run_table_uc(const ExperimentConfig& cfg) { return execute(cfg, {true, false, false, false}).uc; }
std::vector<ResultRow> run_table_c(const ExperimentConfig& cfg) { return execute(cfg, {false, true, false, false}).c; }
std::vector<ResultRow> run_table_diffusivity(const ExperimentConfig& cfg) {
    return execute(cfg, {false, false, true, false}).nu;
}
std::vector<ResultRow> run_full_pipeline(const ExperimentConfig& cfg) {
    return execute(cfg, {false, false, false, true}).pipeline;
}
ExperimentResults run_all(const ExperimentConfig& cfg) { return execute(cfg, {true, true, true, true}); }

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << results_header() << '\n';
    for (const ResultRow& r : rows) {
        os << r.config_id << ',' << format_number(r.delta_over_r1) << ',' << format_number(r.nu) << ','
           << to_string(r.profile) << ',' << format_number(r.linf_rel_err) << ',' << format_number(r.linf_abs_err) << ','
           << format_number(r.floor) << ',' << r.nodes << ',' << format_number(r.h) << ',' << format_number(r.t_mesh_s)
           << ',' << format_number(r.t_psi_s) << ',' << format_number(r.t_transport_s) << '\n';
    }
}

void write_table_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    const bool with_ratio = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.ratio.has_value(); });
    os << "config_id,delta_over_r1,nu,profile,linf_rel_err,linf_abs_err,benchmark_value";
    if (with_ratio) os << ",ratio_to_uc";
    os << '\n';
    for (const ResultRow& r : rows) {
        os << r.config_id << ',' << format_number(r.delta_over_r1) << ',' << format_number(r.nu) << ','
           << to_string(r.profile) << ',' << format_number(r.linf_rel_err) << ',' << format_number(r.linf_abs_err) << ','
           << (r.benchmark ? format_number(*r.benchmark) : "");
        if (with_ratio) os << ',' << (r.ratio ? format_number(*r.ratio) : "");
        os << '\n';
    }
}

void write_outputs(const std::string& dir, const ExperimentResults& results) {
    std::filesystem::create_directories(dir);
    const auto write = [&](const char* name, auto&& writer) {
        const std::string path = (std::filesystem::path(dir) / name).string();
        std::ofstream os(path);
        if (!os) throw ConfigError("cannot open '" + path + "' for writing");
        writer(os);
    };
    write("results.csv", [&](std::ostream& os) { write_results_csv(os, results.all_rows()); });
    if (!results.uc.empty()) write("table_uc.csv", [&](std::ostream& os) { write_table_csv(os, results.uc); });
    if (!results.c.empty()) write("table_c.csv", [&](std::ostream& os) { write_table_csv(os, results.c); });
    if (!results.nu.empty()) write("table_nu.csv", [&](std::ostream& os) { write_table_csv(os, results.nu); });
}

std::optional<double> benchmark_value(const std::string& table, double delta_over_r1, double nu) {
    struct Entry {
        double key;
        double value;
    };
    static const Entry uc[] = {{0.20, 0.0279855}, {0.15, 0.0212144}, {0.10, 0.0133008}, {0.05, 0.00627107}};
    static const Entry c[] = {{0.20, 0.00267697}, {0.15, 0.00204638}, {0.10, 0.00134943}, {0.05, 0.000690316}};
    static const Entry by_nu[] = {{0.1, 0.010308}, {0.05, 0.00323477}, {0.01, 0.00267697}, {0.005, 0.00195359}};
    const auto lookup = [](const auto& entries, double key) -> std::optional<double> {
        for (const Entry& e : entries) {
            if (std::abs(e.key - key) <= 1e-9 * e.key) return e.value;
        }
        return std::nullopt;
    };
    if (table == "uc") return std::abs(nu - 0.01) < 1e-12 ? lookup(uc, delta_over_r1) : std::nullopt;
    if (table == "c") return std::abs(nu - 0.01) < 1e-12 ? lookup(c, delta_over_r1) : std::nullopt;
    if (table == "nu") return std::abs(delta_over_r1 - 0.20) < 1e-12 ? lookup(by_nu, nu) : std::nullopt;
    return std::nullopt;
}

} // namespace lagoon
