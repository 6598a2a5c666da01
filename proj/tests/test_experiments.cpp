#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "lagoon/error.hpp"
#include "lagoon/experiments.hpp"

using namespace lagoon;
namespace fs = std::filesystem;

namespace {

ExperimentConfig coarse() {
    ExperimentConfig cfg;
    cfg.h = 0.05;
    cfg.channel_cells = 8;
    cfg.delta_list = {0.20};
    cfg.nu_list = {0.01};
    return cfg;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("lagoon-test-" + name);
    fs::remove_all(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Drops the three trailing timing columns of every results.csv line.
std::string without_timings(const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) {
        for (int k = 0; k < 3; ++k) line.erase(line.rfind(','));
        out += line + '\n';
    }
    return out;
}

std::string results_text(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    write_results_csv(os, rows);
    return without_timings(os.str());
}

struct Command {
    int status = -1;
    std::string output;
};

Command run_cli(const std::string& args) {
    Command c;
    const std::string cmd = std::string(LAGOON_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return c;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) c.output += buf;
    const int raw = pclose(pipe);
    c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return c;
}

} // namespace

TEST(ExperimentConfig, DefaultsAreValid) {
    const ExperimentConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.delta_list.size(), 4u);
    EXPECT_EQ(cfg.nu_list.size(), 4u);
    EXPECT_EQ(cfg.transport(0.01).steps(), 200u);
    EXPECT_DOUBLE_EQ(cfg.geometry_for(0.15).delta, 0.15);
}

TEST(ExperimentConfig, ParsesSectionsCommentsAndLists) {
    ExperimentConfig cfg;
    apply_config_text(cfg, "# sweep setup\n"
                           "[mesh]\n"
                           "h = 0.03   # finer than default\n"
                           "\n"
                           "[sweep]\n"
                           "delta_list = 0.2, 0.1\n"
                           "nu_list=0.05\n"
                           "[]\n"
                           "transport.lumped_mass = yes\n"
                           "physics.T = 8\n"
                           "table_uc.profile = constant\n");
    EXPECT_DOUBLE_EQ(cfg.h, 0.03);
    EXPECT_EQ(cfg.delta_list, (std::vector<double>{0.2, 0.1}));
    EXPECT_EQ(cfg.nu_list, (std::vector<double>{0.05}));
    EXPECT_TRUE(cfg.lumped_mass);
    EXPECT_DOUBLE_EQ(cfg.T, 8.0);
    EXPECT_EQ(cfg.uc_profile, ProfileKind::Constant);
}

TEST(ExperimentConfig, RejectsMalformedInput) {
    ExperimentConfig cfg;
    EXPECT_THROW(set_config_value(cfg, "mesh.size", "0.1"), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "mesh.h", "fine"), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "transport.supg", "maybe"), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "sweep.delta_list", ""), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "run.workers", "1.5"), ConfigError);
    EXPECT_THROW(set_config_value(cfg, "pipeline.profile", "parabolic"), ConfigError);
    EXPECT_THROW(apply_config_text(cfg, "[mesh\nh = 0.1\n"), ConfigError);
    try {
        apply_config_text(cfg, "mesh.h = 0.02\nmesh.h 0.03\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
        EXPECT_EQ(e.code(), "config");
    }
    EXPECT_THROW(load_config("/nonexistent/lagoon.cfg"), ConfigError);
}

TEST(ExperimentConfig, DumpRoundTrips) {
    ExperimentConfig cfg;
    cfg.h = 0.031;
    cfg.delta_list = {0.2, 0.05};
    cfg.nu_list = {0.005};
    cfg.supg = false;
    cfg.pipeline_profile = ProfileKind::ExactVariational;
    cfg.out_dir = "runs/a";
    cfg.workers = 3;
    cfg.equal_area = true;
    const std::string text = dump_config(cfg);
    ExperimentConfig back;
    apply_config_text(back, text);
    EXPECT_EQ(dump_config(back), text);
    EXPECT_EQ(back.delta_list, cfg.delta_list);
    EXPECT_EQ(back.pipeline_profile, ProfileKind::ExactVariational);
    EXPECT_EQ(back.out_dir, "runs/a");
    EXPECT_TRUE(back.equal_area);
    for (const std::string& key : config_keys()) EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
}

TEST(ExperimentConfig, ValidationCatchesBadCombinations) {
    ExperimentConfig cfg;
    cfg.delta_list.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.h = 0.04; // delta 0.05 needs h < 0.025
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.workers = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.delta_list = {1.3}; // wider than the seg circle
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.nu_list = {-0.01};
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ExperimentOutput, BenchmarkAnnotations) {
    EXPECT_EQ(benchmark_value("uc", 0.20, 0.01), 0.0279855);
    EXPECT_EQ(benchmark_value("uc", 0.05, 0.01), 0.00627107);
    EXPECT_EQ(benchmark_value("c", 0.20, 0.01), 0.00267697);
    EXPECT_EQ(benchmark_value("c", 0.05, 0.01), 0.000690316);
    EXPECT_EQ(benchmark_value("nu", 0.20, 0.1), 0.010308);
    EXPECT_EQ(benchmark_value("nu", 0.20, 0.005), 0.00195359);
    EXPECT_FALSE(benchmark_value("uc", 0.30, 0.01).has_value());
    EXPECT_FALSE(benchmark_value("uc", 0.20, 0.05).has_value());
    EXPECT_FALSE(benchmark_value("nu", 0.10, 0.1).has_value());
    EXPECT_FALSE(benchmark_value("pipeline", 0.20, 0.01).has_value());
}

TEST(ExperimentOutput, CsvLayout) {
    ResultRow r;
    r.config_id = "c-d20";
    r.delta_over_r1 = 0.2;
    r.nu = 0.01;
    r.profile = ProfileKind::ExactPointwise;
    r.linf_rel_err = 0.0025;
    r.linf_abs_err = 0.01;
    r.floor = 0.005;
    r.nodes = 1234;
    r.h = 0.02;
    r.benchmark = 0.00267697;
    r.ratio = 40.0;
    std::ostringstream results, table;
    write_results_csv(results, {r});
    write_table_csv(table, {r});
    EXPECT_EQ(results.str(), std::string(results_header()) +
                                 "\nc-d20,0.2,0.01,exact-pointwise,0.0025,0.01,0.005,1234,0.02,0,0,0\n");
    EXPECT_EQ(table.str(), "config_id,delta_over_r1,nu,profile,linf_rel_err,linf_abs_err,benchmark_value,ratio_to_uc\n"
                           "c-d20,0.2,0.01,exact-pointwise,0.0025,0.01,0.00267697,40\n");
    r.ratio.reset();
    r.benchmark.reset();
    std::ostringstream plain;
    write_table_csv(plain, {r});
    EXPECT_EQ(plain.str(), "config_id,delta_over_r1,nu,profile,linf_rel_err,linf_abs_err,benchmark_value\n"
                           "c-d20,0.2,0.01,exact-pointwise,0.0025,0.01,\n");
}

TEST(ExperimentRuns, SingleWidthGivesOneRow) {
    const auto rows = run_table_uc(coarse());
    ASSERT_EQ(rows.size(), 1u);
    const ResultRow& r = rows.front();
    EXPECT_EQ(r.config_id, "uc-d20");
    EXPECT_EQ(r.profile, ProfileKind::Poiseuille);
    EXPECT_GT(r.linf_rel_err, 0.0);
    EXPECT_GT(r.nodes, 0u);
    EXPECT_EQ(r.benchmark, 0.0279855);
    EXPECT_LE(std::abs(r.diagnostics.main_balance), 1e-10);
    EXPECT_LE(std::abs(r.diagnostics.interface_balance), 1e-10);
    EXPECT_LE(std::abs(r.diagnostics.reference_balance), 1e-10);
}

TEST(ExperimentRuns, SingleDiffusivityGivesOneRow) {
    ExperimentConfig cfg = coarse();
    cfg.nu_list = {0.05};
    const auto rows = run_table_diffusivity(cfg);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows.front().config_id, "nu-0.05");
    EXPECT_EQ(rows.front().profile, ProfileKind::ExactPointwise);
    EXPECT_DOUBLE_EQ(rows.front().nu, 0.05);
}

TEST(ExperimentRuns, PipelineWritesItsManifest) {
    ExperimentConfig cfg = coarse();
    const fs::path dir = scratch_dir("pipeline");
    cfg.out_dir = dir.string();
    ExperimentResults res;
    res.pipeline = run_full_pipeline(cfg);
    write_outputs(cfg.out_dir, res);
    ASSERT_EQ(res.pipeline.size(), 3u);
    EXPECT_EQ(res.pipeline[0].config_id, "pipeline-main");
    EXPECT_EQ(res.pipeline[1].config_id, "pipeline-seg");
    EXPECT_EQ(res.pipeline[2].config_id, "pipeline-full");
    EXPECT_LE(res.pipeline[2].linf_rel_err, 2.0 * res.pipeline[0].linf_rel_err);
    EXPECT_LE(std::abs(res.pipeline[1].diagnostics.seg_balance), 1e-10);
    for (const char* name : {"results.csv", "ref.vtk", "main.vtk", "seg.vtk", "diff.vtk"}) {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    }
    EXPECT_FALSE(fs::exists(dir / "table_uc.csv"));
    EXPECT_NE(read_file(dir / "diff.vtk").find("rel_diff"), std::string::npos);
    fs::remove_all(dir);
}

TEST(ExperimentRuns, RepeatedAndParallelRunsAgree) {
    ExperimentConfig cfg = coarse();
    cfg.delta_list = {0.20, 0.15};
    cfg.nu_list = {0.05, 0.01};
    cfg.out_dir = scratch_dir("determinism").string();
    const std::string first = results_text(run_all(cfg).all_rows());
    const std::string second = results_text(run_all(cfg).all_rows());
    EXPECT_EQ(first, second);
    cfg.workers = 2;
    EXPECT_EQ(results_text(run_all(cfg).all_rows()), first);

    const ExperimentResults res = run_all(cfg);
    ASSERT_EQ(res.c.size(), 2u);
    for (std::size_t i = 0; i < res.c.size(); ++i) {
        ASSERT_TRUE(res.c[i].ratio.has_value());
        EXPECT_NEAR(*res.c[i].ratio, res.uc[i].linf_rel_err / res.c[i].linf_rel_err, 1e-12);
    }
    fs::remove_all(cfg.out_dir);
}

TEST(Cli, RunsATableAndWritesCsv) {
    const fs::path dir = scratch_dir("cli");
    const Command c = run_cli("table-uc --h 0.05 --delta-list 0.2 --set mesh.channel_cells=8 --out " + dir.string());
    EXPECT_EQ(c.status, 0) << c.output;
    EXPECT_NE(c.output.find("uc-d20"), std::string::npos);
    const std::string csv = read_file(dir / "results.csv");
    EXPECT_EQ(csv.rfind(results_header(), 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "table_uc.csv"));
    fs::remove_all(dir);
}

TEST(Cli, ReportsErrorsAsJsonLine) {
    Command c = run_cli("table-uc --h 0.5");
    EXPECT_EQ(c.status, 2);
    EXPECT_NE(c.output.find("\"code\":\"config\""), std::string::npos) << c.output;
    EXPECT_NE(c.output.find("\"status\":\"error\""), std::string::npos);

    c = run_cli("table-uc --set nonsense=1");
    EXPECT_EQ(c.status, 2);
    EXPECT_NE(c.output.find("nonsense"), std::string::npos);

    c = run_cli("frobnicate");
    EXPECT_NE(c.status, 0);
    EXPECT_NE(c.output.find("\"code\":\"usage\""), std::string::npos) << c.output;

    c = run_cli("all --config /nonexistent/lagoon.cfg");
    EXPECT_EQ(c.status, 2);
}

TEST(Cli, DumpsEffectiveConfig) {
    const Command c = run_cli("table-c --h 0.015 --workers 2 --dump-config");
    EXPECT_EQ(c.status, 0) << c.output;
    EXPECT_NE(c.output.find("mesh.h = 0.015"), std::string::npos) << c.output;
    EXPECT_NE(c.output.find("run.workers = 2"), std::string::npos);
}
