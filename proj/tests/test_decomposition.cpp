#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lagoon/decomposition.hpp"
#include "lagoon/error.hpp"

using namespace lagoon;

namespace {

TriMesh make_mesh(double h, double delta = 0.2) {
    MeshOptions o;
    o.channel_cells = 20;
    GeometryParams p;
    p.delta = delta;
    return triangulate(build_lagoon(p), h, o);
}

const ReferenceRun& reference() {
    static const ReferenceRun ref = run_reference(make_mesh(0.02), PhysicalParams{}, TransportConfig{});
    return ref;
}

const CoupledRun& pointwise_run() {
    static const CoupledRun run =
        run_decomposition(reference(), ProfileKind::ExactPointwise, PhysicalParams{}, TransportConfig{});
    return run;
}

double edge_integral(const TriMesh& m, const InterfaceFlux& f) {
    double s = 0.0;
    for (const auto& e : f.edges) s += m.edge_length(e.edge) * (e.q_start + 4 * e.q_mid + e.q_end) / 6.0;
    return s;
}

std::vector<Index> identity(std::size_t n) {
    std::vector<Index> id(n);
    for (std::size_t i = 0; i < n; ++i) id[i] = static_cast<Index>(i);
    return id;
}

} // namespace

TEST(Decomposition, ConstantProfileIsUniform) {
    const TriMesh& m = reference().mesh;
    const PhysicalParams p;
    const InterfaceFlux f = interface_flux(m, {ProfileKind::Constant, 0.2}, p);
    const double q = p.theta0 * m.area(Region::Seg);
    EXPECT_NEAR(f.q_seg, q, 1e-14);
    for (const auto& e : f.edges) {
        EXPECT_NEAR(e.q_start, 5.0 * q, 1e-12);
        EXPECT_NEAR(e.q_mid, 5.0 * q, 1e-12);
        EXPECT_NEAR(e.q_end, 5.0 * q, 1e-12);
    }
    EXPECT_NEAR(f.total(m, p), q, 1e-12);
}

TEST(Decomposition, PoiseuilleProfilePeaksOnTheAxis) {
    const TriMesh& m = reference().mesh;
    const PhysicalParams p;
    const InterfaceFlux f = interface_flux(m, {ProfileKind::Poiseuille, 0.2}, p);
    double peak = 0.0;
    for (const auto& e : f.edges) peak = std::max({peak, e.q_start, e.q_mid, e.q_end});
    EXPECT_NEAR(peak, 7.5 * f.q_seg, 1e-12);
    EXPECT_NEAR(edge_integral(m, f), f.q_seg, 1e-12);
    EXPECT_NEAR(f.rescale, f.q_seg, 1e-12);
}

TEST(Decomposition, DryLagoonHasNoInterfaceFlux) {
    const TriMesh& m = reference().mesh;
    PhysicalParams p;
    p.theta0 = 0.0;
    for (ProfileKind k : {ProfileKind::Poiseuille, ProfileKind::Constant}) {
        const InterfaceFlux f = interface_flux(m, {k, 0.2}, p);
        for (const auto& e : f.edges) EXPECT_EQ(e.q_mid, 0.0);
    }
    const InterfaceFlux f = exact_pointwise_profile(m, VelocityField(m.triangle_count()), p);
    EXPECT_EQ(f.q_seg, 0.0);
    for (const auto& e : f.edges) EXPECT_EQ(e.q_mid, 0.0);
}

TEST(Decomposition, ModelProfileRejectsExactKinds) {
    EXPECT_THROW(interface_flux(reference().mesh, {ProfileKind::ExactPointwise, 0.2}, {}), InvalidArgument);
    const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const TriMesh plain = triangulate_polygon(square, std::vector<BoundaryLabel>(4, BoundaryLabel::GammaZero), 0.3);
    EXPECT_THROW(interface_flux(plain, {ProfileKind::Constant, 0.2}, {}), InvalidArgument);
}

TEST(Decomposition, PointwiseProfileNeedsOnlyASmallRescale) {
    const InterfaceFlux& f = pointwise_run().flux;
    EXPECT_GE(f.rescale, 0.95);
    EXPECT_LE(f.rescale, 1.05);
    EXPECT_NEAR(f.total(reference().mesh, PhysicalParams{}), f.q_seg, 1e-12);
}

TEST(Decomposition, PointwiseProfileIsMirrorSymmetric) {
    const TriMesh& m = reference().mesh;
    const InterfaceFlux& f = pointwise_run().flux;
    std::map<long long, double> by_center;
    double scale = 0.0;
    for (const auto& e : f.edges) {
        by_center[std::llround(m.edge_midpoint(e.edge).x * 1e9)] = e.q_mid;
        scale = std::max(scale, std::abs(e.q_mid));
    }
    for (const auto& [x, q] : by_center) {
        const auto mirror = by_center.find(-x);
        ASSERT_NE(mirror, by_center.end());
        EXPECT_NEAR(q, mirror->second, 1e-6 * scale);
    }
}

TEST(Decomposition, VariationalProfileReproducesReferencePotential) {
    const CoupledRun run = run_decomposition(reference(), ProfileKind::ExactVariational, PhysicalParams{},
                                             TransportConfig{}, [] {
                                                 DecompositionOptions o;
                                                 o.solve_seg = false;
                                                 return o;
                                             }());
    EXPECT_LE(run.max_psi_deviation, 1e-8);
    EXPECT_NEAR(run.flux.total(reference().mesh, PhysicalParams{}), run.flux.q_seg, 1e-10);
    EXPECT_LE(std::abs(run.main_balance_defect), 1e-10);
    EXPECT_FALSE(run.seg.has_value());
    // The velocity is exact here, so what remains is the tracer's interface condition.
    EXPECT_NEAR(run.main_error.relative, pointwise_run().main_error.relative,
                0.05 * pointwise_run().main_error.relative);
}

TEST(Decomposition, MainAndSegRunsBalanceWater) {
    const CoupledRun& run = pointwise_run();
    EXPECT_LE(std::abs(run.main_balance_defect), 1e-10);
    EXPECT_LE(std::abs(run.seg_balance_defect), 1e-10);
    EXPECT_EQ(run.trace.values.size(), TransportConfig{}.steps());
    EXPECT_EQ(run.trace.nodes.size(), reference().main_mesh.label_nodes(BoundaryLabel::GammaInterface).size());
    ASSERT_TRUE(run.seg.has_value());
    EXPECT_TRUE(run.main.transport.dirichlet_exact);
}

TEST(Decomposition, ExactProfileBeatsPoiseuille) {
    DecompositionOptions o;
    o.solve_seg = false;
    const CoupledRun pois = run_decomposition(reference(), ProfileKind::Poiseuille, {}, {}, o);
    EXPECT_GT(pois.main_error.relative, 3.0 * pointwise_run().main_error.relative);
    EXPECT_GT(pois.main_error.relative, 0.005);
    EXPECT_LT(pois.main_error.relative, 0.15);
}

TEST(Decomposition, PipelineErrorStaysCloseToMainError) {
    const ReferenceRun& ref = reference();
    const CoupledRun& run = pointwise_run();
    ASSERT_TRUE(run.seg_error.has_value());
    const ScalarField full = pipeline_field(ref, run.main.g, run.seg->g);
    const ErrorMetric e = linf_relative_error(full, ref.fields.g, identity(full.size()), 5.0);
    EXPECT_LE(e.relative, 2.0 * run.main_error.relative);
    EXPECT_LE(run.seg_error->relative, 5.0 * run.main_error.relative);
    for (std::size_t i = 0; i < ref.main_mesh.node_count(); ++i) {
        EXPECT_EQ(full[ref.main_mesh.parent_node[i]], run.main.g[i]);
    }
}

TEST(Decomposition, FrozenTraceKeepsSegFullyConfined) {
    const ReferenceRun& ref = reference();
    const PhysicalParams p;
    const TransportConfig cfg;
    TraceRecord frozen;
    frozen.nodes = ref.main_mesh.label_nodes(BoundaryLabel::GammaInterface);
    frozen.values.assign(cfg.steps(), std::vector<double>(frozen.nodes.size(), cfg.T));
    double balance = 1.0;
    const FieldSet seg = solve_seg(ref, pointwise_run().flux, frozen, p, cfg, {}, &balance);
    EXPECT_LE(std::abs(balance), 1e-10);
    for (double v : seg.g) EXPECT_NEAR(v, cfg.T, 1e-8);

    frozen.values.pop_back();
    EXPECT_THROW(solve_seg(ref, pointwise_run().flux, frozen, p, cfg, {}), InvalidArgument);
}

TEST(Decomposition, StillLagoonPipelineMatchesDiffusionReference) {
    PhysicalParams p;
    p.theta0 = 0.0;
    TransportConfig cfg;
    cfg.solver.tol = 1e-13;
    const ReferenceRun ref = run_reference(make_mesh(0.05), p, cfg);
    const CoupledRun run = run_decomposition(ref, ProfileKind::ExactPointwise, p, cfg);
    for (const Point2& u : run.main.u) EXPECT_EQ(norm(u), 0.0);
    const ScalarField full = pipeline_field(ref, run.main.g, run.seg->g);
    double worst = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) worst = std::max(worst, std::abs(full[i] - ref.fields.g[i]));
    EXPECT_LE(worst, 1e-9 * cfg.T);
}

TEST(Decomposition, RelativeErrorMetric) {
    const std::vector<double> ref{0.001, 1.0, 2.0, 4.0, 5.0};
    const std::vector<Index> id = identity(ref.size());
    EXPECT_EQ(linf_relative_error(ref, ref, id, 5.0).relative, 0.0);
    std::vector<double> scaled;
    for (double v : ref) scaled.push_back(1.01 * v);
    const ErrorMetric m = linf_relative_error(scaled, ref, id, 5.0);
    EXPECT_NEAR(m.relative, 0.01, 1e-14);
    EXPECT_NEAR(m.absolute, 0.05, 1e-14);
    EXPECT_EQ(m.counted, 4u);
    EXPECT_DOUBLE_EQ(m.floor, 5e-3);

    std::vector<double> spiked = ref;
    spiked[0] = 1.0;
    EXPECT_EQ(linf_relative_error(spiked, ref, id, 5.0).relative, 0.0);

    const std::vector<double> subset{2.2};
    const std::vector<Index> inj{2};
    const ErrorMetric s = linf_relative_error(subset, ref, inj, 5.0);
    EXPECT_NEAR(s.relative, 0.1, 1e-14);
    EXPECT_EQ(s.argmax, 0);

    const std::vector<double> tiny{1e-4, 1e-4};
    EXPECT_THROW(linf_relative_error(tiny, tiny, identity(2), 5.0), InvalidArgument);
    EXPECT_THROW(linf_relative_error(ref, ref, id, 5.0, -1.0), InvalidArgument);
}
