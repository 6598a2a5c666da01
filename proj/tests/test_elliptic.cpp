#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "lagoon/error.hpp"
#include "lagoon/elliptic.hpp"

using namespace lagoon;

namespace {

constexpr double kPi = std::numbers::pi;

TriMesh unit_square(double h, std::array<BoundaryLabel, 4> labels = {BoundaryLabel::GammaZero, BoundaryLabel::GammaZero,
                                                                     BoundaryLabel::GammaZero, BoundaryLabel::GammaZero}) {
    const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    return triangulate_polygon(square, {labels.begin(), labels.end()}, h);
}

const TriMesh& lagoon_mesh() {
    static const TriMesh mesh = [] {
        MeshOptions o;
        o.channel_cells = 20;
        return triangulate(build_lagoon({}), 0.02, o);
    }();
    return mesh;
}

// Degree-5 seven-point rule on the reference triangle (barycentric weights).
struct QuadPoint {
    double a, b, c, w;
};
const std::array<QuadPoint, 7>& dunavant5() {
    static const double a1 = 0.059715871789770, b1 = 0.470142064105115;
    static const double a2 = 0.797426985353087, b2 = 0.101286507323456;
    static const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
    static const std::array<QuadPoint, 7> pts{{{1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
                                               {a1, b1, b1, w1},
                                               {b1, a1, b1, w1},
                                               {b1, b1, a1, w1},
                                               {a2, b2, b2, w2},
                                               {b2, a2, b2, w2},
                                               {b2, b2, a2, w2}}};
    return pts;
}

template <typename Exact>
double l2_error(const TriMesh& m, std::span<const double> psi, Exact exact) {
    // Align the additive constant in the L2 sense before measuring.
    double diff_mean = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        double acc = 0.0;
        for (std::size_t t = 0; t < m.triangle_count(); ++t) {
            const auto& tri = m.triangles[t];
            const Point2 p0 = m.nodes[tri[0]], p1 = m.nodes[tri[1]], p2 = m.nodes[tri[2]];
            const double area = m.triangle_area(t);
            for (const QuadPoint& q : dunavant5()) {
                const Point2 x = q.a * p0 + q.b * p1 + q.c * p2;
                const double uh = q.a * psi[tri[0]] + q.b * psi[tri[1]] + q.c * psi[tri[2]];
                const double d = uh - exact(x) - diff_mean;
                acc += q.w * area * (pass == 0 ? d : d * d);
            }
        }
        if (pass == 0) diff_mean = acc / m.area();
        else return std::sqrt(acc);
    }
    return 0.0;
}

} // namespace

TEST(Elliptic, ManufacturedSolutionConvergesAtSecondOrder) {
    const auto exact = [](Point2 p) { return std::cos(kPi * p.x) * std::cos(kPi * p.y); };
    const SourceFunction theta = [&](Point2 p) { return 2 * kPi * kPi * exact(p); };
    PotentialOptions opt;
    opt.project_load = true;
    std::vector<double> errors;
    const std::vector<double> hs{0.08, 0.04, 0.02};
    for (double h : hs) {
        const TriMesh m = unit_square(h);
        const PotentialSolution s = solve_potential(m, PhysicalParams{}, FluxData{}, opt, theta);
        errors.push_back(l2_error(m, s.psi, exact));
    }
    for (std::size_t i = 1; i < hs.size(); ++i) {
        const double rate = std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]);
        EXPECT_GE(rate, 1.8) << "h " << hs[i];
        EXPECT_LE(rate, 2.2) << "h " << hs[i];
    }
    EXPECT_LT(errors.back(), 1e-3);
}

TEST(Elliptic, StiffnessAnnihilatesConstants) {
    const EllipticSystem sys = assemble_potential_system(lagoon_mesh(), {}, build_entrance_flux(lagoon_mesh(), {}));
    const std::vector<double> ones(lagoon_mesh().node_count(), 1.0);
    double worst = 0.0;
    for (double v : sys.stiffness.multiply(ones)) worst = std::max(worst, std::abs(v));
    EXPECT_LE(worst, 1e-12);
    EXPECT_TRUE(sys.stiffness.is_symmetric(1e-14));
    for (double d : sys.stiffness.diagonal()) EXPECT_GT(d, 0.0);
}

TEST(Elliptic, LoadVectorIsConservative) {
    const TriMesh& m = lagoon_mesh();
    const PhysicalParams p;
    const EllipticSystem sys = assemble_potential_system(m, p, build_entrance_flux(m, p));
    const auto load = sys.load();
    EXPECT_NEAR(std::accumulate(load.begin(), load.end(), 0.0), 0.0, 1e-10);
    EXPECT_NEAR(std::accumulate(sys.source_load.begin(), sys.source_load.end(), 0.0), m.area(), 1e-12);
}

TEST(Elliptic, ZeroDataGivesZeroPotential) {
    PhysicalParams p;
    p.theta0 = 0.0;
    const TriMesh& m = lagoon_mesh();
    const PotentialSolution s = solve_potential(m, p, build_entrance_flux(m, p));
    for (double v : s.psi) EXPECT_EQ(v, 0.0);
    for (const Point2& u : recover_velocity(m, s.psi)) EXPECT_EQ(norm(u), 0.0);
}

TEST(Elliptic, EntranceFluxBalancesEvaporation) {
    const TriMesh& m = lagoon_mesh();
    PhysicalParams p;
    const FluxData f = build_entrance_flux(m, p);
    ASSERT_FALSE(f.edges.empty());
    const double expected = m.area() / 0.45;
    for (const auto& e : f.edges) {
        EXPECT_EQ(m.edges[e.edge].label, BoundaryLabel::GammaIn);
        EXPECT_NEAR(std::abs(e.q_mid), expected, 1e-10 * expected);
        EXPECT_LT(e.q_mid, 0.0);
        EXPECT_EQ(e.q_start, e.q_mid);
        EXPECT_EQ(e.q_end, e.q_mid);
    }
    EXPECT_NEAR(f.total(m, p) + p.theta0 * m.area(), 0.0, 1e-12);
    EXPECT_NEAR(f.total(m, p, BoundaryLabel::GammaIn), f.total(m, p), 1e-14);

    PhysicalParams doubled = p;
    doubled.theta0 = 2.0;
    const FluxData f2 = build_entrance_flux(m, doubled);
    for (std::size_t i = 0; i < f.edges.size(); ++i) EXPECT_EQ(f2.edges[i].q_mid, 2.0 * f.edges[i].q_mid);

    PhysicalParams dry = p;
    dry.theta0 = 0.0;
    for (const auto& e : build_entrance_flux(m, dry).edges) EXPECT_EQ(e.q_mid, 0.0);
}

TEST(Elliptic, EntranceFluxNeedsEntrance) {
    const TriMesh m = unit_square(0.2);
    EXPECT_THROW(build_entrance_flux(m, {}), InvalidArgument);
}

TEST(Elliptic, UnbalancedFluxIsRejected) {
    const TriMesh& m = lagoon_mesh();
    const FluxData f = build_entrance_flux(m, {}).scaled(0.9);
    EXPECT_THROW(solve_potential(m, {}, f), CompatibilityError);
    try {
        (void)solve_potential(m, {}, f);
    } catch (const CompatibilityError& e) {
        EXPECT_NEAR(e.defect(), 0.1 * m.area(), 1e-9);
    }
}

TEST(Elliptic, PotentialIsLinearInTheData) {
    const TriMesh& m = lagoon_mesh();
    PhysicalParams p;
    const PotentialSolution s1 = solve_potential(m, p, build_entrance_flux(m, p));
    p.theta0 = 2.0;
    const PotentialSolution s2 = solve_potential(m, p, build_entrance_flux(m, p));
    double scale = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < s1.psi.size(); ++i) {
        scale = std::max(scale, std::abs(s1.psi[i]));
        worst = std::max(worst, std::abs(s2.psi[i] - 2.0 * s1.psi[i]));
    }
    EXPECT_LE(worst, 1e-8 * scale);
    EXPECT_NEAR(std::accumulate(s1.psi.begin(), s1.psi.end(), 0.0), 0.0, 1e-9 * scale * double(s1.psi.size()));
    EXPECT_LE(std::abs(s1.balance_defect), 1e-12);
}

TEST(Elliptic, VelocityOfLinearAndConstantPotentials) {
    const TriMesh m = unit_square(0.1);
    std::vector<double> x(m.node_count()), c(m.node_count(), 3.5);
    for (std::size_t i = 0; i < m.node_count(); ++i) x[i] = m.nodes[i].x;
    for (const Point2& u : recover_velocity(m, x)) {
        EXPECT_NEAR(u.x, 1.0, 1e-12);
        EXPECT_NEAR(u.y, 0.0, 1e-12);
    }
    for (const Point2& u : recover_velocity(m, c)) EXPECT_NEAR(norm(u), 0.0, 1e-12);
}

TEST(Elliptic, VelocityOfQuadraticMatchesHandComputation) {
    TriMesh m;
    m.nodes = {{0.2, 0.1}, {0.5, 0.15}, {0.3, 0.45}};
    m.triangles = {{0, 1, 2}};
    m.regions = {Region::Main};
    m.edges = {{{0, 1}, BoundaryLabel::GammaZero}, {{1, 2}, BoundaryLabel::GammaZero}, {{2, 0}, BoundaryLabel::GammaZero}};
    std::vector<double> psi;
    for (const Point2& p : m.nodes) psi.push_back(p.x * p.x);
    const Point2 a = m.nodes[0], b = m.nodes[1], c = m.nodes[2];
    const double two_area = orient2d(a, b, c);
    const double gx = (psi[0] * (b.y - c.y) + psi[1] * (c.y - a.y) + psi[2] * (a.y - b.y)) / two_area;
    const double gy = (psi[0] * (c.x - b.x) + psi[1] * (a.x - c.x) + psi[2] * (b.x - a.x)) / two_area;
    const Point2 u = recover_velocity(m, psi).at(0);
    EXPECT_NEAR(u.x, gx, 1e-14);
    EXPECT_NEAR(u.y, gy, 1e-14);
    const double h = std::max({distance(a, b), distance(b, c), distance(c, a)});
    EXPECT_LE(std::abs(u.x - 2.0 * m.centroid(0).x), 2.0 * h);
}

TEST(Elliptic, ConsistentFluxIsExactForLinearPotential) {
    const TriMesh m = unit_square(0.1, {BoundaryLabel::GammaZero, BoundaryLabel::GammaZero, BoundaryLabel::GammaZero,
                                        BoundaryLabel::GammaIn});
    PhysicalParams p;
    p.theta0 = 0.0;
    FluxData f;
    for (std::size_t e : m.label_edges(BoundaryLabel::GammaIn)) f.edges.push_back({e, -1.0, -1.0, -1.0});
    FluxData right;
    for (std::size_t e : m.label_edges(BoundaryLabel::GammaZero)) {
        if (m.edge_midpoint(e).x == 1.0) right.edges.push_back({e, 1.0, 1.0, 1.0});
    }
    FluxData all = f;
    all.append(right);
    PotentialOptions opt;
    opt.solver.tol = 1e-13;
    const PotentialSolution s = solve_potential(m, p, all, opt);
    std::vector<double> shifted_x(m.node_count());
    for (std::size_t i = 0; i < m.node_count(); ++i) shifted_x[i] = m.nodes[i].x;
    const double mean_x = std::accumulate(shifted_x.begin(), shifted_x.end(), 0.0) / double(m.node_count());
    for (std::size_t i = 0; i < m.node_count(); ++i) EXPECT_NEAR(s.psi[i], shifted_x[i] - mean_x, 1e-10);

    const EllipticSystem without_right = assemble_potential_system(m, p, f);
    const FluxData lambda =
        boundary_flux_extract(m, s.psi, without_right.stiffness, without_right.load(), BoundaryLabel::GammaZero);
    const auto expected = assemble_flux_load(m, p, right);
    double sum = 0.0;
    for (const auto& [node, value] : lambda.nodal) {
        EXPECT_NEAR(value, expected[node], 1e-12);
        sum += value;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Elliptic, ConsistentInterfaceFluxCarriesSecondaryEvaporation) {
    const TriMesh& m = lagoon_mesh();
    const PhysicalParams p;
    const PotentialSolution ref = solve_potential(m, p, build_entrance_flux(m, p));
    const TriMesh main = extract_submesh(m, Region::Main);
    std::vector<double> psi_main(main.node_count());
    for (std::size_t i = 0; i < main.node_count(); ++i) psi_main[i] = ref.psi[main.parent_node[i]];
    const double q_seg = p.theta0 * m.area(Region::Seg);
    const EllipticSystem sys = assemble_potential_system(main, p, build_entrance_flux(main, p, q_seg));
    const FluxData lambda =
        boundary_flux_extract(main, psi_main, sys.stiffness, sys.load(), BoundaryLabel::GammaInterface);
    double sum = 0.0;
    for (const auto& n : lambda.nodal) sum += n.second;
    EXPECT_NEAR(sum, q_seg, 1e-10);
    EXPECT_EQ(lambda.nodal.size(), main.label_nodes(BoundaryLabel::GammaInterface).size());
    EXPECT_THROW(boundary_flux_extract(unit_square(0.2), std::vector<double>(unit_square(0.2).node_count()),
                                       sys.stiffness, sys.load(), BoundaryLabel::GammaInterface),
                 InvalidArgument);
}

TEST(Elliptic, VelocityThroughInterfaceMatchesSecondaryEvaporation) {
    const TriMesh& m = lagoon_mesh();
    const PhysicalParams p;
    const PotentialSolution ref = solve_potential(m, p, build_entrance_flux(m, p));
    const VelocityField u = recover_velocity(m, ref.psi);
    double flux = 0.0;
    for (std::size_t e : m.label_edges(BoundaryLabel::GammaInterface)) {
        const auto [a, b] = m.edges[e].nodes;
        for (std::size_t t = 0; t < m.triangle_count(); ++t) {
            if (m.regions[t] != Region::Main) continue;
            const auto& tri = m.triangles[t];
            const bool has_a = tri[0] == a || tri[1] == a || tri[2] == a;
            const bool has_b = tri[0] == b || tri[1] == b || tri[2] == b;
            if (has_a && has_b) flux += m.edge_length(e) * u[t].y;
        }
    }
    const double q_seg = m.area(Region::Seg);
    EXPECT_NEAR(flux / q_seg, 1.0, 0.02);
}

TEST(Elliptic, ParameterValidation) {
    PhysicalParams p;
    p.theta0 = -1.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.nu = 0.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p = {};
    p.depth = [](Point2) { return 0.0; };
    EXPECT_THROW(solve_potential(lagoon_mesh(), p, FluxData{}), InvalidArgument);
}
