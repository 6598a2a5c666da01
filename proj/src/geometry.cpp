#include "lagoon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "lagoon/error.hpp"

namespace lagoon {

std::string_view to_string(BoundaryLabel label) {
    switch (label) {
    case BoundaryLabel::GammaIn: return "GammaIn";
    case BoundaryLabel::GammaZero: return "GammaZero";
    case BoundaryLabel::GammaInterface: return "GammaInterface";
    }
    return "?";
}

std::string_view to_string(Region region) { return region == Region::Main ? "Main" : "Seg"; }

std::string_view to_string(ProfileKind kind) {
    switch (kind) {
    case ProfileKind::Poiseuille: return "poiseuille";
    case ProfileKind::Constant: return "constant";
    case ProfileKind::ExactPointwise: return "exact-pointwise";
    case ProfileKind::ExactVariational: return "exact-variational";
    }
    return "?";
}

ProfileKind parse_profile_kind(std::string_view text) {
    for (auto kind : {ProfileKind::Poiseuille, ProfileKind::Constant, ProfileKind::ExactPointwise,
                      ProfileKind::ExactVariational}) {
        if (text == to_string(kind)) return kind;
    }
    throw InvalidArgument("unknown profile kind '" + std::string(text) + "'");
}

void GeometryParams::validate() const {
    auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!finite_positive(r_main) || !finite_positive(r_seg))
        throw GeometryError("disk radii must be positive");
    if (!finite_positive(channel_length)) throw GeometryError("channel_length must be positive");
    if (!finite_positive(boundary_segments_per_unit))
        throw GeometryError("boundary_segments_per_unit must be positive");
    if (!finite_positive(delta) || delta >= 2.0 * std::min(r_main, r_seg))
        throw GeometryError("degenerate channel: need 0 < delta < 2*min(r_main, r_seg)");
    if (!finite_positive(entrance_width) || entrance_width >= 2.0 * r_main)
        throw GeometryError("entrance chord must satisfy 0 < entrance_width < 2*r_main");
    // The main-disk arc between the entrance chord and the channel opening
    // must have positive extent on both sides.
    const double half_channel = std::asin(delta / (2.0 * r_main));
    const double half_entrance = std::asin(entrance_width / (2.0 * r_main));
    if (half_channel + half_entrance >= std::numbers::pi)
        throw GeometryError("entrance chord overlaps the channel opening");
}

double Curve::length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) len += distance(points[i - 1], points[i]);
    return len;
}

namespace {

int segment_count(double length, double density) {
    return std::max(1, static_cast<int>(std::ceil(length * density - 1e-9)));
}

// Appends the arc from angle a0 to a1 (radians, counterclockwise when
// a1 > a0) excluding its first point. Interior vertices are pushed radially
// outward so the polyline encloses the same area as the arc.
void append_arc(std::vector<Point2>& out, Point2 center, double radius, double a0, double a1,
                Point2 exact_end, double density) {
    const double sweep = a1 - a0;
    const int n = segment_count(std::abs(sweep) * radius, density);
    const double phi = std::abs(sweep) / n;
    double k = 1.0;
    if (n == 2) {
        k = std::abs(sweep) / (2.0 * std::sin(phi));
    } else if (n > 2) {
        const double s = std::sin(phi);
        const double a = (n - 2) * s, b = 2.0 * s, c = -std::abs(sweep);
        k = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
    }
    for (int i = 1; i < n; ++i) {
        const double t = a0 + sweep * i / n;
        out.push_back({center.x + radius * k * std::cos(t), center.y + radius * k * std::sin(t)});
    }
    out.push_back(exact_end);
}

void append_line(std::vector<Point2>& out, Point2 to, double density) {
    const Point2 from = out.back();
    const int n = segment_count(distance(from, to), density);
    for (int i = 1; i < n; ++i) {
        const double t = static_cast<double>(i) / n;
        out.push_back(from + t * (to - from));
    }
    out.push_back(to);
}

Point2 mirror(Point2 p) { return {p.x == 0.0 ? 0.0 : -p.x, p.y}; }

std::size_t find_vertex(const std::vector<Point2>& pts, Point2 target) {
    auto it = std::find(pts.begin(), pts.end(), target);
    if (it == pts.end()) throw GeometryError("internal: missing construction vertex");
    return static_cast<std::size_t>(it - pts.begin());
}

} // namespace

LagoonGeometry build_lagoon(const GeometryParams& params) {
    params.validate();
    const double pi = std::numbers::pi;
    const double density = params.boundary_segments_per_unit;
    const double half_len = 0.5 * params.channel_length;
    const double half_delta = 0.5 * params.delta;
    const double alpha_main = std::asin(params.delta / (2.0 * params.r_main));
    const double alpha_seg = std::asin(params.delta / (2.0 * params.r_seg));
    const double beta = std::asin(params.entrance_width / (2.0 * params.r_main));

    LagoonGeometry g;
    g.params = params;
    g.main_center = {0.0, -half_len - params.r_main * std::cos(alpha_main)};
    g.seg_center = {0.0, half_len + params.r_seg * std::cos(alpha_seg)};
    g.entrance_y = g.main_center.y - params.r_main * std::cos(beta);
    g.top_y = g.seg_center.y + params.r_seg;

    // Left half of the outer loop, traversed top -> entrance-chord midpoint.
    const Point2 top{0.0, g.top_y};
    const Point2 seg_wall{-half_delta, half_len};
    const Point2 wall_mid{-half_delta, 0.0};
    const Point2 main_wall{-half_delta, -half_len};
    const Point2 chord_left{-0.5 * params.entrance_width, g.entrance_y};
    const Point2 chord_mid{0.0, g.entrance_y};

    std::vector<Point2> chain{top};
    append_arc(chain, g.seg_center, params.r_seg, 0.5 * pi, 1.5 * pi - alpha_seg, seg_wall, density);
    append_line(chain, wall_mid, density);
    append_line(chain, main_wall, density);
    append_arc(chain, g.main_center, params.r_main, 0.5 * pi + alpha_main, 1.5 * pi - beta,
               chord_left, density);
    const std::size_t idx = chain.size() - 1;
    append_line(chain, chord_mid, density);

    const std::size_t n = chain.size();
    std::vector<BoundaryLabel> chain_labels(n - 1, BoundaryLabel::GammaZero);
    for (std::size_t i = idx; i + 1 < n; ++i) chain_labels[i] = BoundaryLabel::GammaIn;

    // Right half: mirror image traversed bottom -> top.
    std::vector<Point2> right(n);
    std::vector<BoundaryLabel> right_labels(n - 1);
    for (std::size_t j = 0; j < n; ++j) right[j] = mirror(chain[n - 1 - j]);
    for (std::size_t j = 0; j + 1 < n; ++j) right_labels[j] = chain_labels[n - 2 - j];

    for (std::size_t i = idx; i < n; ++i) g.loop.push_back(chain[i]);
    for (std::size_t j = 1; j < n; ++j) g.loop.push_back(right[j]);
    for (std::size_t i = 1; i < idx; ++i) g.loop.push_back(chain[i]);
    for (std::size_t i = idx; i + 1 < n; ++i) g.segment_labels.push_back(chain_labels[i]);
    for (std::size_t j = 0; j + 1 < n; ++j) g.segment_labels.push_back(right_labels[j]);
    for (std::size_t i = 0; i < idx; ++i) g.segment_labels.push_back(chain_labels[i]);

    std::vector<Point2> half_iface{wall_mid};
    append_line(half_iface, Point2{0.0, 0.0}, density);
    g.interface = half_iface;
    for (std::size_t i = half_iface.size() - 1; i-- > 0;) g.interface.push_back(mirror(half_iface[i]));

    g.area_total = shoelace_area(g.loop);
    g.area_main = shoelace_area(g.main_polygon());
    g.area_seg = shoelace_area(g.seg_polygon());
    return g;
}

std::vector<Point2> LagoonGeometry::main_polygon() const {
    const std::size_t left = find_vertex(loop, interface.front());
    const std::size_t right = find_vertex(loop, interface.back());
    std::vector<Point2> poly;
    for (std::size_t i = left;; i = (i + 1) % loop.size()) {
        poly.push_back(loop[i]);
        if (i == right) break;
    }
    for (std::size_t i = interface.size() - 1; i-- > 1;) poly.push_back(interface[i]);
    return poly;
}

std::vector<Point2> LagoonGeometry::seg_polygon() const {
    const std::size_t left = find_vertex(loop, interface.front());
    const std::size_t right = find_vertex(loop, interface.back());
    std::vector<Point2> poly;
    for (std::size_t i = right;; i = (i + 1) % loop.size()) {
        poly.push_back(loop[i]);
        if (i == left) break;
    }
    for (std::size_t i = 1; i + 1 < interface.size(); ++i) poly.push_back(interface[i]);
    return poly;
}

std::vector<Curve> LagoonGeometry::curves() const {
    std::vector<Curve> out;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (out.empty() || out.back().label != segment_labels[i]) {
            out.push_back({segment_labels[i], {loop[i]}});
        }
        out.back().points.push_back(loop[(i + 1) % n]);
    }
    if (out.size() > 1 && out.front().label == out.back().label) {
        auto& last = out.back();
        last.points.insert(last.points.end(), out.front().points.begin() + 1, out.front().points.end());
        out.front() = std::move(last);
        out.pop_back();
    }
    out.push_back({BoundaryLabel::GammaInterface, interface});
    return out;
}

LagoonGeometry build_equal_area_lagoon(GeometryParams params) {
    params.validate();
    const auto defect = [&](double r_seg) {
        GeometryParams p = params;
        p.r_seg = r_seg;
        const LagoonGeometry g = build_lagoon(p);
        return g.area_seg - g.area_main;
    };
    double lo = 0.5 * params.delta * (1.0 + 1e-6);
    double hi = std::max(2.0 * params.r_main, 2.0 * lo);
    while (defect(hi) < 0.0) hi *= 2.0;
    if (defect(lo) > 0.0) throw GeometryError("equal-area preset: secondary disk cannot be small enough");
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (defect(mid) < 0.0 ? lo : hi) = mid;
    }
    params.r_seg = 0.5 * (lo + hi);
    return build_lagoon(params);
}

void write_polygon_file(std::ostream& os, const LagoonGeometry& geom) {
    os << std::setprecision(17);
    for (const Curve& c : geom.curves()) {
        os << to_string(c.label) << ' ' << c.points.size() << '\n';
        for (const Point2& p : c.points) os << p.x << ' ' << p.y << '\n';
    }
}

double InterfaceProfile::weight(double s) const {
    const double slack = 1e-12 * width;
    if (!(s >= -slack && s <= width + slack))
        throw InvalidArgument("profile position outside [0, width]");
    s = std::clamp(s, 0.0, width);
    switch (kind) {
    case ProfileKind::Poiseuille: return 6.0 * s * (width - s) / (width * width * width);
    case ProfileKind::Constant: return 1.0 / width;
    default: throw InvalidArgument("exact profiles have no analytic weight");
    }
}

} // namespace lagoon
