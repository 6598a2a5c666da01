#include "lagoon/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <string>
#include <map>

#include "lagoon/error.hpp"

namespace lagoon::cdt {
namespace {

constexpr Index kNone = -1;

struct Tri {
    std::array<Index, 3> v{};
    std::array<Index, 3> nb{kNone, kNone, kNone}; // nb[i] lies across the edge opposite v[i]
    bool alive = true;
    bool exterior = false;
};

inline int next(int i) { return i == 2 ? 0 : i + 1; }
inline int prev(int i) { return i == 0 ? 2 : i - 1; }

inline std::uint64_t edge_key(Index a, Index b) {
    const auto lo = static_cast<std::uint32_t>(std::min(a, b));
    const auto hi = static_cast<std::uint32_t>(std::max(a, b));
    return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

struct Locate {
    Index tri = kNone;
    std::optional<std::pair<Index, Index>> blocked; // constrained edge hit during the walk
};

// Bowyer-Watson constrained Delaunay triangulation with Ruppert refinement.
class Mesher {
public:
    explicit Mesher(const Pslg& pslg) {
        double xmin = pslg.points.front().x, xmax = xmin;
        double ymin = pslg.points.front().y, ymax = ymin;
        for (const Point2& p : pslg.points) {
            xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
        }
        const double size = std::max(xmax - xmin, ymax - ymin);
        const Point2 c{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
        pts_ = {{c.x - 20.0 * size, c.y - 20.0 * size},
                {c.x + 20.0 * size, c.y - 20.0 * size},
                {c.x, c.y + 20.0 * size}};
        tris_.push_back(Tri{{0, 1, 2}});
        vert_tri_ = {0, 0, 0};
    }

    void insert_input(const Pslg& pslg) {
        for (const Point2& p : pslg.points) {
            const Locate loc = locate(p, hint_, false);
            if (loc.tri == kNone) throw MeshError("input point outside the enclosing triangle");
            for (Index k : tris_[loc.tri].v) {
                if (pts_[k] == p) throw MeshError("duplicate input point");
            }
            if (insert(p, {loc.tri}, std::nullopt) == kNone)
                throw MeshError("could not insert input point");
        }
    }

    // Splits missing segments at their midpoints until every one is an edge,
    // then marks them constrained.
    void recover_segments(const Pslg& pslg) {
        std::deque<Segment> work;
        for (const Segment& s : pslg.segments) {
            work.push_back({s.a + 3, s.b + 3, s.tag});
        }
        std::size_t guard = 0;
        while (!work.empty()) {
            if (++guard > 50'000'000) throw MeshError("segment recovery did not terminate");
            const Segment s = work.front();
            work.pop_front();
            if (find_edge(s.a, s.b).first != kNone) {
                segs_[edge_key(s.a, s.b)] = s.tag;
                continue;
            }
            const Point2 m = midpoint(pts_[s.a], pts_[s.b]);
            const Locate loc = locate(m, vert_tri_[s.a], false);
            const Index mv = insert(m, {loc.tri}, std::nullopt);
            if (mv == kNone) throw MeshError("segment recovery: midpoint insertion failed");
            work.push_back({s.a, mv, s.tag});
            work.push_back({mv, s.b, s.tag});
        }
    }

    void mark_exterior() {
        std::vector<Index> stack;
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (!tris_[t].alive) continue;
            for (Index k : tris_[t].v) {
                if (k < 3) {
                    tris_[t].exterior = true;
                    stack.push_back(static_cast<Index>(t));
                    break;
                }
            }
        }
        while (!stack.empty()) {
            const Index t = stack.back();
            stack.pop_back();
            for (int i = 0; i < 3; ++i) {
                const Index n = tris_[t].nb[i];
                if (n == kNone || tris_[n].exterior) continue;
                if (is_constrained(tris_[t].v[next(i)], tris_[t].v[prev(i)])) continue;
                tris_[n].exterior = true;
                stack.push_back(n);
            }
        }
    }

    void refine(const RefineOptions& opt) {
        max_r_ = opt.max_circumradius;
        size_field_ = opt.size_field;
        sin_min_ = std::sin(opt.min_angle_deg * std::numbers::pi / 180.0);
        for (const auto& [key, tag] : std::vector(segs_.begin(), segs_.end())) {
            seg_queue_.push_back({static_cast<Index>(key >> 32), static_cast<Index>(key & 0xffffffffu), tag});
        }
        for (std::size_t t = 0; t < tris_.size(); ++t) enqueue_if_bad(static_cast<Index>(t));

        while (!seg_queue_.empty() || !bad_queue_.empty()) {
            if (pts_.size() > opt.max_vertices + 3) {
                throw MeshError("refinement reached the vertex cap (" + std::to_string(opt.max_vertices) +
                                ") with " + std::to_string(bad_queue_.size()) + " bad triangles queued");
            }
            if (!seg_queue_.empty()) {
                const Segment s = seg_queue_.front();
                seg_queue_.pop_front();
                if (!is_constrained(s.a, s.b)) continue;
                if (segment_encroached(s.a, s.b)) split_segment(s.a, s.b);
                continue;
            }
            const auto [t, verts] = bad_queue_.front();
            bad_queue_.pop_front();
            const Tri& tri = tris_[t];
            if (!tri.alive || tri.v != verts || tri.exterior || !is_bad(t)) continue;
            const Point2 c = circumcenter(pts_[verts[0]], pts_[verts[1]], pts_[verts[2]]);

            std::vector<std::pair<Index, Index>> hit;
            for (const auto& [key, tag] : sorted_segments()) {
                const Index a = static_cast<Index>(key >> 32), b = static_cast<Index>(key & 0xffffffffu);
                if (encroaches(c, a, b)) hit.emplace_back(a, b);
            }
            if (!hit.empty()) {
                for (const auto& [a, b] : hit) {
                    if (is_constrained(a, b)) split_segment(a, b);
                }
                bad_queue_.push_back({t, verts});
                continue;
            }
            const Locate loc = locate(c, t, true);
            if (loc.blocked) {
                split_segment(loc.blocked->first, loc.blocked->second);
                bad_queue_.push_back({t, verts});
                continue;
            }
            if (loc.tri == kNone || tris_[loc.tri].exterior) continue;
            const Index nv = insert(c, {loc.tri}, std::nullopt);
            if (nv != kNone) after_insert(nv);
        }
    }

    Triangulation extract() const {
        Triangulation out;
        std::vector<Index> remap(pts_.size(), kNone);
        for (std::size_t i = 3; i < pts_.size(); ++i) {
            remap[i] = static_cast<Index>(out.points.size());
            out.points.push_back(pts_[i]);
        }
        for (const Tri& t : tris_) {
            if (!t.alive || t.exterior) continue;
            out.triangles.push_back({remap[t.v[0]], remap[t.v[1]], remap[t.v[2]]});
        }
        for (const auto& [key, tag] : sorted_segments()) {
            out.segments.push_back({remap[static_cast<Index>(key >> 32)],
                                    remap[static_cast<Index>(key & 0xffffffffu)], tag});
        }
        return out;
    }

private:
    std::vector<Point2> pts_;
    std::vector<Tri> tris_;
    std::vector<Index> vert_tri_;
    std::map<std::uint64_t, int> segs_;
    Index hint_ = 0;
    std::vector<unsigned> mark_;
    unsigned stamp_ = 0;

    double max_r_ = 0.0;
    double sin_min_ = 0.0;
    std::deque<Segment> seg_queue_;
    std::deque<std::pair<Index, std::array<Index, 3>>> bad_queue_;
    std::function<double(Point2)> size_field_;
    std::vector<Index> last_new_;

    [[nodiscard]] bool is_constrained(Index a, Index b) const { return segs_.count(edge_key(a, b)) != 0; }

    [[nodiscard]] const std::map<std::uint64_t, int>& sorted_segments() const { return segs_; }

    // Triangle t and local index i such that the edge opposite v[i] runs a -> b.
    [[nodiscard]] std::pair<Index, int> find_edge(Index a, Index b) const {
        Index t = vert_tri_[a];
        for (std::size_t steps = 0; steps < 10'000 && t != kNone; ++steps) {
            const Tri& tri = tris_[t];
            int j = 0;
            while (tri.v[j] != a) ++j;
            if (tri.v[next(j)] == b) return {t, prev(j)};
            t = tri.nb[next(j)]; // rotate clockwise around a across edge (a, v[j+2])
            if (t == vert_tri_[a]) break;
        }
        // Open fan (vertex on the enclosing hull) or stale hint: scan.
        for (std::size_t k = 0; k < tris_.size(); ++k) {
            const Tri& tri = tris_[k];
            if (!tri.alive) continue;
            for (int i = 0; i < 3; ++i) {
                if (tri.v[next(i)] == a && tri.v[prev(i)] == b) return {static_cast<Index>(k), i};
            }
        }
        return {kNone, 0};
    }

    [[nodiscard]] bool contains(Index t, Point2 p) const {
        const Tri& tri = tris_[t];
        for (int i = 0; i < 3; ++i) {
            if (orient2d(pts_[tri.v[next(i)]], pts_[tri.v[prev(i)]], p) < 0.0) return false;
        }
        return true;
    }

    Locate locate(Point2 p, Index start, bool respect_constraints) const {
        Index t = (start != kNone && start < static_cast<Index>(tris_.size()) && tris_[start].alive) ? start : hint_;
        if (!tris_[t].alive) {
            for (std::size_t k = tris_.size(); k-- > 0;) {
                if (tris_[k].alive) {
                    t = static_cast<Index>(k);
                    break;
                }
            }
        }
        const std::size_t limit = 4 * tris_.size() + 16;
        for (std::size_t step = 0; step < limit; ++step) {
            const Tri& tri = tris_[t];
            bool moved = false;
            for (int k = 0; k < 3; ++k) {
                const int i = static_cast<int>((k + step) % 3);
                const Index a = tri.v[next(i)], b = tri.v[prev(i)];
                if (orient2d(pts_[a], pts_[b], p) < 0.0) {
                    if (respect_constraints && is_constrained(a, b)) return {kNone, std::make_pair(a, b)};
                    if (tri.nb[i] == kNone) return {};
                    t = tri.nb[i];
                    moved = true;
                    break;
                }
            }
            if (!moved) return {t, std::nullopt};
        }
        for (std::size_t k = 0; k < tris_.size(); ++k) {
            if (tris_[k].alive && contains(static_cast<Index>(k), p)) return {static_cast<Index>(k), std::nullopt};
        }
        return {};
    }

    struct BoundaryEdge {
        Index u, v, outside, owner;
    };

    // Inserts p, carving the cavity of triangles whose circumcircle contains
    // it (never across constrained edges other than `split`). Returns the
    // new vertex or kNone when the cavity could not be made star-shaped.
    Index insert(Point2 p, std::vector<Index> seeds, std::optional<std::pair<Index, Index>> split) {
        if (mark_.size() < tris_.size()) mark_.resize(tris_.size() + tris_.size() / 2 + 64, 0);
        const auto split_edge = [&](Index a, Index b) {
            return split && ((split->first == a && split->second == b) || (split->first == b && split->second == a));
        };

        std::vector<Index> excluded;
        for (int attempt = 0; attempt < 64; ++attempt) {
            ++stamp_;
            std::vector<Index> cavity;
            std::vector<Index> stack;
            const auto is_excluded = [&](Index t) {
                return std::find(excluded.begin(), excluded.end(), t) != excluded.end();
            };
            for (Index s : seeds) {
                if (mark_[s] != stamp_) {
                    mark_[s] = stamp_;
                    cavity.push_back(s);
                    stack.push_back(s);
                }
            }
            while (!stack.empty()) {
                const Index t = stack.back();
                stack.pop_back();
                const Tri& tri = tris_[t];
                for (int i = 0; i < 3; ++i) {
                    const Index n = tri.nb[i];
                    if (n == kNone || mark_[n] == stamp_ || is_excluded(n)) continue;
                    const Index a = tri.v[next(i)], b = tri.v[prev(i)];
                    if (is_constrained(a, b) && !split_edge(a, b)) continue;
                    if (tris_[n].exterior != tri.exterior) continue;
                    const Tri& nt = tris_[n];
                    if (incircle(pts_[nt.v[0]], pts_[nt.v[1]], pts_[nt.v[2]], p) > 0.0) {
                        mark_[n] = stamp_;
                        cavity.push_back(n);
                        stack.push_back(n);
                    }
                }
            }

            std::vector<BoundaryEdge> boundary;
            Index bad_owner = kNone;
            for (Index t : cavity) {
                const Tri& tri = tris_[t];
                for (int i = 0; i < 3; ++i) {
                    const Index n = tri.nb[i];
                    if (n != kNone && mark_[n] == stamp_) continue;
                    const Index a = tri.v[next(i)], b = tri.v[prev(i)];
                    if (orient2d(pts_[a], pts_[b], p) <= 0.0 && bad_owner == kNone) bad_owner = t;
                    boundary.push_back({a, b, n, t});
                }
            }
            // Every vertex of a removed triangle must stay on the cavity
            // boundary, otherwise it would drop out of the triangulation.
            if (bad_owner == kNone) {
                for (Index t : cavity) {
                    for (Index w : tris_[t].v) {
                        const bool on_boundary = std::any_of(boundary.begin(), boundary.end(),
                                                             [&](const BoundaryEdge& e) { return e.u == w; });
                        if (!on_boundary) {
                            for (Index t2 : cavity) {
                                if (std::find(seeds.begin(), seeds.end(), t2) != seeds.end()) continue;
                                const auto& vv = tris_[t2].v;
                                if (std::find(vv.begin(), vv.end(), w) != vv.end()) {
                                    bad_owner = t2;
                                    break;
                                }
                            }
                            if (bad_owner == kNone) return kNone;
                            break;
                        }
                    }
                    if (bad_owner != kNone) break;
                }
            }
            if (bad_owner != kNone) {
                if (std::find(seeds.begin(), seeds.end(), bad_owner) != seeds.end()) return kNone;
                excluded.push_back(bad_owner);
                continue;
            }

            const Index pv = static_cast<Index>(pts_.size());
            pts_.push_back(p);
            vert_tri_.push_back(kNone);

            last_new_.clear();
            const std::size_t base = tris_.size();
            for (const BoundaryEdge& e : boundary) {
                Tri nt;
                nt.v = {e.u, e.v, pv};
                nt.nb[2] = e.outside;
                nt.exterior = tris_[e.owner].exterior;
                const Index id = static_cast<Index>(tris_.size());
                tris_.push_back(nt);
                last_new_.push_back(id);
                if (e.outside != kNone) {
                    Tri& o = tris_[e.outside];
                    for (int i = 0; i < 3; ++i) {
                        if (o.nb[i] == e.owner && o.v[next(i)] == e.v && o.v[prev(i)] == e.u) o.nb[i] = id;
                    }
                }
                vert_tri_[e.u] = id;
                vert_tri_[e.v] = id;
                vert_tri_[pv] = id;
            }
            // New triangle (u, v, p): across (v, p) is the one starting at v,
            // across (p, u) is the one ending at u.
            for (std::size_t k = base; k < tris_.size(); ++k) {
                Tri& nt = tris_[k];
                for (std::size_t m = base; m < tris_.size(); ++m) {
                    if (m == k) continue;
                    if (tris_[m].v[0] == nt.v[1]) nt.nb[0] = static_cast<Index>(m);
                    if (tris_[m].v[1] == nt.v[0]) nt.nb[1] = static_cast<Index>(m);
                }
            }
            for (Index t : cavity) tris_[t].alive = false;
            if (split) {
                const auto it = segs_.find(edge_key(split->first, split->second));
                const int tag = it->second;
                segs_.erase(it);
                segs_[edge_key(split->first, pv)] = tag;
                segs_[edge_key(pv, split->second)] = tag;
            }
            hint_ = static_cast<Index>(tris_.size() - 1);
            return pv;
        }
        return kNone;
    }

    [[nodiscard]] bool encroaches(Point2 c, Index a, Index b) const {
        const Point2 pa = pts_[a] - c, pb = pts_[b] - c;
        return dot(pa, pb) < -1e-12 * norm(pa) * norm(pb);
    }

    [[nodiscard]] bool segment_encroached(Index a, Index b) const {
        for (auto [u, w] : {std::pair{a, b}, std::pair{b, a}}) {
            const auto [t, i] = find_edge(u, w);
            if (t == kNone) continue;
            const Tri& tri = tris_[t];
            if (tri.exterior) continue;
            if (encroaches(pts_[tri.v[i]], a, b)) return true;
        }
        return false;
    }

    void split_segment(Index a, Index b) {
        std::vector<Index> seeds;
        for (auto [u, w] : {std::pair{a, b}, std::pair{b, a}}) {
            const auto [t, i] = find_edge(u, w);
            if (t != kNone) seeds.push_back(t);
        }
        if (seeds.empty()) throw MeshError("constrained segment missing from the triangulation");
        const Index nv = insert(midpoint(pts_[a], pts_[b]), seeds, std::make_pair(a, b));
        if (nv == kNone) throw MeshError("segment split failed");
        after_insert(nv);
        seg_queue_.push_back({a, nv, 0});
        seg_queue_.push_back({nv, b, 0});
    }

    void after_insert(Index nv) {
        const std::vector<Index> fresh = last_new_;
        for (Index t : fresh) {
            const Tri& tri = tris_[t];
            // Edge opposite the new vertex (index 2) may be an encroached segment.
            if (is_constrained(tri.v[0], tri.v[1]) && !tri.exterior &&
                encroaches(pts_[nv], tri.v[0], tri.v[1])) {
                seg_queue_.push_back({tri.v[0], tri.v[1], 0});
            }
            enqueue_if_bad(t);
        }
    }

    [[nodiscard]] bool is_bad(Index t) const {
        const Tri& tri = tris_[t];
        const Point2 a = pts_[tri.v[0]], b = pts_[tri.v[1]], c = pts_[tri.v[2]];
        const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
        const double twice_area = orient2d(a, b, c);
        if (twice_area <= 0.0) return false;
        const double r = la * lb * lc / (2.0 * twice_area);
        if (max_r_ > 0.0 && r > max_r_) return true;
        if (size_field_ && r > size_field_((a + b + c) * (1.0 / 3.0))) return true;
        // sin(min angle) = shortest / (2 R)
        const double shortest = std::min({la, lb, lc});
        return shortest / (2.0 * r) < sin_min_;
    }

    void enqueue_if_bad(Index t) {
        const Tri& tri = tris_[t];
        if (!tri.alive || tri.exterior) return;
        if (is_bad(t)) bad_queue_.push_back({t, tri.v});
    }
};

} // namespace

Triangulation refine(const Pslg& pslg, const RefineOptions& options) {
    if (pslg.points.size() < 3 || pslg.segments.size() < 3) throw MeshError("PSLG needs at least three segments");
    for (const Segment& s : pslg.segments) {
        const auto n = static_cast<Index>(pslg.points.size());
        if (s.a < 0 || s.b < 0 || s.a >= n || s.b >= n || s.a == s.b) throw MeshError("invalid PSLG segment");
    }
    Mesher mesher(pslg);
    mesher.insert_input(pslg);
    mesher.recover_segments(pslg);
    mesher.mark_exterior();
    mesher.refine(options);
    return mesher.extract();
}

} // namespace lagoon::cdt
