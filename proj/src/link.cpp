#include "cvxbuild/link.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cvxbuild {

namespace {

double gram_angle(const Mat& g, const Vec& u, const Vec& v)
{
    double uv = to_double(dot(u, g * v));
    double area = std::sqrt(to_double(g.determinant())) * std::abs(to_double(det(u, v)));
    return std::atan2(area, uv);
}

long floor_q(const Q& q)
{
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return f.get_si();
}

bool same_ray(const Vec& a, const Vec& b) { return det(a, b) == 0 && dot(a, b) > 0; }

Vec perp(const Vec& v) { return Vec(Q(-v[1]), v[0]); }

struct EndOption {
    int vertex;
    double cost;
    bool has_seg;
    SubArc seg;
};

double wrap(double x)
{
    const double two_pi = 2 * M_PI;
    x = std::fmod(x, two_pi);
    if (x < 0) x += two_pi;
    return x;
}

double circ_dist(double a, double b)
{
    double d = std::abs(wrap(a) - wrap(b));
    return std::min(d, 2 * M_PI - d);
}

} // namespace

std::string to_string(LinkTopology t)
{
    switch (t) {
    case LinkTopology::circle:
        return "circle";
    case LinkTopology::zero_sphere:
        return "zero_sphere";
    case LinkTopology::graph:
        return "graph";
    }
    return "?";
}

bool Direction::operator<(const Direction& o) const
{
    if (vertex != o.vertex) return vertex < o.vertex;
    if (arc != o.arc) return arc < o.arc;
    return t < o.t;
}

LinkSpace::LinkSpace(Mat gram, LinkTopology topology) : gram_(std::move(gram)), topology_(topology) {}

int LinkSpace::add_vertex(LinkVertex v)
{
    vertices_.push_back(std::move(v));
    refresh_distances();
    return static_cast<int>(vertices_.size()) - 1;
}

int LinkSpace::add_arc(int from, int to, int chart, std::vector<Vec> controls, std::string label)
{
    const int nv = static_cast<int>(vertices_.size());
    if (from < 0 || from >= nv || to < 0 || to >= nv) throw InputError("arc endpoint out of range");
    if (controls.size() < 2) throw InputError("arc needs at least two controls");
    LinkArc a;
    a.from = from;
    a.to = to;
    a.chart = chart;
    a.label = std::move(label);
    for (std::size_t k = 0; k + 1 < controls.size(); ++k) {
        if (det(controls[k], controls[k + 1]) <= 0) throw InputError("arc controls must turn counterclockwise by less than pi");
        double ang = gram_angle(gram_, controls[k], controls[k + 1]);
        a.piece_angles.push_back(ang);
        a.length += ang;
    }
    a.controls = std::move(controls);
    arcs_.push_back(std::move(a));
    refresh_distances();
    return static_cast<int>(arcs_.size()) - 1;
}

double LinkSpace::total_length() const
{
    double s = 0;
    for (const auto& a : arcs_) s += a.length;
    return s;
}

Direction LinkSpace::canonical(Direction d) const
{
    if (d.vertex >= 0) {
        if (d.vertex >= static_cast<int>(vertices_.size())) throw InputError("vertex out of range");
        return Direction{d.vertex, -1, 0};
    }
    if (d.arc < 0 || d.arc >= static_cast<int>(arcs_.size())) throw InputError("arc out of range");
    if (d.t < 0 || d.t > 1) throw InputError("arc parameter outside [0, 1]");
    const auto& a = arcs_[static_cast<std::size_t>(d.arc)];
    if (d.t == 0) return Direction{a.from, -1, 0};
    if (d.t == 1) return Direction{a.to, -1, 0};
    return d;
}

Vec LinkSpace::vector_of(const Direction& d) const
{
    if (d.vertex >= 0) return vertices_[static_cast<std::size_t>(d.vertex)].vec;
    const auto& a = arcs_[static_cast<std::size_t>(d.arc)];
    const long pieces = static_cast<long>(a.controls.size()) - 1;
    Q tp = d.t * Q(pieces);
    long k = std::min(floor_q(tp), pieces - 1);
    Q s = tp - k;
    const Vec& u = a.controls[static_cast<std::size_t>(k)];
    const Vec& w = a.controls[static_cast<std::size_t>(k + 1)];
    return u + (w - u) * s;
}

int LinkSpace::chart_of(const Direction& d) const
{
    if (d.vertex >= 0) return vertices_[static_cast<std::size_t>(d.vertex)].chart;
    return arcs_[static_cast<std::size_t>(d.arc)].chart;
}

std::optional<Direction> LinkSpace::locate(int chart, const Vec& v) const
{
    if (v.is_zero()) return std::nullopt;
    if (topology_ == LinkTopology::zero_sphere) {
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            if (vertices_[i].chart == chart && (vertices_[i].vec[0] > 0) == (v[0] > 0))
                return Direction{static_cast<int>(i), -1, 0};
        return std::nullopt;
    }
    for (std::size_t ai = 0; ai < arcs_.size(); ++ai) {
        const auto& a = arcs_[ai];
        if (a.chart != chart) continue;
        const long pieces = static_cast<long>(a.controls.size()) - 1;
        for (long k = 0; k < pieces; ++k) {
            const Vec& u = a.controls[static_cast<std::size_t>(k)];
            const Vec& w = a.controls[static_cast<std::size_t>(k + 1)];
            Q t;
            if (same_ray(u, v)) {
                t = frac(k, pieces);
            } else if (k == pieces - 1 && same_ray(w, v)) {
                t = 1;
            } else if (det(u, v) > 0 && det(v, w) > 0) {
                Q du = det(v, u), dw = det(v, w);
                Q s = du / (du - dw);
                t = (Q(k) + s) / Q(pieces);
            } else {
                continue;
            }
            return canonical(Direction{-1, static_cast<int>(ai), t});
        }
    }
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        if (vertices_[i].chart == chart && same_ray(vertices_[i].vec, v)) return Direction{static_cast<int>(i), -1, 0};
    return std::nullopt;
}

double LinkSpace::position(int arc, const Q& t) const
{
    const auto& a = arcs_[static_cast<std::size_t>(arc)];
    if (t == 1) return a.length;
    const long pieces = static_cast<long>(a.controls.size()) - 1;
    Q tp = t * Q(pieces);
    long k = floor_q(tp);
    Q s = tp - k;
    double pos = 0;
    for (long i = 0; i < k; ++i) pos += a.piece_angles[static_cast<std::size_t>(i)];
    if (s != 0) {
        const Vec& u = a.controls[static_cast<std::size_t>(k)];
        const Vec& w = a.controls[static_cast<std::size_t>(k + 1)];
        pos += gram_angle(gram_, u, u + (w - u) * s);
    }
    return pos;
}

void LinkSpace::refresh_distances()
{
    const std::size_t n = vertices_.size();
    dist_.assign(n, std::vector<double>(n, kInfinity));
    next_arc_.assign(n, std::vector<int>(n, -1));
    for (std::size_t i = 0; i < n; ++i) dist_[i][i] = 0;
    for (std::size_t ai = 0; ai < arcs_.size(); ++ai) {
        const auto& a = arcs_[ai];
        if (a.from == a.to) continue;
        auto f = static_cast<std::size_t>(a.from), t = static_cast<std::size_t>(a.to);
        if (a.length < dist_[f][t]) {
            dist_[f][t] = dist_[t][f] = a.length;
            next_arc_[f][t] = next_arc_[t][f] = static_cast<int>(ai);
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (dist_[i][k] + dist_[k][j] < dist_[i][j]) {
                    dist_[i][j] = dist_[i][k] + dist_[k][j];
                    next_arc_[i][j] = next_arc_[i][k];
                }
}

double LinkSpace::vertex_distance(int a, int b) const
{
    return dist_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

LinkPath LinkSpace::geodesic(const Direction& a0, const Direction& b0) const
{
    Direction a = canonical(a0), b = canonical(b0);
    LinkPath best;
    best.length = kInfinity;
    if (topology_ == LinkTopology::zero_sphere) {
        best.length = a == b ? 0.0 : M_PI;
        if (a == b) best.vertices = {a.vertex};
        return best;
    }
    auto options = [&](const Direction& d) {
        std::vector<EndOption> out;
        if (d.is_vertex()) {
            out.push_back({d.vertex, 0.0, false, {}});
            return out;
        }
        const auto& arc = arcs_[static_cast<std::size_t>(d.arc)];
        double pos = position(d.arc, d.t);
        out.push_back({arc.from, pos, true, {d.arc, d.t, Q(0)}});
        out.push_back({arc.to, arc.length - pos, true, {d.arc, d.t, Q(1)}});
        return out;
    };
    if (a == b) {
        best.length = 0;
        if (a.is_vertex()) best.vertices = {a.vertex};
        else best.segments = {{a.arc, a.t, a.t}};
        return best;
    }
    if (!a.is_vertex() && !b.is_vertex() && a.arc == b.arc) {
        best.length = std::abs(position(a.arc, a.t) - position(b.arc, b.t));
        best.segments = {{a.arc, a.t, b.t}};
    }
    for (const auto& oa : options(a))
        for (const auto& ob : options(b)) {
            double len = oa.cost + vertex_distance(oa.vertex, ob.vertex) + ob.cost;
            if (!(len < best.length - 1e-12)) continue;
            LinkPath p;
            p.length = len;
            if (oa.has_seg) p.segments.push_back(oa.seg);
            int cur = oa.vertex;
            p.vertices.push_back(cur);
            while (cur != ob.vertex) {
                int ai = next_arc_[static_cast<std::size_t>(cur)][static_cast<std::size_t>(ob.vertex)];
                const auto& arc = arcs_[static_cast<std::size_t>(ai)];
                if (arc.from == cur) {
                    p.segments.push_back({ai, Q(0), Q(1)});
                    cur = arc.to;
                } else {
                    p.segments.push_back({ai, Q(1), Q(0)});
                    cur = arc.from;
                }
                p.vertices.push_back(cur);
            }
            if (ob.has_seg) p.segments.push_back({ob.seg.arc, ob.seg.t1, ob.seg.t0});
            best = std::move(p);
        }
    return best;
}

double LinkSpace::distance(const Direction& a, const Direction& b) const { return geodesic(a, b).length; }

bool LinkSpace::girth_ok(double tol, double* girth) const
{
    double g = kInfinity;
    const std::size_t n = vertices_.size();
    for (std::size_t skip = 0; skip < arcs_.size(); ++skip) {
        const auto& e = arcs_[skip];
        double cyc;
        if (e.from == e.to) {
            cyc = e.length;
        } else {
            // Dijkstra from e.from to e.to avoiding arc `skip`.
            std::vector<double> d(n, kInfinity);
            std::vector<bool> done(n, false);
            d[static_cast<std::size_t>(e.from)] = 0;
            for (std::size_t it = 0; it < n; ++it) {
                std::size_t u = n;
                for (std::size_t i = 0; i < n; ++i)
                    if (!done[i] && (u == n || d[i] < d[u])) u = i;
                if (u == n || d[u] == kInfinity) break;
                done[u] = true;
                for (std::size_t ai = 0; ai < arcs_.size(); ++ai) {
                    if (ai == skip) continue;
                    const auto& a = arcs_[ai];
                    if (a.from == a.to) continue;
                    std::size_t v;
                    if (static_cast<std::size_t>(a.from) == u) v = static_cast<std::size_t>(a.to);
                    else if (static_cast<std::size_t>(a.to) == u) v = static_cast<std::size_t>(a.from);
                    else continue;
                    d[v] = std::min(d[v], d[u] + a.length);
                }
            }
            cyc = d[static_cast<std::size_t>(e.to)] + e.length;
        }
        g = std::min(g, cyc);
    }
    if (girth) *girth = g;
    return g >= 2 * M_PI - tol;
}

std::string LinkSpace::label_of(const Direction& d) const
{
    if (d.is_vertex()) return vertices_[static_cast<std::size_t>(d.vertex)].label;
    return arcs_[static_cast<std::size_t>(d.arc)].label + "@" + to_string(d.t);
}

Json LinkSpace::direction_json(const Direction& d) const
{
    Json j;
    if (d.is_vertex()) {
        j["vertex"] = vertices_[static_cast<std::size_t>(d.vertex)].label;
    } else {
        j["arc"] = arcs_[static_cast<std::size_t>(d.arc)].label;
        j["t"] = to_string(d.t);
    }
    Vec v = vector_of(d);
    Json vec = Json::array();
    for (int i = 0; i < v.size(); ++i) vec.push_back(to_string(v[i]));
    j["chart"] = chart_of(d);
    j["vector"] = vec;
    return j;
}

Json LinkSpace::subset_json(const LinkSubset& s) const
{
    Json j;
    Json arcs = Json::array();
    for (const auto& sa : s.subarcs)
        arcs.push_back(Json{{"arc", arcs_[static_cast<std::size_t>(sa.arc)].label},
                            {"t", Json::array({to_string(sa.t0), to_string(sa.t1)})}});
    Json verts = Json::array();
    for (int v : s.vertices) verts.push_back(vertices_[static_cast<std::size_t>(v)].label);
    j["subarcs"] = arcs;
    j["vertices"] = verts;
    return j;
}

LinkSubset canonical_subset(const LinkSpace& link, LinkSubset s)
{
    const auto& arcs = link.arcs();
    for (const auto& sa : s.subarcs) {
        if (sa.arc < 0 || sa.arc >= static_cast<int>(arcs.size())) throw InputError("subarc on unknown arc");
        if (sa.t0 < 0 || sa.t1 > 1 || sa.t0 > sa.t1) throw InputError("subarc interval outside [0, 1]");
    }
    std::sort(s.subarcs.begin(), s.subarcs.end(), [](const SubArc& a, const SubArc& b) {
        if (a.arc != b.arc) return a.arc < b.arc;
        if (a.t0 != b.t0) return a.t0 < b.t0;
        return a.t1 < b.t1;
    });
    LinkSubset out;
    out.vertices = s.vertices;
    for (const auto& sa : s.subarcs) {
        if (!out.subarcs.empty() && out.subarcs.back().arc == sa.arc && sa.t0 <= out.subarcs.back().t1) {
            out.subarcs.back().t1 = std::max(out.subarcs.back().t1, sa.t1);
            continue;
        }
        out.subarcs.push_back(sa);
    }
    std::vector<SubArc> kept;
    for (const auto& sa : out.subarcs) {
        const auto& a = arcs[static_cast<std::size_t>(sa.arc)];
        if (sa.t0 == 0) out.vertices.push_back(a.from);
        if (sa.t1 == 1) out.vertices.push_back(a.to);
        if (sa.t0 == sa.t1 && (sa.t0 == 0 || sa.t0 == 1)) continue;
        kept.push_back(sa);
    }
    out.subarcs = std::move(kept);
    std::sort(out.vertices.begin(), out.vertices.end());
    out.vertices.erase(std::unique(out.vertices.begin(), out.vertices.end()), out.vertices.end());
    return out;
}

bool subset_contains(const LinkSpace& link, const LinkSubset& s, const Direction& d0)
{
    Direction d = link.canonical(d0);
    if (d.is_vertex()) return std::binary_search(s.vertices.begin(), s.vertices.end(), d.vertex);
    for (const auto& sa : s.subarcs)
        if (sa.arc == d.arc && sa.t0 <= d.t && d.t <= sa.t1) return true;
    return false;
}

LinkSubset subset_union(const LinkSpace& link, const LinkSubset& a, const LinkSubset& b)
{
    LinkSubset u = a;
    u.subarcs.insert(u.subarcs.end(), b.subarcs.begin(), b.subarcs.end());
    u.vertices.insert(u.vertices.end(), b.vertices.begin(), b.vertices.end());
    return canonical_subset(link, u);
}

LinkSubset subset_intersection(const LinkSpace& link, const LinkSubset& a, const LinkSubset& b)
{
    LinkSubset r;
    for (const auto& x : a.subarcs)
        for (const auto& y : b.subarcs) {
            if (x.arc != y.arc) continue;
            Q lo = std::max(x.t0, y.t0), hi = std::min(x.t1, y.t1);
            if (lo <= hi) r.subarcs.push_back({x.arc, lo, hi});
        }
    for (int v : a.vertices)
        if (std::binary_search(b.vertices.begin(), b.vertices.end(), v)) r.vertices.push_back(v);
    return canonical_subset(link, r);
}

LinkSubset whole_link(const LinkSpace& link)
{
    LinkSubset s;
    for (std::size_t i = 0; i < link.arcs().size(); ++i) s.subarcs.push_back({static_cast<int>(i), Q(0), Q(1)});
    for (std::size_t i = 0; i < link.vertices().size(); ++i) s.vertices.push_back(static_cast<int>(i));
    return canonical_subset(link, s);
}

bool subset_is_whole(const LinkSpace& link, const LinkSubset& s)
{
    if (s.vertices.size() != link.vertices().size()) return false;
    std::vector<bool> full(link.arcs().size(), false);
    for (const auto& sa : s.subarcs)
        if (sa.t0 == 0 && sa.t1 == 1) full[static_cast<std::size_t>(sa.arc)] = true;
    return std::all_of(full.begin(), full.end(), [](bool b) { return b; });
}

LinkSubset cone_subset(const LinkSpace& link, int chart, const std::vector<Vec>& covectors)
{
    LinkSubset s;
    if (link.topology() == LinkTopology::zero_sphere) {
        for (std::size_t i = 0; i < link.vertices().size(); ++i) {
            const auto& v = link.vertices()[i];
            if (v.chart != chart) continue;
            bool in = true;
            for (const auto& k : covectors)
                if (dot(k, v.vec) > 0) in = false;
            if (in) s.vertices.push_back(static_cast<int>(i));
        }
        return canonical_subset(link, s);
    }
    for (std::size_t ai = 0; ai < link.arcs().size(); ++ai) {
        const auto& a = link.arcs()[ai];
        if (a.chart != chart) continue;
        const long pieces = static_cast<long>(a.controls.size()) - 1;
        for (long k = 0; k < pieces; ++k) {
            const Vec& u = a.controls[static_cast<std::size_t>(k)];
            const Vec& w = a.controls[static_cast<std::size_t>(k + 1)];
            Q lo = 0, hi = 1;
            bool empty = false;
            for (const auto& kap : covectors) {
                // kap.u + s (kap.w - kap.u) <= 0
                Q c0 = dot(kap, u), c1 = dot(kap, w) - c0;
                if (c1 == 0) {
                    if (c0 > 0) empty = true;
                } else if (c1 > 0) {
                    hi = std::min(hi, Q(-c0 / c1));
                } else {
                    lo = std::max(lo, Q(-c0 / c1));
                }
            }
            if (empty || lo > hi) continue;
            s.subarcs.push_back({static_cast<int>(ai), (Q(k) + lo) / Q(pieces), (Q(k) + hi) / Q(pieces)});
        }
    }
    return canonical_subset(link, s);
}

std::vector<Direction> subset_boundary(const LinkSpace& link, const LinkSubset& s)
{
    std::vector<Direction> out;
    for (const auto& sa : s.subarcs) {
        if (sa.t0 > 0) out.push_back(Direction{-1, sa.arc, sa.t0});
        if (sa.t1 < 1 && sa.t1 != sa.t0) out.push_back(Direction{-1, sa.arc, sa.t1});
    }
    for (int v : s.vertices) {
        bool missing = false;
        for (std::size_t ai = 0; ai < link.arcs().size(); ++ai) {
            const auto& a = link.arcs()[ai];
            auto has = [&](bool at_start) {
                for (const auto& sa : s.subarcs)
                    if (sa.arc == static_cast<int>(ai) && (at_start ? sa.t0 == 0 && sa.t1 > 0 : sa.t1 == 1 && sa.t0 < 1))
                        return true;
                return false;
            };
            if (a.from == v && !has(true)) missing = true;
            if (a.to == v && !has(false)) missing = true;
        }
        if (missing) out.push_back(Direction{v, -1, 0});
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// First point of the segment (in travel order) missing from S, if any.
std::optional<Direction> first_escape(const LinkSpace& link, const LinkSubset& s, const SubArc& seg)
{
    Q lo = std::min(seg.t0, seg.t1), hi = std::max(seg.t0, seg.t1);
    if (lo == hi) {
        Direction d = link.canonical(Direction{-1, seg.arc, lo});
        if (subset_contains(link, s, d)) return std::nullopt;
        return d;
    }
    std::vector<std::pair<Q, Q>> gaps;
    Q cur = lo;
    for (const auto& sa : s.subarcs) {
        if (sa.arc != seg.arc || sa.t1 < cur || sa.t0 > hi) continue;
        if (sa.t0 > cur) gaps.push_back({cur, sa.t0});
        cur = std::max(cur, sa.t1);
        if (cur >= hi) break;
    }
    if (cur < hi) gaps.push_back({cur, hi});
    if (gaps.empty()) return std::nullopt;
    const auto& g = seg.t0 <= seg.t1 ? gaps.front() : gaps.back();
    return link.canonical(Direction{-1, seg.arc, (g.first + g.second) / 2});
}

} // namespace

ConvexityReport is_pi_convex(const LinkSubset& s, const LinkSpace& link, double tol)
{
    ConvexityReport r;
    r.check = "pi_convex";
    r.tolerance = tol;
    if (link.topology() == LinkTopology::zero_sphere) return r;
    auto boundary = subset_boundary(link, s);
    int pairs = 0;
    for (std::size_t i = 0; i < boundary.size(); ++i)
        for (std::size_t j = i + 1; j < boundary.size(); ++j) {
            LinkPath path = link.geodesic(boundary[i], boundary[j]);
            if (!(path.length < M_PI - tol)) continue;
            ++pairs;
            for (const auto& seg : path.segments) {
                auto esc = first_escape(link, s, seg);
                if (!esc) continue;
                r.fail("escaping_geodesic", Json{{"from", link.direction_json(link.canonical(boundary[i]))},
                                                 {"to", link.direction_json(link.canonical(boundary[j]))},
                                                 {"distance", path.length},
                                                 {"escape", link.direction_json(*esc)}});
                return r;
            }
        }
    r.note("checked_pairs", Json{{"boundary_points", boundary.size()}, {"pairs_below_pi", pairs}});
    return r;
}

double subset_distance(const LinkSpace& link, const LinkSubset& s, const Direction& a0, const Direction& b0)
{
    Direction a = link.canonical(a0), b = link.canonical(b0);
    if (!subset_contains(link, s, a) || !subset_contains(link, s, b)) throw GeometryError("endpoint outside the subset");
    if (a == b) return 0;
    if (link.topology() == LinkTopology::zero_sphere) return kInfinity;
    std::map<Direction, int> ids;
    auto id = [&](const Direction& d) {
        auto it = ids.find(d);
        if (it != ids.end()) return it->second;
        int k = static_cast<int>(ids.size());
        ids.emplace(d, k);
        return k;
    };
    struct Edge {
        int u, v;
        double w;
    };
    std::vector<Edge> edges;
    for (int v : s.vertices) id(Direction{v, -1, 0});
    for (const auto& sa : s.subarcs) {
        std::vector<Q> ts{sa.t0, sa.t1};
        for (const auto& d : {a, b})
            if (!d.is_vertex() && d.arc == sa.arc && sa.t0 <= d.t && d.t <= sa.t1) ts.push_back(d.t);
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            int u = id(link.canonical(Direction{-1, sa.arc, ts[k]}));
            int v = id(link.canonical(Direction{-1, sa.arc, ts[k + 1]}));
            edges.push_back({u, v, link.position(sa.arc, ts[k + 1]) - link.position(sa.arc, ts[k])});
        }
        if (ts.size() == 1) id(link.canonical(Direction{-1, sa.arc, ts[0]}));
    }
    const int src = id(a), dst = id(b);
    const std::size_t n = ids.size();
    std::vector<double> d(n, kInfinity);
    std::vector<bool> done(n, false);
    d[static_cast<std::size_t>(src)] = 0;
    for (std::size_t it = 0; it < n; ++it) {
        std::size_t u = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i] && (u == n || d[i] < d[u])) u = i;
        if (u == n || d[u] == kInfinity) break;
        done[u] = true;
        for (const auto& e : edges) {
            if (static_cast<std::size_t>(e.u) == u) d[static_cast<std::size_t>(e.v)] = std::min(d[static_cast<std::size_t>(e.v)], d[u] + e.w);
            if (static_cast<std::size_t>(e.v) == u) d[static_cast<std::size_t>(e.u)] = std::min(d[static_cast<std::size_t>(e.u)], d[u] + e.w);
        }
    }
    return d[static_cast<std::size_t>(dst)];
}

ConvexityReport is_locally_convex_in_link(const LinkSubset& s, const LinkSpace& link, const Direction& d0)
{
    ConvexityReport r;
    r.check = "local_convexity";
    Direction d = link.canonical(d0);
    if (!subset_contains(link, s, d)) {
        r.fail("point_outside_set", link.direction_json(d));
        return r;
    }
    int germs = 0;
    if (d.is_vertex()) {
        for (std::size_t ai = 0; ai < link.arcs().size(); ++ai) {
            const auto& a = link.arcs()[ai];
            for (const auto& sa : s.subarcs) {
                if (sa.arc != static_cast<int>(ai)) continue;
                if (a.from == d.vertex && sa.t0 == 0) ++germs;
                if (a.to == d.vertex && sa.t1 == 1) ++germs;
            }
        }
    } else {
        for (const auto& sa : s.subarcs)
            if (sa.arc == d.arc && sa.t0 <= d.t && d.t <= sa.t1) germs += (sa.t0 < d.t) + (d.t < sa.t1);
    }
    r.note("germs", Json{{"at", link.direction_json(d)}, {"count", germs}});
    return r;
}

ConvexityReport link_normal_condition(const LinkSubset& s, const LinkSubset& proj, const LinkSpace& link, double tol)
{
    ConvexityReport r;
    r.check = "link_normal_condition";
    r.tolerance = tol;
    if (link.topology() != LinkTopology::circle) throw InputError("link normal condition needs a circle link");
    // Angular coordinate along the circle, walking arcs head to tail.
    const auto& arcs = link.arcs();
    std::vector<double> offset(arcs.size(), 0);
    std::vector<bool> seen(arcs.size(), false);
    double acc = 0;
    std::size_t cur = 0;
    for (std::size_t n = 0; n < arcs.size(); ++n) {
        seen[cur] = true;
        offset[cur] = acc;
        acc += arcs[cur].length;
        for (std::size_t k = 0; k < arcs.size(); ++k)
            if (!seen[k] && arcs[k].from == arcs[cur].to) {
                cur = k;
                break;
            }
    }
    auto vertex_angle = [&](int v) {
        for (std::size_t k = 0; k < arcs.size(); ++k)
            if (arcs[k].from == v) return offset[k];
        return 0.0;
    };
    auto intervals = [&](const LinkSubset& x) {
        std::vector<std::pair<double, double>> iv;
        for (const auto& sa : x.subarcs) {
            double o = offset[static_cast<std::size_t>(sa.arc)];
            iv.push_back({o + link.position(sa.arc, sa.t0), o + link.position(sa.arc, sa.t1)});
        }
        for (int v : x.vertices) {
            double a = vertex_angle(v);
            iv.push_back({a, a});
        }
        return iv;
    };
    auto in_intervals = [&](const std::vector<std::pair<double, double>>& iv, double x) {
        for (const auto& [lo, hi] : iv) {
            double rel = wrap(x - lo);
            if (rel <= hi - lo + tol || rel >= 2 * M_PI - tol) return true;
        }
        return false;
    };
    auto sv = intervals(s);
    auto both = intervals(subset_intersection(link, s, proj));
    if (both.empty()) {
        r.fail("empty_candidate_set", Json{{"set", link.subset_json(s)}});
        return r;
    }
    auto spread = [&](double n) {
        double anti = n + M_PI;
        if (in_intervals(sv, anti)) return M_PI;
        double m = 0;
        for (const auto& [lo, hi] : sv) m = std::max({m, circ_dist(n, lo), circ_dist(n, hi)});
        return m;
    };
    std::vector<double> cand;
    for (const auto& [lo, hi] : both) {
        cand.push_back(lo);
        cand.push_back(hi);
    }
    for (const auto& [lo, hi] : sv)
        for (double e : {lo, hi})
            for (double sh : {-M_PI / 2, M_PI / 2}) cand.push_back(e + sh);
    double best = kInfinity, best_n = 0;
    for (double c : cand) {
        if (!in_intervals(both, c)) continue;
        double f = spread(c);
        if (f < best - 1e-15) {
            best = f;
            best_n = wrap(c);
        }
    }
    Json data{{"n_angle", best_n}, {"max_distance", best}};
    if (best <= M_PI / 2 + tol) r.note("n", data);
    else r.fail("no_normal_direction", data);
    return r;
}

LinkSpace link_datum_at(const Complex& cx, const Vec& a, int chart)
{
    cx.require_in_region(a);
    const auto& d = cx.datum();
    if (d.rank == 1) {
        LinkSpace l(d.gram, LinkTopology::zero_sphere);
        l.add_vertex({"+", chart, Vec(Q(1))});
        l.add_vertex({"-", chart, Vec(Q(-1))});
        return l;
    }
    if (d.rank != 2) throw InputError("unsupported rank");
    LinkSpace l(d.gram, LinkTopology::circle);
    auto through = cx.walls_through(a);
    if (through.empty()) {
        Vec e(Q(1), Q(0));
        Vec m = perp(d.gram * e);
        l.add_vertex({"base", chart, e});
        l.add_arc(0, 0, chart, {e, m, -e, -m, e}, "open");
        return l;
    }
    if (through.size() == 1) {
        const Wall& w = cx.walls()[static_cast<std::size_t>(through[0])];
        Vec e = perp(w.normal);
        Vec m = d.covector_to_vector(w.normal);
        if (det(e, m) < 0) m = -m;
        std::string name = "w" + std::to_string(through[0]);
        l.add_vertex({name + "+", chart, e});
        l.add_vertex({name + "-", chart, -e});
        l.add_arc(0, 1, chart, {e, m, -e}, "half+");
        l.add_arc(1, 0, chart, {-e, -m, e}, "half-");
        return l;
    }
    struct Dir {
        double ang;
        Vec v;
        std::string label;
    };
    std::vector<Dir> dirs;
    for (int wi : through) {
        Vec e = perp(cx.walls()[static_cast<std::size_t>(wi)].normal);
        std::string name = "w" + std::to_string(wi);
        dirs.push_back({std::atan2(to_double(e[1]), to_double(e[0])), e, name + "+"});
        dirs.push_back({std::atan2(to_double(-e[1]), to_double(-e[0])), -e, name + "-"});
    }
    std::sort(dirs.begin(), dirs.end(), [](const Dir& x, const Dir& y) { return x.ang < y.ang; });
    for (const auto& x : dirs) l.add_vertex({x.label, chart, x.v});
    const int n = static_cast<int>(dirs.size());
    for (int k = 0; k < n; ++k)
        l.add_arc(k, (k + 1) % n, chart, {dirs[static_cast<std::size_t>(k)].v, dirs[static_cast<std::size_t>((k + 1) % n)].v},
                  "c" + std::to_string(k));
    return l;
}

LinkSpace unit_circle()
{
    LinkSpace l(Mat::identity(2), LinkTopology::circle);
    Vec e(Q(1), Q(0)), m(Q(0), Q(1));
    l.add_vertex({"base", 0, e});
    l.add_arc(0, 0, 0, {e, m, -e, -m, e}, "circle");
    return l;
}

Direction direction_of_segment(const Vec& a, const Vec& b, const LinkSpace& link, int chart)
{
    if (a == b) throw GeometryError("degenerate segment");
    auto d = link.locate(chart, b - a);
    if (!d) throw GeometryError("segment direction not found in link");
    return *d;
}

double angle_between_segments(const CoxeterDatum& d, const Vec& a, const Vec& b, const Vec& c)
{
    if (a == b || a == c) throw GeometryError("degenerate segment");
    return d.angle(b - a, c - a);
}

LinkSubset proj_link_chamber(const Complex& cx, const Vec& a, const Cell& C, const LinkSpace& link, int chart)
{
    Cell sigma = cx.carrier(a);
    Cell P = cx.project_chamber_to_cell(C, sigma);
    std::vector<Vec> cov;
    for (int w : cx.walls_through(a)) {
        const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
        Q s = P.signs[static_cast<std::size_t>(w)];
        cov.push_back(h.normal * Q(-s));
    }
    return cone_subset(link, chart, cov);
}

} // namespace cvxbuild
