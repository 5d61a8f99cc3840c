#include "cvxbuild/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <random>
#include <set>

namespace cvxbuild {

namespace {

Json point_json(const BuildingPoint& p) { return Json{{"chart", p.chart}, {"x", to_string(p.x)}}; }

Q coordinate_box(const Complex& cx)
{
    Mat ginv = cx.datum().gram.inverse();
    double m = 0;
    for (int i = 0; i < cx.rank(); ++i) m = std::max(m, to_double(cx.region_radius2() * ginv(i, i)));
    return Q(static_cast<long>(std::ceil(std::sqrt(m))) + 1);
}

Vec perp(const Vec& c) { return Vec(c[1], Q(-c[0])); }

// Covector norm squared c^T G^{-1} c.
Q conorm2(const CoxeterDatum& d, const Vec& c) { return dot(c, d.covector_to_vector(c)); }

bool pieces_cover(const PolyhedralSet& s, const Vec& p, const Vec& q)
{
    std::vector<std::pair<Q, Q>> iv;
    for (const auto& piece : s.pieces)
        if (auto r = segment_interval(p, q, piece.halfspaces)) iv.push_back(*r);
    std::sort(iv.begin(), iv.end());
    Q reach = 0;
    bool started = false;
    for (const auto& [lo, hi] : iv) {
        if (lo > reach || (!started && lo > 0)) return false;
        started = true;
        reach = std::max(reach, hi);
    }
    return started && reach == 1;
}

std::vector<Vec> active_covectors(const Polytope& P, const Vec& a)
{
    std::vector<Vec> out;
    for (int i : P.active(a)) out.push_back(P.halfspaces[static_cast<std::size_t>(i)].normal);
    return out;
}

// Gram-orthonormal frame: columns e1, e2 with det > 0 (doubles).
struct Frame {
    double e[2][2];  // e[i][col]
    double inv[2][2];

    explicit Frame(const Mat& g)
    {
        double g00 = to_double(g(0, 0)), g01 = to_double(g(0, 1)), g11 = to_double(g(1, 1));
        double a = 1 / std::sqrt(g00);
        // e2 = (0,1) - <(0,1), e1> e1, normalized
        double p = g01 * a;  // <(0,1), e1>
        double v0 = -p * a, v1 = 1;
        double n2 = g00 * v0 * v0 + 2 * g01 * v0 * v1 + g11 * v1 * v1;
        double b = 1 / std::sqrt(n2);
        e[0][0] = a;
        e[1][0] = 0;
        e[0][1] = v0 * b;
        e[1][1] = v1 * b;
        double det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
        inv[0][0] = e[1][1] / det;
        inv[0][1] = -e[0][1] / det;
        inv[1][0] = -e[1][0] / det;
        inv[1][1] = e[0][0] / det;
    }
    // coordinates -> orthonormal
    std::array<double, 2> to_y(const Vec& x) const
    {
        double x0 = to_double(x[0]), x1 = to_double(x[1]);
        return {inv[0][0] * x0 + inv[0][1] * x1, inv[1][0] * x0 + inv[1][1] * x1};
    }
    // covector c on coordinates -> covector on orthonormal coordinates (E^T c)
    std::array<double, 2> covector_y(const Vec& c) const
    {
        double c0 = to_double(c[0]), c1 = to_double(c[1]);
        return {e[0][0] * c0 + e[1][0] * c1, e[0][1] * c0 + e[1][1] * c1};
    }
    Vec to_x(double y0, double y1) const
    {
        return Vec(from_double(e[0][0] * y0 + e[0][1] * y1), from_double(e[1][0] * y0 + e[1][1] * y1));
    }
};

double angle_of(const Frame& f, const Vec& v)
{
    auto y = f.to_y(v);
    return std::atan2(y[1], y[0]);
}

// u rotated counterclockwise by `by` radians, rounded to a rational direction.
Vec rotate_direction(const Frame& f, const Vec& u, double by)
{
    auto y = f.to_y(u);
    double a = std::atan2(y[1], y[0]) + by;
    return f.to_x(std::round(std::cos(a) * 4096) / 4096, std::round(std::sin(a) * 4096) / 4096);
}

} // namespace

// Polytopes ---------------------------------------------------------------------

Polytope Polytope::hull(int rank, std::vector<Vec> points)
{
    if (points.empty()) throw InputError("hull of no points");
    for (const auto& p : points)
        if (p.size() != rank) throw InputError("point dimension does not match the rank");
    Polytope P;
    if (rank == 1) {
        auto [lo, hi] = std::minmax_element(points.begin(), points.end());
        P.halfspaces.push_back({Vec(Q(1)), (*hi)[0], 0});
        P.halfspaces.push_back({Vec(Q(-1)), Q(-(*lo)[0]), 1});
        return P;
    }
    auto h = convex_hull(points);
    if (h.size() >= 3) {
        for (std::size_t i = 0; i < h.size(); ++i) {
            const Vec& p = h[i];
            const Vec& q = h[(i + 1) % h.size()];
            Vec e = q - p;
            Vec c(e[1], Q(-e[0]));
            P.halfspaces.push_back({c, dot(c, p), static_cast<int>(i)});
        }
        return P;
    }
    if (h.size() == 2) {
        Vec e = h[1] - h[0];
        Vec c(e[1], Q(-e[0]));
        P.halfspaces.push_back({c, dot(c, h[0]), 0});
        P.halfspaces.push_back({-c, Q(-dot(c, h[0])), 1});
        P.halfspaces.push_back({e, dot(e, h[1]), 2});
        P.halfspaces.push_back({-e, Q(-dot(e, h[0])), 3});
        return P;
    }
    const Vec& p = h.front();
    P.halfspaces.push_back({Vec(Q(1), Q(0)), p[0], 0});
    P.halfspaces.push_back({Vec(Q(-1), Q(0)), Q(-p[0]), 1});
    P.halfspaces.push_back({Vec(Q(0), Q(1)), p[1], 2});
    P.halfspaces.push_back({Vec(Q(0), Q(-1)), Q(-p[1]), 3});
    return P;
}

bool Polytope::contains(const Vec& x) const
{
    for (const auto& h : halfspaces)
        if (dot(h.normal, x) > h.offset) return false;
    return true;
}

std::vector<int> Polytope::active(const Vec& x) const
{
    std::vector<int> out;
    for (std::size_t i = 0; i < halfspaces.size(); ++i)
        if (dot(halfspaces[i].normal, x) == halfspaces[i].offset) out.push_back(static_cast<int>(i));
    return out;
}

Polytope Polytope::transformed(const AffineMap& f) const { return pulled_back(f.inverse()); }

Polytope Polytope::pulled_back(const AffineMap& f) const
{
    // c . (L x + s) <= o  <=>  (L^T c) . x <= o - c . s
    Polytope out;
    Mat lt = f.linear.transpose();
    for (const auto& h : halfspaces) out.halfspaces.push_back({lt * h.normal, Q(h.offset - dot(h.normal, f.shift)), h.tag});
    return out;
}

bool PolyhedralSet::contains(const Vec& x) const
{
    for (const auto& p : pieces)
        if (p.contains(x)) return true;
    return false;
}

std::vector<Vec> polytope_vertices(const Complex& cx, const Polytope& P)
{
    auto cyc = square_cycle(cx.rank(), coordinate_box(cx));
    for (const auto& h : P.halfspaces) {
        if (h.normal.size() != cx.rank()) throw InputError("halfspace dimension does not match the rank");
        cyc = clip_convex(cyc, h);
        if (cyc.empty()) return cyc;
    }
    if (cx.rank() == 2) return simplify_cycle(cyc);
    return cyc;
}

int polytope_dimension(const Complex& cx, const Polytope& P)
{
    auto v = polytope_vertices(cx, P);
    if (v.empty()) return -1;
    return affine_dimension(v);
}

bool on_box(const Complex& cx, const Vec& v)
{
    Q b = coordinate_box(cx);
    for (int i = 0; i < v.size(); ++i)
        if (v[i] == b || v[i] == -b) return true;
    return false;
}

Vec nearest_point(const Complex& cx, const Polytope& P, const Vec& x)
{
    if (P.contains(x)) return x;
    auto V = polytope_vertices(cx, P);
    if (V.empty()) throw GeometryError("empty polytope");
    const auto& d = cx.datum();
    Vec best = V.front();
    Q best2 = d.norm2(x - best);
    auto consider = [&](const Vec& p) {
        Q n = d.norm2(x - p);
        if (n < best2) {
            best2 = n;
            best = p;
        }
    };
    const std::size_t n = V.size();
    for (std::size_t i = 0; i < n; ++i) {
        consider(V[i]);
        if (n < 2) break;
        const Vec& p = V[i];
        const Vec& q = V[(i + 1) % n];
        Vec e = q - p;
        Q ee = d.norm2(e);
        if (ee == 0) continue;
        Q t = d.inner(x - p, e) / ee;
        if (t > 0 && t < 1) consider(p + e * t);
    }
    return best;
}

Q distance2_to(const Complex& cx, const Polytope& P, const Vec& x)
{
    return cx.datum().norm2(x - nearest_point(cx, P, x));
}

// Building subsets -----------------------------------------------------------------

bool subset_contains(const AtlasBuilding& B, const BuildingSubset& S, const BuildingPoint& p)
{
    if (S.charts.size() != B.charts().size()) throw InputError("subset chart count does not match the atlas");
    if (S.charts[static_cast<std::size_t>(p.chart)].contains(p.x)) return true;
    for (const auto& m : B.point_class(p))
        if (S.charts[static_cast<std::size_t>(m.chart)].contains(m.x)) return true;
    return false;
}

BuildingSubset base_subset(const AtlasBuilding& B, const PolyhedralSet& A)
{
    BuildingSubset S;
    S.charts.resize(B.charts().size());
    S.charts[static_cast<std::size_t>(B.base_chart())] = A;
    return S;
}

namespace {

// Chambers whose closure meets the open chart ball, each with an interior
// point inside the chart.
std::vector<Cell> chambers_meeting_chart(const AtlasBuilding& B, int k)
{
    const Complex& cx = B.complex();
    const Chart& ch = B.charts()[static_cast<std::size_t>(k)];
    auto inner_point = [&](const Cell& c) -> std::optional<Vec> {
        if (B.in_chart(k, c.point) && cx.in_region(c.point)) return c.point;
        Polytope P{cx.closure_halfspaces(c)};
        Vec n = nearest_point(cx, P, ch.center);
        if (cx.datum().norm2(n - ch.center) >= ch.radius2) return std::nullopt;
        Q s = frac(1, 2);
        for (int i = 0; i < 40; ++i, s /= 2) {
            Vec p = n + (c.point - n) * s;
            if (B.in_chart(k, p) && cx.carrier(p) == c) return p;
        }
        return std::nullopt;
    };
    Cell start = cx.project_chamber_to_cell(cx.fundamental_chamber(), cx.carrier(ch.center));
    std::vector<Cell> out;
    std::set<std::vector<signed char>> seen{start.signs};
    std::deque<Cell> queue{start};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        auto p = inner_point(c);
        if (!p) continue;
        Cell e = c;
        e.point = *p;
        out.push_back(e);
        for (int w : cx.facet_walls(c)) {
            Vec q = B.datum().reflect(cx.walls()[static_cast<std::size_t>(w)], c.point);
            if (!cx.in_region(q)) continue;
            Cell d = cx.canonical_cell(q);
            if (seen.insert(d.signs).second) queue.push_back(d);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

BuildingSubset preimage(const AtlasBuilding& B, const Polytope& A)
{
    const Complex& cx = B.complex();
    BuildingSubset S;
    S.charts.resize(B.charts().size());
    for (int k = 0; k < static_cast<int>(B.charts().size()); ++k) {
        auto& out = S.charts[static_cast<std::size_t>(k)];
        if (const auto& f = B.folding(k)) {
            out.pieces.push_back(A.pulled_back(*f));
            continue;
        }
        for (const Cell& E : chambers_meeting_chart(B, k)) {
            Polytope piece = A.pulled_back(B.retraction_on_chamber(k, E));
            for (auto h : cx.closure_halfspaces(E)) {
                h.tag = -2;
                piece.halfspaces.push_back(h);
            }
            if (!polytope_vertices(cx, piece).empty()) out.pieces.push_back(std::move(piece));
        }
    }
    return S;
}

// Local structure ----------------------------------------------------------------

bool is_cone_point(const Complex& cx, const PolyhedralSet& A, const Vec& a, const Q& eps)
{
    if (eps <= 0) throw InputError("eps must be positive");
    const auto& d = cx.datum();
    std::vector<Vec> dirs;
    if (cx.rank() == 1) {
        dirs = {Vec(Q(1)), Vec(Q(-1))};
    } else {
        Frame fr(d.gram);
        std::vector<Vec> cand;
        for (const auto& P : A.pieces)
            for (const auto& c : active_covectors(P, a)) {
                cand.push_back(perp(c));
                cand.push_back(-perp(c));
            }
        for (int w : cx.walls_through(a)) {
            const Vec& c = cx.walls()[static_cast<std::size_t>(w)].normal;
            cand.push_back(perp(c));
            cand.push_back(-perp(c));
        }
        if (cand.empty()) cand = {Vec(Q(1), Q(0)), Vec(Q(0), Q(1)), Vec(Q(-1), Q(0)), Vec(Q(0), Q(-1))};
        std::vector<std::pair<double, Vec>> by_angle;
        for (const auto& v : cand) by_angle.push_back({angle_of(fr, v), v});
        std::sort(by_angle.begin(), by_angle.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t i = 0; i < by_angle.size(); ++i) {
            double a0 = by_angle[i].first;
            double a1 = i + 1 < by_angle.size() ? by_angle[i + 1].first : by_angle.front().first + 2 * std::numbers::pi;
            dirs.push_back(by_angle[i].second);
            if (a1 - a0 > 1e-9) dirs.push_back(rotate_direction(fr, by_angle[i].second, (a1 - a0) / 2));
        }
    }
    for (const auto& u : dirs) {
        // scale so that the Gram length is at most eps
        Q n2 = d.norm2(u);
        Q s = eps;
        while (s * s * n2 > eps * eps) s /= 2;
        Vec b = a + u * s;
        if (pieces_cover(A, a, b)) continue;
        bool only_a = true;
        for (const auto& P : A.pieces)
            if (auto r = segment_interval(a, b, P.halfspaces))
                if (r->second > 0) only_a = false;
        if (!only_a) return false;
    }
    return true;
}

LinkSubset link_of_set(const Complex& cx, const PolyhedralSet& A, const Vec& a, const LinkSpace& link, int chart)
{
    (void)cx;
    LinkSubset s;
    for (const auto& P : A.pieces)
        if (P.contains(a)) s = subset_union(link, s, cone_subset(link, chart, active_covectors(P, a)));
    return canonical_subset(link, s);
}

LinkSubset link_of_set(const AtlasBuilding& B, const BuildingSubset& S, const BuildingLink& L)
{
    LinkSubset s;
    for (std::size_t k = 0; k < L.coords.size(); ++k) {
        if (!L.coords[k]) continue;
        const Vec& ak = *L.coords[k];
        for (const auto& P : S.charts[k].pieces) {
            if (!P.contains(ak)) continue;
            auto cov = active_covectors(P, ak);
            if (B.rank() == 1) {
                for (int sgn : {1, -1}) {
                    Vec e{Q(sgn)};
                    bool in = true;
                    for (const auto& c : cov)
                        if (dot(c, e) > 0) in = false;
                    if (!in) continue;
                    if (auto dir = locate_in_link(B, L, static_cast<int>(k), e)) s.vertices.push_back(dir->vertex);
                }
            } else {
                s = subset_union(L.link, s, cone_subset(L.link, static_cast<int>(k), cov));
            }
        }
    }
    return canonical_subset(L.link, s);
}

ConvexityReport is_locally_convex_at(const Complex& cx, const PolyhedralSet& A, const Vec& a)
{
    if (!A.contains(a)) throw InputError("point " + to_string(a) + " is not in the set");
    LinkSpace link = link_datum_at(cx, a);
    ConvexityReport r = is_pi_convex(link_of_set(cx, A, a, link), link);
    r.check = "locally_convex";
    for (auto& w : r.witnesses) w.data["at"] = to_string(a);
    return r;
}

ConvexityReport is_locally_convex_at(const AtlasBuilding& B, const BuildingSubset& S, const BuildingPoint& a)
{
    if (!subset_contains(B, S, a)) throw InputError("point " + to_string(a.x) + " is not in the set");
    BuildingLink L = building_link(B, a);
    ConvexityReport r = is_pi_convex(link_of_set(B, S, L), L.link);
    r.check = "locally_convex";
    for (auto& w : r.witnesses) w.data["at"] = point_json(a);
    return r;
}

// Normal conditions --------------------------------------------------------------

std::vector<Vec> boundary_strata(const Complex& cx, const Polytope& A)
{
    auto V = polytope_vertices(cx, A);
    if (V.empty()) throw InputError("the set is empty");
    const int dim = affine_dimension(V);
    std::vector<Vec> out;
    std::set<Vec> seen;
    auto add = [&](const Vec& p) {
        if (on_box(cx, p) || !cx.in_region(p)) return;
        if (seen.insert(p).second) out.push_back(p);
    };
    if (dim == 0) {
        add(V.front());
        return out;
    }
    if (cx.rank() == 1) {
        for (const auto& v : V) add(v);
        return out;
    }
    std::vector<std::pair<Vec, Vec>> edges;
    if (dim == 1) edges.push_back({V[0], V[1]});
    else
        for (std::size_t i = 0; i < V.size(); ++i) edges.push_back({V[i], V[(i + 1) % V.size()]});
    for (const auto& [p, q] : edges) {
        Vec e = q - p;
        if (on_box(cx, p + e * frac(1, 2))) continue;
        std::vector<Q> ts{Q(0)};
        for (const Q& t : cx.wall_crossings(p, q)) ts.push_back(t);
        ts.push_back(Q(1));
        for (std::size_t i = 0; i < ts.size(); ++i) {
            add(p + e * ts[i]);
            if (i + 1 < ts.size()) add(p + e * Q((ts[i] + ts[i + 1]) / 2));
        }
    }
    return out;
}

int center_side(const BuildingCenter& c, const Wall& h)
{
    if (!c.at_infinity) {
        int s = side_sign(c.chamber.point, h);
        if (s == 0) throw GeometryError("center chamber meets the wall " + to_string(h));
        return s;
    }
    int s = sign(dot(h.normal, c.sector.direction));
    if (s == 0) throw GeometryError("sector direction runs parallel to the wall " + to_string(h));
    return s;
}

namespace {

bool in_cone(int rank, const std::vector<Vec>& gens, const Vec& v)
{
    if (rank == 1) {
        for (const auto& g : gens)
            if (sign(g[0]) != 0 && sign(g[0]) == sign(v[0])) return true;
        return false;
    }
    for (const auto& g : gens)
        if (!g.is_zero() && det(g, v) == 0 && dot(g, v) > 0) return true;
    for (std::size_t i = 0; i < gens.size(); ++i)
        for (std::size_t j = i + 1; j < gens.size(); ++j) {
            Q d = det(gens[i], gens[j]);
            if (d == 0) continue;
            Q a = det(v, gens[j]) / d, b = det(gens[i], v) / d;
            if (a >= 0 && b >= 0) return true;
        }
    return false;
}

Vec unit_max(const Vec& v)
{
    Q m = 0;
    for (int i = 0; i < v.size(); ++i) m = std::max(m, Q(abs(v[i])));
    return v * Q(1 / m);
}

// Normal vectors restricted to the direction space of aff(V), as constraints.
std::vector<Vec> affine_hull_constraints(int rank, const std::vector<Vec>& V)
{
    const int dim = affine_dimension(V);
    if (dim == 0)
        return rank == 1 ? std::vector<Vec>{Vec(Q(1)), Vec(Q(-1))}
                         : std::vector<Vec>{Vec(Q(1), Q(0)), Vec(Q(-1), Q(0)), Vec(Q(0), Q(1)), Vec(Q(0), Q(-1))};
    if (dim == 1 && rank == 2) {
        Vec c = perp(V[1] - V[0]);
        return {c, -c};
    }
    return {};
}

Json walls_json(const Complex& cx, const std::vector<int>& ws)
{
    Json j = Json::array();
    for (int w : ws) j.push_back(to_string(cx.walls()[static_cast<std::size_t>(w)]));
    return j;
}

} // namespace

std::optional<Vec> cone_point(int rank, const std::vector<Vec>& generators, const std::vector<Vec>& constraints)
{
    std::vector<Vec> cand;
    for (const auto& g : generators)
        if (!g.is_zero()) cand.push_back(g);
    if (cand.empty()) return std::nullopt;
    if (rank == 1) {
        cand.push_back(Vec(Q(1)));
        cand.push_back(Vec(Q(-1)));
    } else {
        for (const auto& k : constraints) {
            if (k.is_zero()) continue;
            cand.push_back(perp(k));
            cand.push_back(-perp(k));
        }
    }
    std::vector<Vec> ok;
    for (const auto& c : cand) {
        bool good = true;
        for (const auto& k : constraints)
            if (dot(k, c) > 0) {
                good = false;
                break;
            }
        if (good && in_cone(rank, generators, c)) ok.push_back(unit_max(c));
    }
    if (ok.empty()) return std::nullopt;
    Vec sum(rank);
    for (const auto& v : ok) sum += v;
    if (!sum.is_zero()) {
        bool good = true;
        for (const auto& k : constraints)
            if (dot(k, sum) > 0) good = false;
        if (good && in_cone(rank, generators, sum)) return unit_max(sum);
    }
    return ok.front();
}

ConvexityReport check_normal_condition(const Complex& cx, const Polytope& A, const BuildingCenter& center)
{
    ConvexityReport r;
    r.check = "normal_condition";
    const auto& d = cx.datum();
    auto strata = boundary_strata(cx, A);
    for (const Vec& a : strata) {
        auto cov = active_covectors(A, a);
        std::vector<Vec> dual;
        for (const auto& c : cov) dual.push_back(-d.covector_to_vector(c));
        std::vector<Vec> cons = cov;
        auto ws = cx.walls_through(a);
        for (int w : ws) {
            const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
            cons.push_back(h.normal * Q(-center_side(center, h)));
        }
        auto n = cone_point(cx.rank(), dual, cons);
        if (!n) r.fail("no_normal_direction", Json{{"at", to_string(a)}, {"walls", walls_json(cx, ws)}});
        else r.note("normal_direction", Json{{"at", to_string(a)}, {"n", to_string(*n)}});
    }
    r.note("strata", Json{{"count", strata.size()}});
    return r;
}

ConvexityReport check_weak_normal_condition(const Complex& cx, const Polytope& A, const BuildingCenter& center,
                                            WallMode mode)
{
    if (mode == WallMode::two_closest && center.at_infinity)
        throw InputError("two_closest mode needs a chamber center");
    ConvexityReport r;
    r.check = mode == WallMode::all_walls ? "weak_normal_condition" : "weak_normal_condition_two_closest";
    const auto& d = cx.datum();
    auto V = polytope_vertices(cx, A);
    if (V.empty()) throw InputError("the set is empty");
    const auto hull_cons = affine_hull_constraints(cx.rank(), V);
    auto closest = [&](const Wall& h) {
        Q level = dot(h.normal, center.chamber.point);
        for (const auto& w : cx.walls()) {
            if (w.normal != h.normal) continue;
            if ((level < w.offset && w.offset < h.offset) || (h.offset < w.offset && w.offset < level)) return false;
        }
        return true;
    };
    auto strata = boundary_strata(cx, A);
    int checked = 0;
    for (const Vec& a : strata) {
        auto cov = active_covectors(A, a);
        std::vector<Vec> normals;
        for (const auto& c : cov) normals.push_back(d.covector_to_vector(c));
        for (int w : cx.walls_through(a)) {
            const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
            if (mode == WallMode::two_closest && !closest(h)) continue;
            ++checked;
            auto cons = hull_cons;
            cons.push_back(h.normal * Q(center_side(center, h)));
            if (!cone_point(cx.rank(), normals, cons))
                r.fail("no_outward_normal", Json{{"at", to_string(a)}, {"wall", to_string(h)}});
        }
    }
    r.note("strata", Json{{"count", strata.size()}, {"wall_checks", checked}});
    return r;
}

// Thickening ------------------------------------------------------------------------

namespace {

// Rational upper bound of sqrt(q), within 2^-19.
Q sqrt_up(const Q& q)
{
    double s = std::sqrt(to_double(q));
    Q r(static_cast<long>(std::ceil(s * 1048576.0)) + 1, 1048576L);
    r.canonicalize();
    while (r * r < q) r += Q(1, 1048576L);
    return r;
}

} // namespace

Polytope thicken(const Complex& cx, const Polytope& A, const Q& eps)
{
    if (eps < 0) throw InputError("eps must be nonnegative");
    const auto& d = cx.datum();
    auto V = polytope_vertices(cx, A);
    if (V.empty()) throw InputError("the set is empty");
    Polytope out;
    for (const auto& h : A.halfspaces)
        out.halfspaces.push_back({h.normal, Q(h.offset + eps * sqrt_up(conorm2(d, h.normal))), h.tag});
    bool bounded = std::none_of(V.begin(), V.end(), [&](const Vec& v) { return on_box(cx, v); });
    if (cx.rank() == 2 && bounded && eps > 0) {
        Frame fr(d.gram);
        for (int j = 0; j < 16; ++j) {
            double th = 2 * std::numbers::pi * j / 16;
            double u0 = std::cos(th), u1 = std::sin(th);
            // covector c with c . x = u . (E^{-1} x)
            Vec c(from_double(std::round((fr.inv[0][0] * u0 + fr.inv[1][0] * u1) * 4096) / 4096),
                  from_double(std::round((fr.inv[0][1] * u0 + fr.inv[1][1] * u1) * 4096) / 4096));
            if (c.is_zero()) continue;
            Q support = dot(c, V.front());
            for (const auto& v : V) support = std::max(support, dot(c, v));
            out.halfspaces.push_back({c, Q(support + eps * sqrt_up(conorm2(d, c))), -3});
        }
    }
    return out;
}

ConvexityReport check_thickened_weak_normal(const Complex& cx, const Polytope& A, const Q& eps,
                                            const BuildingCenter& center, double tol)
{
    if (cx.rank() != 2) throw InputError("thickening check needs rank 2");
    if (eps <= 0) throw InputError("eps must be positive");
    auto V = polytope_vertices(cx, A);
    if (V.empty()) throw InputError("the set is empty");
    for (const auto& v : V)
        if (on_box(cx, v)) throw InputError("thickening check needs a bounded set");
    ConvexityReport r;
    r.check = "thickened_weak_normal_condition";
    r.tolerance = tol;
    Frame fr(cx.datum().gram);
    const double e = to_double(eps);
    const double pi = std::numbers::pi;
    const std::size_t n = V.size();
    std::vector<std::array<double, 2>> Y;
    for (const auto& v : V) Y.push_back(fr.to_y(v));

    struct Edge {
        std::size_t p, q;
        double nu[2];
    };
    std::vector<Edge> edges;
    auto make_edge = [&](std::size_t p, std::size_t q) {
        double e0 = Y[q][0] - Y[p][0], e1 = Y[q][1] - Y[p][1];
        double l = std::hypot(e0, e1);
        edges.push_back({p, q, {e1 / l, -e0 / l}});
    };
    if (n >= 3)
        for (std::size_t i = 0; i < n; ++i) make_edge(i, (i + 1) % n);
    else if (n == 2) {
        make_edge(0, 1);
        make_edge(1, 0);
    }
    // normal arc at each vertex: start angle and counterclockwise extent
    std::vector<std::pair<double, double>> arcs(n, {0.0, 2 * pi});
    auto ang = [](const double* v) { return std::atan2(v[1], v[0]); };
    auto ccw = [&](double from, double to) {
        double x = std::fmod(to - from, 2 * pi);
        return x < 0 ? x + 2 * pi : x;
    };
    if (n >= 3)
        for (std::size_t i = 0; i < n; ++i) {
            const Edge& in = edges[(i + n - 1) % n];
            const Edge& out = edges[i];
            arcs[i] = {ang(in.nu), ccw(ang(in.nu), ang(out.nu))};
        }
    else if (n == 2) {
        arcs[1] = {ang(edges[0].nu), pi};
        arcs[0] = {ang(edges[1].nu), pi};
    }

    std::set<std::string> flagged;
    int hits = 0;
    for (const auto& h : cx.walls()) {
        auto a = fr.covector_y(h.normal);
        const double k = to_double(h.offset);
        const double R = std::hypot(a[0], a[1]);
        const int s = center_side(center, h);
        auto check = [&](double y0, double y1) {
            ++hits;
            if (s * (a[0] * y0 + a[1] * y1 - k) < -tol * R) {
                Vec x = fr.to_x(y0, y1);
                std::string key = to_string(h) + "@" + to_string(x);
                if (flagged.insert(key).second)
                    r.fail("projection_beyond_wall", Json{{"wall", to_string(h)}, {"projection", {y0, y1}}});
            }
        };
        for (const auto& ed : edges) {
            const auto& p = Y[ed.p];
            const auto& q = Y[ed.q];
            double d0 = q[0] - p[0], d1 = q[1] - p[1];
            double base = a[0] * (p[0] + e * ed.nu[0]) + a[1] * (p[1] + e * ed.nu[1]) - k;
            double slope = a[0] * d0 + a[1] * d1;
            if (std::abs(slope) < tol * R * std::hypot(d0, d1)) {
                if (std::abs(base) < tol * R) {
                    check(p[0], p[1]);
                    check(q[0], q[1]);
                }
                continue;
            }
            double t = -base / slope;
            if (t >= -1e-12 && t <= 1 + 1e-12) check(p[0] + t * d0, p[1] + t * d1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double rr = (k - a[0] * Y[i][0] - a[1] * Y[i][1]) / e;
            if (std::abs(rr) > R * (1 + 1e-12)) continue;
            double phi = std::atan2(a[1], a[0]);
            double delta = std::acos(std::clamp(rr / R, -1.0, 1.0));
            for (double th : {phi + delta, phi - delta})
                if (ccw(arcs[i].first, th) <= arcs[i].second + 1e-12 || arcs[i].second >= 2 * pi - 1e-12) {
                    check(Y[i][0], Y[i][1]);
                    break;
                }
        }
    }
    r.note("boundary_wall_points", Json{{"count", hits}});
    return r;
}

// Length metric -------------------------------------------------------------------

PolyPath length_metric_path(const AtlasBuilding& B, const BuildingSubset& S, const BuildingPoint& x,
                            const BuildingPoint& y)
{
    if (!subset_contains(B, S, x) || !subset_contains(B, S, y)) throw InputError("endpoints must lie in the set");
    const auto& d = B.datum();
    std::vector<BuildingPoint> nodes;
    std::map<BuildingPoint, int> index;
    std::vector<std::map<int, Vec>> coords;
    auto add = [&](const BuildingPoint& p) {
        BuildingPoint c = B.canonical_point(p);
        if (index.count(c)) return;
        index[c] = static_cast<int>(nodes.size());
        nodes.push_back(c);
        std::map<int, Vec> m;
        for (const auto& mem : B.point_class(c)) m[mem.chart] = mem.x;
        coords.push_back(std::move(m));
    };
    add(x);
    add(y);
    // piece vertices and vertices of pairwise piece intersections (reflex corners)
    for (std::size_t k = 0; k < S.charts.size(); ++k) {
        const auto& ps = S.charts[k].pieces;
        auto add_all = [&](const Polytope& P) {
            for (const auto& v : polytope_vertices(B.complex(), P))
                if (!on_box(B.complex(), v) && B.in_chart(static_cast<int>(k), v)) add({static_cast<int>(k), v});
        };
        for (std::size_t i = 0; i < ps.size(); ++i) {
            add_all(ps[i]);
            for (std::size_t j = i + 1; j < ps.size(); ++j) {
                Polytope both = ps[i];
                both.halfspaces.insert(both.halfspaces.end(), ps[j].halfspaces.begin(), ps[j].halfspaces.end());
                add_all(both);
            }
        }
    }
    const int n = static_cast<int>(nodes.size());
    const int src = index.at(B.canonical_point(x)), dst = index.at(B.canonical_point(y));

    // edge weight and chart, computed lazily
    auto edge = [&](int i, int j) -> std::pair<double, int> {
        for (const auto& [k, xi] : coords[static_cast<std::size_t>(i)]) {
            auto it = coords[static_cast<std::size_t>(j)].find(k);
            if (it == coords[static_cast<std::size_t>(j)].end()) continue;
            if (xi == it->second) return {0.0, k};
            if (pieces_cover(S.charts[static_cast<std::size_t>(k)], xi, it->second))
                return {d.length(it->second - xi), k};
        }
        return {kInfinity, -1};
    };
    std::vector<double> dist(static_cast<std::size_t>(n), kInfinity);
    std::vector<int> prev(static_cast<std::size_t>(n), -1), via(static_cast<std::size_t>(n), -1);
    std::vector<bool> done(static_cast<std::size_t>(n), false);
    dist[static_cast<std::size_t>(src)] = 0;
    for (int it = 0; it < n; ++it) {
        int u = -1;
        for (int i = 0; i < n; ++i)
            if (!done[static_cast<std::size_t>(i)] && (u < 0 || dist[static_cast<std::size_t>(i)] < dist[static_cast<std::size_t>(u)]))
                u = i;
        if (u < 0 || dist[static_cast<std::size_t>(u)] == kInfinity) break;
        done[static_cast<std::size_t>(u)] = true;
        if (u == dst) break;
        for (int v = 0; v < n; ++v) {
            if (done[static_cast<std::size_t>(v)]) continue;
            auto [w, k] = edge(u, v);
            if (k < 0) continue;
            double nd = dist[static_cast<std::size_t>(u)] + w;
            if (nd < dist[static_cast<std::size_t>(v)]) {
                dist[static_cast<std::size_t>(v)] = nd;
                prev[static_cast<std::size_t>(v)] = u;
                via[static_cast<std::size_t>(v)] = k;
            }
        }
    }
    PolyPath path;
    path.length = dist[static_cast<std::size_t>(dst)];
    if (path.length == kInfinity) return path;
    std::vector<int> order;
    for (int v = dst; v >= 0; v = prev[static_cast<std::size_t>(v)]) order.push_back(v);
    std::reverse(order.begin(), order.end());
    path.chart = order.size() > 1 ? via[static_cast<std::size_t>(order[1])] : nodes[static_cast<std::size_t>(src)].chart;
    for (int v : order) {
        int k = v == src ? path.chart : via[static_cast<std::size_t>(v)];
        path.breakpoints.push_back({k, coords[static_cast<std::size_t>(v)].at(k)});
    }
    return path;
}

// Ascending geodesics ---------------------------------------------------------------

namespace {

struct Segment {
    int chart;
    Vec p, q;
};

Segment segment_of(const AtlasBuilding& B, const BuildingPoint& x, const BuildingPoint& y)
{
    int k = B.common_apartment(x, y);
    auto px = B.coords_in(x, k), py = B.coords_in(y, k);
    if (*px == *py) throw InputError("degenerate geodesic");
    return {k, *px, *py};
}

// A chamber of chart k containing q in its closure, with an interior point
// inside the chart.
Cell chamber_near(const AtlasBuilding& B, int k, const Vec& q)
{
    const Complex& cx = B.complex();
    Cell c = cx.carrier(q);
    if (c.is_chamber()) return c;
    Cell e = cx.chambers_at(c).front();
    Q s = frac(1, 2);
    for (int i = 0; i < 60; ++i, s /= 2) {
        Vec p = q + (e.point - q) * s;
        if (B.in_chart(k, p) && cx.carrier(p) == e) {
            e.point = p;
            return e;
        }
    }
    throw GeometryError("no chamber of the chart near " + to_string(q));
}

} // namespace

ConvexityReport is_ascending_at(const AtlasBuilding& B, const Polytope& A, const BuildingPoint& x,
                                const BuildingPoint& y, const Q& t)
{
    if (t < 0 || t > 1) throw InputError("parameter must lie in [0, 1]");
    const Complex& cx = B.complex();
    const auto& d = B.datum();
    Segment s = segment_of(B, x, y);
    Vec dir = s.q - s.p;
    Vec p = s.p + dir * t;
    std::vector<Q> marks{Q(0), Q(1)};
    for (const Q& c : cx.wall_crossings(s.p, s.q)) marks.push_back(c);
    Q gap = 1;
    for (const Q& c : marks)
        if (c != t) gap = std::min(gap, Q(abs(c - t)));
    Q delta = gap / 2;
    Vec rp = B.retract({s.chart, p});
    Vec m = rp - nearest_point(cx, A, rp);
    if (m.is_zero()) throw GeometryError("rho(gamma(t)) lies in A");
    auto tangent = [&](const Q& at) {
        Cell e = chamber_near(B, s.chart, s.p + dir * at);
        return B.retraction_on_chamber(s.chart, e).linear * dir;
    };
    Vec v = t > 0 ? tangent(t - delta) : tangent(t + delta);
    Vec w = t < 1 ? tangent(t + delta) : v;
    Q vm = d.inner(v, m), wm = d.inner(w, m);
    ConvexityReport r;
    r.check = "ascending_at";
    Json data{{"chart", s.chart}, {"t", to_string(t)},       {"v", to_string(v)},        {"w", to_string(w)},
              {"m", to_string(m)}, {"vm", to_double(vm)}, {"wm", to_double(wm)}};
    if (vm >= 0 && wm >= 0) r.note("tangents", data);
    else r.fail("descending", data);
    return r;
}

ConvexityReport verify_ascending_propagation(const AtlasBuilding& B, const Polytope& A, const BuildingPoint& x,
                                             const BuildingPoint& y, int grid, double tol)
{
    if (grid < 1) throw InputError("grid must be positive");
    const Complex& cx = B.complex();
    Segment s = segment_of(B, x, y);
    std::vector<Q> ts;
    for (int i = 0; i <= grid; ++i) ts.push_back(frac(i, grid));
    for (const Q& c : cx.wall_crossings(s.p, s.q)) ts.push_back(c);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    ConvexityReport r;
    r.check = "ascending_propagation";
    r.tolerance = tol;
    auto f = [&](const Q& t) {
        return std::sqrt(to_double(distance2_to(cx, A, B.retract({s.chart, s.p + (s.q - s.p) * t}))));
    };
    std::size_t exit = ts.size();
    std::vector<double> fs;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        fs.push_back(f(ts[i]));
        if (exit == ts.size() && fs.back() > tol) exit = i;
    }
    if (exit == ts.size()) {
        r.note("never_exits", Json{{"chart", s.chart}});
        return r;
    }
    r.note("exit", Json{{"chart", s.chart}, {"t", to_string(ts[exit])}, {"samples", ts.size()}});
    for (std::size_t j = exit + 1; j < ts.size(); ++j) {
        if (fs[j] > tol && fs[j] - fs[j - 1] > -tol) continue;
        Json data{{"chart", s.chart},          {"t_prev", to_string(ts[j - 1])}, {"t", to_string(ts[j])},
                  {"d_prev", fs[j - 1]},       {"d", fs[j]}};
        if (fs[j - 1] > 0) {
            auto at = is_ascending_at(B, A, x, y, ts[j - 1]);
            data["tangents"] = at.witnesses.front().data;
        }
        r.fail("not_ascending", data);
        break;
    }
    return r;
}

// Global convexity ----------------------------------------------------------------

namespace {

struct PieceRef {
    int chart;
    std::vector<Vec> vertices;
};

} // namespace

ConvexityReport verify_global_convexity(const AtlasBuilding& B, const BuildingSubset& S, const GlobalOptions& opt)
{
    if (opt.samples < 0) throw InputError("samples must be nonnegative");
    const Complex& cx = B.complex();
    ConvexityReport r;
    r.check = "global_convexity";
    r.tolerance = opt.tol;
    std::mt19937_64 rng(opt.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    std::vector<PieceRef> pieces;
    for (std::size_t k = 0; k < S.charts.size(); ++k)
        for (const auto& P : S.charts[k].pieces) {
            auto V = polytope_vertices(cx, P);
            if (!V.empty()) pieces.push_back({static_cast<int>(k), std::move(V)});
        }
    if (pieces.empty()) throw InputError("the set is empty");

    constexpr int kMaxFailures = 5;  // per phase
    int failures = 0;

    // phase 1: local convexity at piece vertices and random boundary points
    std::set<BuildingPoint> strata;
    for (const auto& pr : pieces)
        for (const auto& v : pr.vertices)
            if (!on_box(cx, v) && B.in_chart(pr.chart, v)) strata.insert(B.canonical_point({pr.chart, v}));
    std::vector<BuildingPoint> local(strata.begin(), strata.end());
    for (int i = 0, tries = 0; i < opt.samples && tries < 4 * opt.samples + 16; ++tries) {
        const auto& pr = pieces[pick(pieces.size())];
        const std::size_t n = pr.vertices.size();
        std::size_t e = pick(n);
        const Vec& p = pr.vertices[e];
        const Vec& q = pr.vertices[(e + 1) % n];
        Vec x = p + (q - p) * frac(static_cast<long>(pick(65)), 64);
        if (on_box(cx, x) || !B.in_chart(pr.chart, x)) continue;
        local.push_back({pr.chart, x});
        ++i;
    }
    int phase1 = 0;
    failures = 0;
    for (const auto& a : local) {
        ++phase1;
        auto lr = is_locally_convex_at(B, S, a);
        if (lr.verdict) continue;
        Json data{{"at", point_json(a)}};
        if (const auto* w = lr.first("escaping_geodesic")) data["link"] = w->data;
        r.fail("not_locally_convex", data);
        if (++failures >= kMaxFailures) break;
    }

    // phase 2: geodesics between sample pairs
    auto random_point = [&]() -> std::optional<BuildingPoint> {
        for (int tries = 0; tries < 32; ++tries) {
            const auto& pr = pieces[pick(pieces.size())];
            Vec x(cx.rank());
            long total = 0;
            for (const auto& v : pr.vertices) {
                long w = 1 + static_cast<long>(pick(8));
                x += v * Q(w);
                total += w;
            }
            x = x * frac(1, total);
            if (B.in_chart(pr.chart, x)) return BuildingPoint{pr.chart, x};
        }
        return std::nullopt;
    };
    std::vector<std::pair<BuildingPoint, BuildingPoint>> pairs = opt.seeded_pairs;
    for (int i = 0; i < opt.samples; ++i) {
        auto a = random_point(), b = random_point();
        if (a && b) pairs.push_back({*a, *b});
    }
    int phase2 = 0;
    failures = 0;
    for (const auto& [a, b] : pairs) {
        if (failures >= kMaxFailures) break;
        ++phase2;
        int k = B.common_apartment(a, b);
        Vec p = *B.coords_in(a, k), q = *B.coords_in(b, k);
        if (p == q) continue;
        std::vector<Q> ts;
        for (int j = 0; j <= 16; ++j) ts.push_back(frac(j, 16));
        for (const Q& c : cx.wall_crossings(p, q)) ts.push_back(c);
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        const std::size_t m = ts.size();
        for (std::size_t j = 0; j + 1 < m; ++j) ts.push_back((ts[j] + ts[j + 1]) / 2);
        for (const Q& t : ts) {
            BuildingPoint z{k, p + (q - p) * t};
            if (S.charts[static_cast<std::size_t>(k)].contains(z.x) || subset_contains(B, S, z)) continue;
            r.fail("geodesic_leaves_set",
                   Json{{"x", point_json(a)}, {"y", point_json(b)}, {"t", to_string(t)}, {"point", point_json(z)}});
            ++failures;
            break;
        }
    }
    r.note("phases", Json{{"local_points", phase1}, {"pairs", phase2}, {"seed", opt.seed}});
    return r;
}

// Key halfspace inclusion ------------------------------------------------------------

ConvexityReport key_halfspace_inclusion(const Complex& cx, const Polytope& A, const Wall& h, int side)
{
    if (side != 1 && side != -1) throw InputError("side must be +1 or -1");
    if (cx.rank() != 2) throw InputError("halfspace inclusion needs rank 2");
    const auto& d = cx.datum();
    auto V = polytope_vertices(cx, A);
    if (V.empty()) throw InputError("the set is empty");
    for (const auto& v : V)
        if (on_box(cx, v)) throw InputError("halfspace inclusion needs a bounded set");
    ConvexityReport r;
    r.check = "key_halfspace_inclusion";
    auto level = [&](const Vec& x) { return side * sign(dot(h.normal, x) - h.offset); };
    if (std::none_of(V.begin(), V.end(), [&](const Vec& v) { return level(v) < 0; })) {
        r.fail("precondition_failed", Json{{"reason", "A lies inside H+"}});
        return r;
    }
    const auto hull_cons = affine_hull_constraints(cx.rank(), V);
    for (const Vec& a : boundary_strata(cx, A)) {
        if (dot(h.normal, a) != h.offset) continue;
        std::vector<Vec> normals;
        for (const auto& c : active_covectors(A, a)) normals.push_back(d.covector_to_vector(c));
        auto cons = hull_cons;
        cons.push_back(h.normal * Q(-side));
        if (!cone_point(cx.rank(), normals, cons))
            r.fail("precondition_failed", Json{{"reason", "no normal vector into H+"}, {"at", to_string(a)}});
    }
    if (!r.verdict) return r;
    auto W = clip_convex(V, Halfspace{h.normal * Q(-side), Q(-side * h.offset), -1});
    Vec g = d.covector_to_vector(h.normal);
    Q n2 = dot(h.normal, g);
    for (const Vec& p : W) {
        Vec proj = p - g * Q((dot(h.normal, p) - h.offset) / n2);
        if (!A.contains(proj)) r.fail("escaping_point", Json{{"point", to_string(p)}, {"projection", to_string(proj)}});
    }
    r.note("vertices_checked", Json{{"count", W.size()}});
    return r;
}

} // namespace cvxbuild
