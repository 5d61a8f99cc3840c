#include "cvxbuild/building.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <deque>
#include <map>
#include <set>

namespace cvxbuild {

namespace {

constexpr std::size_t kMaxCharts = 256;

Json point_json(const BuildingPoint& p) { return Json{{"chart", p.chart}, {"x", to_string(p.x)}}; }

// Rescales v by a power of two so that its Gram length lies in [2 diam, 4 diam).
// Any ray of that length crosses a wall transversally.
Vec probe_vector(const Complex& cx, const Vec& v)
{
    if (v.is_zero()) throw GeometryError("zero direction");
    const Q lo = 4 * cx.chamber_diameter2();
    const Q hi = 16 * cx.chamber_diameter2();
    Vec w = v;
    while (cx.datum().norm2(w) < lo) w = w * Q(2);
    while (cx.datum().norm2(w) >= hi) w = w * frac(1, 2);
    return w;
}

// Point halfway to the first transversal wall crossing along the ray a + t v.
// It depends only on the germ of the ray, so it identifies germs across charts.
Vec germ_point(const Complex& cx, const Vec& a, const Vec& v)
{
    Vec w = probe_vector(cx, v);
    auto cr = cx.wall_crossings(a, a + w);
    if (cr.empty()) throw GeometryError("no wall crossing along probe ray");
    return a + w * (cr.front() / 2);
}

Mat mat1(const Q& a)
{
    Mat m(1);
    m(0, 0) = a;
    return m;
}

Q coordinate_box(const Complex& cx)
{
    Mat ginv = cx.datum().gram.inverse();
    double m = 0;
    for (int i = 0; i < cx.rank(); ++i) m = std::max(m, to_double(cx.region_radius2() * ginv(i, i)));
    return Q(static_cast<long>(std::ceil(std::sqrt(m))) + 1);
}

// Segment [p, q] covered by the union of the pieces.
bool union_covers(const Domain& d, const Vec& p, const Vec& q)
{
    std::vector<std::pair<Q, Q>> iv;
    for (const auto& piece : d)
        if (auto r = segment_interval(p, q, piece)) iv.push_back(*r);
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

} // namespace

bool domain_contains(const Domain& d, const Vec& x)
{
    for (const auto& piece : d) {
        bool in = true;
        for (const auto& h : piece)
            if (dot(h.normal, x) > h.offset) {
                in = false;
                break;
            }
        if (in) return true;
    }
    return false;
}

BuildingCenter BuildingCenter::of_chamber(Cell c)
{
    BuildingCenter b;
    b.chamber = std::move(c);
    return b;
}

BuildingCenter BuildingCenter::of_sector(SectorGerm s)
{
    BuildingCenter b;
    b.at_infinity = true;
    b.sector = std::move(s);
    return b;
}

AtlasBuilding::AtlasBuilding(Complex cx, std::vector<Chart> charts, std::vector<Gluing> gluings, int base_chart,
                             BuildingCenter center)
    : cx_(std::move(cx)), charts_(std::move(charts)), gluings_(std::move(gluings)), base_(base_chart),
      center_(std::move(center))
{
    const int n = static_cast<int>(charts_.size());
    if (n == 0) throw InputError("atlas needs at least one chart");
    if (charts_.size() > kMaxCharts) throw InputError("too many charts");
    if (base_ < 0 || base_ >= n) throw InputError("base chart out of range");
    for (const auto& c : charts_) {
        if (c.center.size() != rank()) throw InputError("chart center has the wrong dimension");
        if (c.radius2 <= 0) throw InputError("chart radius must be positive");
    }
    adjacency_.assign(static_cast<std::size_t>(n), {});
    for (std::size_t g = 0; g < gluings_.size(); ++g) {
        const auto& gl = gluings_[g];
        if (gl.i < 0 || gl.i >= n || gl.j < 0 || gl.j >= n || gl.i == gl.j)
            throw InputError("gluing " + std::to_string(g) + " has bad chart ids");
        if (gl.map.linear.size() != rank() || gl.map.shift.size() != rank())
            throw InputError("gluing map has the wrong dimension");
        if (gl.map.linear.determinant() == 0) throw InputError("gluing map is singular");
        for (const auto& piece : gl.domain)
            for (const auto& h : piece)
                if (h.normal.size() != rank() || h.normal.is_zero())
                    throw InputError("gluing domain halfspace has a bad normal");
        inverse_maps_.push_back(gl.map.inverse());
        // n.x <= o with x = L^{-1}(y - s) becomes (L^{-T} n).y <= o + (L^{-T} n).s.
        Mat lit = inverse_maps_.back().linear.transpose();
        Domain img;
        for (const auto& piece : gl.domain) {
            std::vector<Halfspace> hs;
            for (const auto& h : piece) {
                Vec n = lit * h.normal;
                hs.push_back({n, Q(h.offset + dot(n, gl.map.shift)), h.tag});
            }
            img.push_back(std::move(hs));
        }
        image_domains_.push_back(std::move(img));
        adjacency_[static_cast<std::size_t>(gl.i)].push_back(static_cast<int>(2 * g));
        adjacency_[static_cast<std::size_t>(gl.j)].push_back(static_cast<int>(2 * g + 1));
    }
    compute_foldings();
}

void AtlasBuilding::compute_foldings()
{
    const auto& d = datum();
    if (!center_.at_infinity) {
        if (center_.chamber.point.size() != rank()) throw InputError("center chamber has the wrong dimension");
        reference_ = cx_.canonical_cell(center_.chamber.point);
        if (!reference_.is_chamber()) throw InputError("center is not a chamber");
    } else {
        const auto& s = center_.sector;
        if (s.base.size() != rank() || s.direction.size() != rank() || s.direction.is_zero())
            throw InputError("bad sector germ");
        for (const auto& w : cx_.walls())
            if (dot(w.normal, s.direction) == 0) throw InputError("sector direction lies in a wall direction");
        const Chart& b = charts_[static_cast<std::size_t>(base_)];
        double r = std::sqrt(to_double(b.radius2));
        double off = d.length(s.base - b.center);
        double lam = (0.75 * r - off) / d.length(s.direction);
        if (lam <= 0) throw InputError("sector base lies too far from the base chart center");
        Q l(static_cast<long>(std::floor(lam * 64)), 64);
        l.canonicalize();
        while (l > 0 && !cx_.carrier(s.base + s.direction * l).is_chamber()) l -= frac(1, 64);
        if (l <= 0) throw InputError("no deep chamber along the sector");
        reference_ = cx_.canonical_cell(s.base + s.direction * l);
    }
    if (!in_chart(base_, reference_.point)) throw InputError("center chamber lies outside the base chart");
    for (const auto& v : cx_.closure_vertices(reference_))
        if (!in_chart(base_, v)) throw InputError("center chamber is not contained in the base chart");
    folding_.assign(charts_.size(), std::nullopt);
    for (const auto& m : point_class({base_, reference_.point}))
        folding_[static_cast<std::size_t>(m.chart)] = m.from_query.inverse();
}

AtlasBuilding AtlasBuilding::with_center(BuildingCenter c) const
{
    return AtlasBuilding(cx_, charts_, gluings_, base_, std::move(c));
}

bool AtlasBuilding::in_chart(int k, const Vec& x) const
{
    if (k < 0 || k >= static_cast<int>(charts_.size())) throw InputError("chart id out of range");
    if (x.size() != rank() || !cx_.in_region(x)) return false;
    const Chart& c = charts_[static_cast<std::size_t>(k)];
    return datum().norm2(x - c.center) <= c.radius2;
}

std::vector<ClassMember> AtlasBuilding::point_class(const BuildingPoint& p, std::string* conflict) const
{
    if (!in_chart(p.chart, p.x))
        throw GeometryError("point " + to_string(p.x) + " lies outside chart " + std::to_string(p.chart));
    std::vector<ClassMember> out{{p.chart, p.x, AffineMap::identity(rank())}};
    std::vector<int> slot(charts_.size(), -1);
    slot[static_cast<std::size_t>(p.chart)] = 0;
    for (std::size_t head = 0; head < out.size(); ++head) {
        const int c = out[head].chart;
        const Vec x = out[head].x;
        const AffineMap f = out[head].from_query;
        for (int e : adjacency_[static_cast<std::size_t>(c)]) {
            const std::size_t gi = static_cast<std::size_t>(e / 2);
            const Gluing& g = gluings_[gi];
            const bool forward = e % 2 == 0;
            const int target = forward ? g.j : g.i;
            int& s = slot[static_cast<std::size_t>(target)];
            if (s >= 0 && !conflict) continue;
            if (!domain_contains(forward ? g.domain : image_domains_[gi], x)) continue;
            const AffineMap& step = forward ? g.map : inverse_maps_[gi];
            Vec y = step.apply(x);
            if (!in_chart(target, y)) continue;
            if (s >= 0) {
                if (conflict && conflict->empty() && !(out[static_cast<std::size_t>(s)].x == y))
                    *conflict = "chart " + std::to_string(target) + " reached as " +
                                to_string(out[static_cast<std::size_t>(s)].x) + " and " + to_string(y);
                continue;
            }
            s = static_cast<int>(out.size());
            out.push_back({target, y, step.after(f)});
        }
    }
    return out;
}

BuildingPoint AtlasBuilding::canonical_point(const BuildingPoint& p) const
{
    auto cls = point_class(p);
    const ClassMember* best = &cls.front();
    for (const auto& m : cls)
        if (m.chart < best->chart) best = &m;
    return {best->chart, best->x};
}

std::optional<Vec> AtlasBuilding::coords_in(const BuildingPoint& p, int chart) const
{
    if (p.chart == chart) {
        if (!in_chart(chart, p.x)) throw GeometryError("point lies outside its chart");
        return p.x;
    }
    for (const auto& m : point_class(p))
        if (m.chart == chart) return m.x;
    return std::nullopt;
}

Vec AtlasBuilding::retract(const BuildingPoint& x) const
{
    if (!in_chart(x.chart, x.x)) throw GeometryError("point lies outside its chart");
    if (const auto& f = folding(x.chart)) return f->apply(x.x);
    for (const auto& m : point_class(x))
        if (const auto& f = folding(m.chart)) return f->apply(m.x);
    throw GeometryError("atlas is not saturated: no chart through " + to_string(x.x) + " contains the center");
}

Vec AtlasBuilding::retract_center_chamber(const BuildingPoint& x) const
{
    if (center_.at_infinity) throw InputError("the center is a chamber at infinity");
    return retract(x);
}

Vec AtlasBuilding::retract_center_infinity(const BuildingPoint& x) const
{
    if (!center_.at_infinity) throw InputError("the center is a chamber");
    return retract(x);
}

Vec AtlasBuilding::retract_onto(int target_chart, const BuildingPoint& x) const
{
    const auto& f = folding(target_chart);
    if (!f) throw GeometryError("target chart does not contain the center");
    return f->inverse().apply(retract(x));
}

AffineMap AtlasBuilding::retraction_on_chamber(int k, const Cell& chamber) const
{
    if (const auto& f = folding(k)) return *f;
    for (const auto& m : point_class({k, chamber.point}))
        if (const auto& f = folding(m.chart)) return f->after(m.from_query);
    throw GeometryError("atlas is not saturated at chamber " + to_string(chamber.point));
}

Cell AtlasBuilding::project_chamber_at_infinity(const SectorGerm& c, int chart, const Cell& sigma) const
{
    if (sigma.is_chamber()) return sigma;
    Vec dir = c.direction;
    if (chart != base_) {
        const auto& f = folding(chart);
        if (!center_.at_infinity || !f) throw GeometryError("chart does not contain the chamber at infinity");
        dir = f->linear.inverse() * c.direction;
    }
    Cell e = cx_.canonical_cell(germ_point(cx_, sigma.point, dir));
    if (!e.is_chamber()) throw GeometryError("sector direction runs along a wall");
    return e;
}

std::pair<int, Cell> AtlasBuilding::project_center_chamber(int chart, const Cell& sigma) const
{
    const ClassMember* pick = nullptr;
    auto cls = point_class({chart, sigma.point});
    for (const auto& m : cls)
        if (folding(m.chart) && (!pick || m.chart == chart || (pick->chart != chart && m.chart < pick->chart)))
            pick = &m;
    if (!pick) throw GeometryError("no chart contains both the cell and the center");
    Cell s = cx_.carrier(pick->x);
    if (center_.at_infinity) return {pick->chart, project_chamber_at_infinity(center_.sector, pick->chart, s)};
    Cell c = cx_.canonical_cell(folding(pick->chart)->inverse().apply(reference_.point));
    return {pick->chart, cx_.project_chamber_to_cell(c, s)};
}

std::vector<int> AtlasBuilding::common_charts(const BuildingPoint& x, const BuildingPoint& y) const
{
    std::vector<bool> in_x(charts_.size(), false);
    for (const auto& m : point_class(x)) in_x[static_cast<std::size_t>(m.chart)] = true;
    std::vector<int> out;
    for (const auto& m : point_class(y))
        if (in_x[static_cast<std::size_t>(m.chart)]) out.push_back(m.chart);
    std::sort(out.begin(), out.end());
    return out;
}

int AtlasBuilding::common_apartment(const BuildingPoint& x, const BuildingPoint& y) const
{
    auto cc = common_charts(x, y);
    if (cc.empty()) throw GeometryError("no chart contains both points");
    return cc.front();
}

PolyPath AtlasBuilding::geodesic(const BuildingPoint& x, const BuildingPoint& y) const
{
    return geodesic_in(common_apartment(x, y), x, y);
}

PolyPath AtlasBuilding::geodesic_in(int chart, const BuildingPoint& x, const BuildingPoint& y) const
{
    auto px = coords_in(x, chart), py = coords_in(y, chart);
    if (!px || !py) throw GeometryError("chart does not contain both points");
    PolyPath p;
    p.chart = chart;
    p.breakpoints.push_back({chart, *px});
    for (const Q& t : cx_.wall_crossings(*px, *py)) p.breakpoints.push_back({chart, *px + (*py - *px) * t});
    if (!(*px == *py)) p.breakpoints.push_back({chart, *py});
    p.length = datum().length(*py - *px);
    return p;
}

std::vector<Cell> AtlasBuilding::chart_chambers(int k) const
{
    const Chart& ch = charts_[static_cast<std::size_t>(k)];
    Cell start = cx_.project_chamber_to_cell(cx_.fundamental_chamber(), cx_.carrier(ch.center));
    std::vector<Cell> out;
    if (!in_chart(k, start.point)) return out;
    std::set<std::vector<signed char>> seen{start.signs};
    std::deque<Cell> queue{start};
    out.push_back(start);
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (int w : cx_.facet_walls(c)) {
            Vec p = datum().reflect(cx_.walls()[static_cast<std::size_t>(w)], c.point);
            if (!in_chart(k, p)) continue;
            Cell d = cx_.canonical_cell(p);
            if (!seen.insert(d.signs).second) continue;
            out.push_back(d);
            queue.push_back(d);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Vec AtlasBuilding::sector_direction_in(int k) const
{
    if (!center_.at_infinity) throw InputError("the center is a chamber");
    const auto& f = folding(k);
    if (!f) throw GeometryError("chart does not contain the chamber at infinity");
    return f->linear.inverse() * center_.sector.direction;
}

// Validation -----------------------------------------------------------------

ConvexityReport validate_atlas(const AtlasBuilding& B)
{
    ConvexityReport r;
    r.check = "validate_atlas";
    const Complex& cx = B.complex();
    const auto& d = B.datum();
    const int nc = static_cast<int>(B.charts().size());

    const double big_r = std::sqrt(to_double(cx.region_radius2()));
    for (int k = 0; k < nc; ++k) {
        const Chart& c = B.charts()[static_cast<std::size_t>(k)];
        double reach = d.length(c.center) + std::sqrt(to_double(c.radius2));
        if (reach > big_r + 1e-12)
            r.fail("chart_outside_region", Json{{"chart", k}, {"name", c.name}, {"reach", reach}, {"region", big_r}});
    }

    const Cell& F = cx.fundamental_chamber();
    std::vector<Vec> fverts = cx.closure_vertices(F);
    const Q box = coordinate_box(cx);
    for (std::size_t gi = 0; gi < B.gluings().size(); ++gi) {
        const Gluing& g = B.gluings()[gi];
        const std::string name = g.name.empty() ? "gluing " + std::to_string(gi) : g.name;
        if (!(g.map.linear.transpose() * d.gram * g.map.linear == d.gram)) {
            r.fail("gluing_not_isometry", Json{{"gluing", name}});
            continue;
        }
        // An isometry carrying a chamber onto a chamber is an automorphism of the complex.
        std::vector<Vec> img;
        for (const auto& v : fverts) img.push_back(g.map.apply(v));
        Vec bc = g.map.apply(F.point);
        bool ok = cx.in_region(bc);
        if (ok) {
            Cell e = cx.canonical_cell(bc);
            std::vector<Vec> ev = cx.closure_vertices(e);
            std::sort(ev.begin(), ev.end());
            std::sort(img.begin(), img.end());
            ok = e.is_chamber() && ev == img;
        }
        if (!ok) r.fail("gluing_not_type_preserving", Json{{"gluing", name}});

        for (const auto& piece : g.domain)
            for (const auto& h : piece)
                if (cx.wall_index(make_wall(h.normal, h.offset)) < 0)
                    r.fail("domain_not_wall_halfspace",
                           Json{{"gluing", name}, {"normal", to_string(h.normal)}, {"offset", to_string(h.offset)}});

        std::vector<Vec> pts;
        for (const auto& piece : g.domain) {
            std::vector<Vec> cyc = square_cycle(B.rank(), box);
            for (const auto& h : piece) cyc = clip_convex(cyc, h);
            pts.insert(pts.end(), cyc.begin(), cyc.end());
        }
        bool convex = true;
        for (std::size_t a = 0; a < pts.size() && convex; ++a)
            for (std::size_t b = a + 1; b < pts.size() && convex; ++b)
                if (!union_covers(g.domain, pts[a], pts[b])) {
                    convex = false;
                    r.fail("domain_not_convex",
                           Json{{"gluing", name}, {"a", to_string(pts[a])}, {"b", to_string(pts[b])}});
                }
    }
    if (!r.verdict) return r;

    // Cocycle consistency and chamber classes.
    struct ChamberClass {
        BuildingPoint rep;
        std::bitset<kMaxCharts> charts;
    };
    std::map<BuildingPoint, ChamberClass> classes;
    std::size_t points_checked = 0;
    for (int k = 0; k < nc; ++k) {
        std::set<Vec> vertices_done;
        for (const auto& E : B.chart_chambers(k)) {
            std::vector<Vec> pts{E.point};
            for (const auto& v : cx.closure_vertices(E))
                if (B.in_chart(k, v) && vertices_done.insert(v).second) pts.push_back(v);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                std::string conflict;
                auto cls = B.point_class({k, pts[i]}, &conflict);
                ++points_checked;
                if (!conflict.empty()) {
                    r.fail("cocycle", Json{{"point", point_json({k, pts[i]})}, {"detail", conflict}});
                    return r;
                }
                if (i != 0) continue;
                BuildingPoint rep{cls.front().chart, cls.front().x};
                std::bitset<kMaxCharts> mask;
                for (const auto& m : cls) {
                    mask.set(static_cast<std::size_t>(m.chart));
                    if (m.chart < rep.chart) rep = {m.chart, m.x};
                }
                classes.emplace(rep, ChamberClass{rep, mask});
            }
        }
    }
    r.note("cocycle", Json{{"points", points_checked}, {"chamber_classes", classes.size()}});

    std::vector<const ChamberClass*> list;
    for (const auto& [key, c] : classes) list.push_back(&c);
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < list.size(); ++a)
        for (std::size_t b = a + 1; b < list.size(); ++b) {
            ++pairs;
            if ((list[a]->charts & list[b]->charts).none()) {
                r.fail("two_point_axiom", Json{{"a", point_json(list[a]->rep)}, {"b", point_json(list[b]->rep)}});
                return r;
            }
        }
    r.note("two_point_axiom", Json{{"pairs", pairs}});

    std::bitset<kMaxCharts> center_charts;
    for (int k = 0; k < nc; ++k)
        if (B.contains_center(k)) center_charts.set(static_cast<std::size_t>(k));
    for (const auto* c : list)
        if ((c->charts & center_charts).none()) {
            r.fail("not_saturated", Json{{"chamber", point_json(c->rep)}});
            return r;
        }
    r.note("saturated", Json{{"center_charts", center_charts.count()}});
    return r;
}

// Links ------------------------------------------------------------------------

BuildingLink building_link(const AtlasBuilding& B, const BuildingPoint& a)
{
    const Complex& cx = B.complex();
    BuildingLink L;
    L.at = a;
    L.coords.assign(B.charts().size(), std::nullopt);
    auto cls = B.point_class(a);
    int first = cls.front().chart;
    for (const auto& m : cls) {
        L.coords[static_cast<std::size_t>(m.chart)] = m.x;
        first = std::min(first, m.chart);
    }
    const Vec& a0 = *L.coords[static_cast<std::size_t>(first)];

    std::map<BuildingPoint, int> vertex_of;
    auto vertex_key = [&](int k, const Vec& ak, const Vec& e) {
        return B.canonical_point({k, germ_point(cx, ak, e)});
    };

    if (B.rank() == 1) {
        L.link = LinkSpace(B.datum().gram, LinkTopology::zero_sphere);
        for (std::size_t k = 0; k < L.coords.size(); ++k) {
            if (!L.coords[k]) continue;
            const int kc = static_cast<int>(k);
            for (int s : {1, -1}) {
                Vec e{Q(s)};
                auto key = vertex_key(kc, *L.coords[k], e);
                if (vertex_of.count(key)) continue;
                vertex_of[key] = L.link.add_vertex({(s > 0 ? "+" : "-") + std::string("#") + std::to_string(k), kc, e});
            }
        }
        return L;
    }

    if (cx.carrier(a0).is_chamber()) {
        L.link = link_datum_at(cx, a0, first);
        return L;
    }

    L.link = LinkSpace(B.datum().gram, LinkTopology::graph);
    std::set<BuildingPoint> arcs_seen;
    for (std::size_t k = 0; k < L.coords.size(); ++k) {
        if (!L.coords[k]) continue;
        const int kc = static_cast<int>(k);
        const Vec& ak = *L.coords[k];
        LinkSpace lk = link_datum_at(cx, ak, kc);
        std::vector<int> ids;
        for (const auto& v : lk.vertices()) {
            auto key = vertex_key(kc, ak, v.vec);
            auto it = vertex_of.find(key);
            if (it == vertex_of.end())
                it = vertex_of.emplace(key, L.link.add_vertex({v.label + "#" + std::to_string(k), kc, v.vec})).first;
            ids.push_back(it->second);
        }
        for (std::size_t ai = 0; ai < lk.arcs().size(); ++ai) {
            const auto& arc = lk.arcs()[ai];
            Vec mid = lk.vector_of(lk.arc_direction(static_cast<int>(ai), frac(1, 2)));
            Cell e = cx.canonical_cell(germ_point(cx, ak, mid));
            auto key = B.canonical_point({kc, e.point});
            if (!arcs_seen.insert(key).second) continue;
            L.link.add_arc(ids[static_cast<std::size_t>(arc.from)], ids[static_cast<std::size_t>(arc.to)], kc,
                           arc.controls, arc.label + "#" + std::to_string(k));
        }
    }
    return L;
}

std::optional<Direction> locate_in_link(const AtlasBuilding& B, const BuildingLink& L, int chart, const Vec& v)
{
    if (chart < 0 || chart >= static_cast<int>(L.coords.size())) throw InputError("chart id out of range");
    const auto& ak = L.coords[static_cast<std::size_t>(chart)];
    if (!ak || v.is_zero()) return std::nullopt;
    Vec q = germ_point(B.complex(), *ak, v);
    auto cls = B.point_class({chart, q});
    const ClassMember* owner = &cls.front();
    for (const auto& m : cls)
        if (m.chart < owner->chart) owner = &m;
    const auto& ao = L.coords[static_cast<std::size_t>(owner->chart)];
    if (!ao) return std::nullopt;
    return L.link.locate(owner->chart, owner->x - *ao);
}

std::pair<int, Vec> direction_vector(const BuildingLink& L, const Direction& d)
{
    return {L.link.chart_of(d), L.link.vector_of(d)};
}

RetractedLink link_with_retraction(const AtlasBuilding& B, const BuildingPoint& a)
{
    RetractedLink r;
    r.link = building_link(B, a);
    r.image = B.retract(a);
    r.sigma_link = link_datum_at(B.complex(), r.image, B.base_chart());
    return r;
}

Direction retract_direction(const AtlasBuilding& B, const RetractedLink& R, const Direction& d)
{
    auto [k, v] = direction_vector(R.link, d);
    const auto& ak = R.link.coords[static_cast<std::size_t>(k)];
    if (!ak) throw GeometryError("direction chart does not contain the link point");
    Vec img = B.retract({k, germ_point(B.complex(), *ak, v)}) - R.image;
    auto out = R.sigma_link.locate(B.base_chart(), img);
    if (!out) throw GeometryError("retracted direction not found in the apartment link");
    return *out;
}

LinkSubset building_proj_link(const AtlasBuilding& B, const BuildingLink& L)
{
    int k = -1;
    for (std::size_t i = 0; i < L.coords.size() && k < 0; ++i)
        if (L.coords[i]) k = static_cast<int>(i);
    const Vec& ak = *L.coords[static_cast<std::size_t>(k)];
    Cell sigma = B.complex().carrier(ak);
    if (sigma.is_chamber() && B.rank() == 2) return whole_link(L.link);
    auto [m, E] = B.project_center_chamber(k, sigma);
    const auto& am = L.coords[static_cast<std::size_t>(m)];
    if (!am) throw GeometryError("projection chart lost the link point");
    auto d = locate_in_link(B, L, m, E.point - *am);
    if (!d) throw GeometryError("projection chamber not found in the link");
    LinkSubset s;
    if (d->is_vertex()) s.vertices = {d->vertex};
    else s.subarcs = {{d->arc, Q(0), Q(1)}};
    return canonical_subset(L.link, s);
}

// Canned buildings -----------------------------------------------------------

AtlasBuilding thin_building(TypeTag t)
{
    Complex cx(CoxeterDatum::of_type(t));
    Chart sigma{"Sigma", Vec(cx.rank()), cx.region_radius2()};
    Cell C = cx.fundamental_chamber();
    return AtlasBuilding(std::move(cx), {sigma}, {}, 0, BuildingCenter::of_chamber(C));
}

AtlasBuilding tripod_building(TypeTag t, const Wall& h0)
{
    Complex cx(CoxeterDatum::of_type(t));
    if (h0.normal.size() != cx.rank()) throw InputError("tripod wall has the wrong dimension");
    Wall h = make_wall(h0.normal, h0.offset);
    if (cx.wall_index(h) < 0) throw InputError("tripod wall " + to_string(h) + " is not a wall of the complex");
    const Cell& C = cx.fundamental_chamber();
    const Q s = side_sign(C.point, h);
    Domain P{{{h.normal * Q(-s), Q(-h.offset * s)}}};
    Domain N{{{h.normal * s, Q(h.offset * s)}}};
    Vec gc = cx.datum().covector_to_vector(h.normal);
    Vec center = gc * Q(h.offset / dot(h.normal, gc));
    Q r2 = cx.region_radius2() / 4;
    if (cx.datum().norm2(center) > r2) throw InputError("tripod wall lies too far from the origin");
    std::vector<Chart> charts{{"Sigma", center, r2}, {"P+B", center, r2}, {"N+B", center, r2}};
    const AffineMap id = AffineMap::identity(cx.rank());
    std::vector<Gluing> gl{{0, 1, id, P, "P"}, {0, 2, id, N, "N"}, {1, 2, cx.datum().reflection(h), N, "B"}};
    return AtlasBuilding(std::move(cx), std::move(charts), std::move(gl), 0, BuildingCenter::of_chamber(C));
}

AtlasBuilding a2_counterexample_building() { return tripod_building(TypeTag::A2affine, a2_example_data().L1); }

A2Example a2_example_data()
{
    Complex cx(CoxeterDatum::of_type(TypeTag::A2affine));
    A2Example e;
    e.a = Vec(Q(0), Q(0));
    e.C = cx.fundamental_chamber();
    e.D = cx.canonical_cell(Vec(frac(-1, 3), frac(-1, 3)));
    e.D_prime = e.D;
    e.m = Vec(frac(1, 2), frac(1, 2));
    e.m_prime = Vec(frac(-1, 2), frac(-1, 2));
    e.L1 = make_wall(Vec(Q(2), Q(-1)), Q(0));
    return e;
}

AtlasBuilding tree_building(int q, int depth, TreeInfo* info)
{
    if (q < 2 || depth < 1) throw InputError("tree needs branching >= 2 and depth >= 1");
    Complex cx(CoxeterDatum::of_type(TypeTag::A1affine));
    const int rb = depth + 3;
    if (Q(rb * rb) > cx.region_radius2()) throw InputError("tree depth exceeds the modeled region");

    TreeInfo ti;
    ti.q = q;
    ti.depth = depth;
    ti.building_radius = rb;
    ti.parent = {-1};
    ti.node_depth = {0};
    for (std::size_t v = 0; v < ti.parent.size(); ++v) {
        const int dv = ti.node_depth[v];
        if (dv == depth) {
            ti.leaves.push_back(static_cast<int>(v));
            continue;
        }
        const int kids = dv == 0 ? q + 1 : q;
        for (int c = 0; c < kids; ++c) {
            ti.parent.push_back(static_cast<int>(v));
            ti.node_depth.push_back(dv + 1);
        }
    }
    const int nl = static_cast<int>(ti.leaves.size());
    if (nl * (nl - 1) / 2 > static_cast<int>(kMaxCharts)) throw InputError("tree has too many ends");

    // Sigma joins the first leaf to the first leaf of the next root branch.
    int per_branch = 1;
    for (int i = 1; i < depth; ++i) per_branch *= q;
    ti.chart_ends.push_back({0, per_branch});
    for (int i = 0; i < nl; ++i)
        for (int j = i + 1; j < nl; ++j)
            if (!(i == 0 && j == per_branch)) ti.chart_ends.push_back({i, j});

    std::vector<Chart> charts;
    for (const auto& [li, lj] : ti.chart_ends) {
        std::vector<int> up, down;
        for (int v = ti.leaves[static_cast<std::size_t>(li)]; v >= 0; v = ti.parent[static_cast<std::size_t>(v)])
            up.push_back(v);
        for (int v = ti.leaves[static_cast<std::size_t>(lj)]; v >= 0; v = ti.parent[static_cast<std::size_t>(v)])
            down.push_back(v);
        while (up.size() > 1 && down.size() > 1 && up[up.size() - 2] == down[down.size() - 2]) {
            up.pop_back();
            down.pop_back();
        }
        // up ends at the lowest common ancestor; down repeats it.
        down.pop_back();
        std::vector<int> path = up;
        path.insert(path.end(), down.rbegin(), down.rend());
        const int h = ti.node_depth[static_cast<std::size_t>(up.back())];
        ti.chart_nodes.push_back(path);
        ti.chart_offset.push_back(depth - h);
        charts.push_back({"ends " + std::to_string(li) + "-" + std::to_string(lj), Vec(Q(0)), Q((rb - h) * (rb - h))});
    }

    std::vector<Gluing> gluings;
    const int nc = static_cast<int>(charts.size());
    std::vector<int> pos(ti.parent.size(), -1);
    for (int i = 0; i < nc; ++i) {
        const auto& pi = ti.chart_nodes[static_cast<std::size_t>(i)];
        const int oi = ti.chart_offset[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < nc; ++j) {
            const auto& pj = ti.chart_nodes[static_cast<std::size_t>(j)];
            const int oj = ti.chart_offset[static_cast<std::size_t>(j)];
            for (std::size_t t = 0; t < pj.size(); ++t) pos[static_cast<std::size_t>(pj[t])] = static_cast<int>(t);
            std::vector<std::pair<int, int>> common;  // (x in chart i, y in chart j)
            for (std::size_t t = 0; t < pi.size(); ++t)
                if (int u = pos[static_cast<std::size_t>(pi[t])]; u >= 0)
                    common.push_back({static_cast<int>(t) - oi, u - oj});
            for (int v : pj) pos[static_cast<std::size_t>(v)] = -1;
            if (common.size() < 2) continue;
            const int sg = (common[1].second - common[0].second) * (common[1].first - common[0].first) > 0 ? 1 : -1;
            const int shift = common[0].second - sg * common[0].first;
            const int lo = common.front().first, hi = common.back().first;
            std::vector<Halfspace> piece;
            if (hi != oi) piece.push_back({Vec(Q(1)), Q(hi)});
            if (lo != -oi) piece.push_back({Vec(Q(-1)), Q(-lo)});
            gluings.push_back({i, j, AffineMap{mat1(Q(sg)), Vec(Q(shift))}, Domain{piece},
                               "charts " + std::to_string(i) + "-" + std::to_string(j)});
        }
    }
    if (info) *info = ti;
    Cell C = cx.fundamental_chamber();
    return AtlasBuilding(std::move(cx), std::move(charts), std::move(gluings), 0, BuildingCenter::of_chamber(C));
}

} // namespace cvxbuild
