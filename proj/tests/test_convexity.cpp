#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cvxbuild/convexity.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

using namespace cvxbuild;

namespace {

Vec v2(long a, long b, long d = 1) { return Vec(frac(a, d), frac(b, d)); }

Polytope rect(long x0, long x1, long y0, long y1) { return Polytope::hull(2, {v2(x0, y0), v2(x1, y0), v2(x1, y1), v2(x0, y1)}); }

BuildingCenter center_of(const Complex& cx) { return BuildingCenter::of_chamber(cx.fundamental_chamber()); }

// Random convex polygon through the barycenter of the fundamental chamber:
// either a hull of random points or a slab intersection bounded by walls.
Polytope random_polygon(const Complex& cx, std::mt19937& rng)
{
    if (rng() % 2 == 0) {
        const Vec c = cx.fundamental_chamber().point;
        std::map<Vec, std::vector<Q>> levels;
        for (const auto& w : cx.walls()) levels[w.normal].push_back(w.offset);
        Polytope P;
        for (auto& [n, ls] : levels) {
            std::sort(ls.begin(), ls.end());
            Q at = dot(n, c);
            std::vector<Q> below, above;
            for (const Q& l : ls) (l < at ? below : above).push_back(l);
            std::uniform_int_distribution<std::size_t> pb(0, std::min<std::size_t>(below.size(), 4) - 1),
                pa(0, std::min<std::size_t>(above.size(), 4) - 1);
            P.halfspaces.push_back({n, above[pa(rng)], 0});
            P.halfspaces.push_back({-n, Q(-below[below.size() - 1 - pb(rng)]), 0});
        }
        return P;
    }
    std::uniform_int_distribution<long> u(-12, 12);
    std::uniform_int_distribution<int> cnt(2, 6);
    const Vec c = cx.fundamental_chamber().point;
    std::vector<Vec> pts{c};
    for (int i = cnt(rng); i > 0; --i) pts.push_back(c + v2(u(rng), u(rng), 4));
    return Polytope::hull(2, pts);
}

// Gram-orthonormal frame columns (double).
struct Onb {
    double e[2][2];
    explicit Onb(const Mat& g)
    {
        double g00 = to_double(g(0, 0)), g01 = to_double(g(0, 1)), g11 = to_double(g(1, 1));
        double a = 1 / std::sqrt(g00);
        double v0 = -g01 / g00, v1 = 1;
        double b = 1 / std::sqrt(g00 * v0 * v0 + 2 * g01 * v0 * v1 + g11 * v1 * v1);
        e[0][0] = a, e[1][0] = 0, e[0][1] = v0 * b, e[1][1] = v1 * b;
    }
    std::array<double, 2> dir(double th) const
    {
        return {e[0][0] * std::cos(th) + e[0][1] * std::sin(th), e[1][0] * std::cos(th) + e[1][1] * std::sin(th)};
    }
};

double conorm(const CoxeterDatum& d, const Vec& c) { return std::sqrt(to_double(dot(c, d.covector_to_vector(c)))); }

// Angular search for the normal-condition direction at a: inside T_A, within
// pi/2 of every direction of T_A, on the center side of every wall through a.
bool normal_oracle(const Complex& cx, const Polytope& A, const Vec& a, double tau)
{
    const auto& d = cx.datum();
    const double g00 = to_double(d.gram(0, 0)), g01 = to_double(d.gram(0, 1)), g11 = to_double(d.gram(1, 1));
    Onb f(d.gram);
    // covector constraints kappa . n <= tau |kappa| (normalized, doubles)
    std::vector<std::array<double, 3>> act, side;
    for (int i : A.active(a)) {
        const Vec& c = A.halfspaces[static_cast<std::size_t>(i)].normal;
        act.push_back({to_double(c[0]), to_double(c[1]), conorm(d, c)});
    }
    for (int w : cx.walls_through(a)) {
        const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
        int s = -center_side(center_of(cx), h);
        side.push_back({s * to_double(h.normal[0]), s * to_double(h.normal[1]), conorm(d, h.normal)});
    }
    auto pair = [](const std::array<double, 3>& c, const std::array<double, 2>& n) { return c[0] * n[0] + c[1] * n[1]; };
    std::vector<std::array<double, 2>> tangents;
    auto in_ta = [&](const std::array<double, 2>& t) {
        for (const auto& c : act)
            if (pair(c, t) > 1e-12 * c[2]) return false;
        return true;
    };
    for (int j = 0; j < 720; ++j) {
        auto t = f.dir(2 * std::numbers::pi * j / 720);
        if (in_ta(t)) tangents.push_back(t);
    }
    // exact boundary rays of T_A
    for (const auto& c : act)
        for (int s : {1, -1}) {
            double t0 = s * c[1], t1 = -s * c[0];
            double n = std::sqrt(g00 * t0 * t0 + 2 * g01 * t0 * t1 + g11 * t1 * t1);
            std::array<double, 2> t{t0 / n, t1 / n};
            if (in_ta(t)) tangents.push_back(t);
        }
    for (int j = 0; j < 2880; ++j) {
        auto n = f.dir(2 * std::numbers::pi * j / 2880);
        bool ok = true;
        for (const auto& c : act)
            if (pair(c, n) > tau * c[2]) ok = false;
        for (const auto& c : side)
            if (pair(c, n) > tau * c[2]) ok = false;
        if (!ok) continue;
        for (const auto& t : tangents) {
            double in = g00 * n[0] * t[0] + g01 * (n[0] * t[1] + n[1] * t[0]) + g11 * n[1] * t[1];
            if (in < -tau) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

bool has_witness_at(const ConvexityReport& r, const std::string& kind, const Vec& a)
{
    for (const auto& w : r.witnesses)
        if (w.kind == kind && w.data.value("at", "") == to_string(a)) return true;
    return false;
}

} // namespace

TEST_CASE("polytope basics")
{
    Complex cx(CoxeterDatum::of_type(TypeTag::C2affine));
    Polytope sq = rect(0, 2, 0, 1);
    CHECK(sq.contains(v2(1, 1, 2)));
    CHECK_FALSE(sq.contains(v2(3, 0)));
    auto V = polytope_vertices(cx, sq);
    CHECK(V.size() == 4);
    CHECK(polytope_dimension(cx, sq) == 2);
    CHECK(polytope_dimension(cx, Polytope::hull(2, {v2(0, 0), v2(1, 1), v2(2, 2)})) == 1);
    CHECK(polytope_dimension(cx, Polytope::hull(2, {v2(1, 0)})) == 0);

    // nearest point against dense boundary sampling
    std::mt19937 rng(5);
    std::uniform_int_distribution<long> u(-40, 40);
    for (int i = 0; i < 50; ++i) {
        Vec x = v2(u(rng), u(rng), 10);
        double exact = std::sqrt(to_double(distance2_to(cx, sq, x)));
        double best = 1e9;
        if (sq.contains(x)) best = 0;
        for (int k = 0; k <= 4000; ++k) {
            double s = k / 4000.0;
            double pts[4][2] = {{2 * s, 0}, {2, s}, {2 * s, 1}, {0, s}};
            for (auto& p : pts)
                best = std::min(best, std::hypot(to_double(x[0]) - p[0], to_double(x[1]) - p[1]));
        }
        CHECK(exact == doctest::Approx(best).epsilon(1e-3));
    }

    // pull back then push forward
    AffineMap f = cx.datum().reflection(make_wall(v2(1, -1), 0));
    Polytope img = sq.transformed(f);
    CHECK(img.contains(v2(0, 2)));
    CHECK(img.pulled_back(f).contains(v2(2, 0)));
    CHECK_FALSE(img.pulled_back(f).contains(v2(0, 2)));
    CHECK(img.transformed(f).contains(v2(2, 1)));
}

TEST_CASE("normal condition")
{
    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    const auto C = center_of(c2);

    SUBCASE("closed chamber")
    {
        Polytope A{c2.closure_halfspaces(c2.fundamental_chamber())};
        CHECK(check_normal_condition(c2, A, C).verdict);
        CHECK(check_weak_normal_condition(c2, A, C, WallMode::all_walls).verdict);
    }
    SUBCASE("rectangle around C")
    {
        Polytope R = rect(-1, 2, -1, 1);
        auto r = check_normal_condition(c2, R, C);
        CHECK(r.verdict);
        for (const Vec& a : boundary_strata(c2, R)) CHECK(normal_oracle(c2, R, a, 1e-2));
    }
    SUBCASE("A2 segment")
    {
        Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
        auto ex = a2_example_data();
        Polytope S = Polytope::hull(2, {ex.m_prime, ex.m});
        auto r = check_normal_condition(a2, S, BuildingCenter::of_chamber(ex.C));
        CHECK_FALSE(r.verdict);
        CHECK(has_witness_at(r, "no_normal_direction", ex.a));
        // the far endpoints do admit a normal direction
        CHECK(has_witness_at(r, "normal_direction", ex.m));
        CHECK(has_witness_at(r, "normal_direction", ex.m_prime));
        for (const auto& w : r.witnesses) {
            if (w.kind == "strata") continue;
            Vec at = ex.a;
            for (const Vec& s : boundary_strata(a2, S))
                if (to_string(s) == w.data["at"]) at = s;
            CHECK(normal_oracle(a2, S, at, 1e-2) == (w.kind == "normal_direction"));
        }
    }
    SUBCASE("random polygons against the angular oracle")
    {
        std::mt19937 rng(11);
        int pass = 0, fail = 0;
        for (TypeTag t : {TypeTag::C2affine, TypeTag::A2affine, TypeTag::A1xA1}) {
            Complex cx(CoxeterDatum::of_type(t));
            for (int i = 0; i < 12; ++i) {
                Polytope A = random_polygon(cx, rng);
                auto r = check_normal_condition(cx, A, center_of(cx));
                (r.verdict ? pass : fail)++;
                for (const auto& w : r.witnesses) {
                    if (w.kind == "strata") continue;
                    for (const Vec& s : boundary_strata(cx, A))
                        if (to_string(s) == w.data["at"])
                            CHECK(normal_oracle(cx, A, s, 1e-2) == (w.kind == "normal_direction"));
                }
                // the normal condition implies the weak one
                if (r.verdict) CHECK(check_weak_normal_condition(cx, A, center_of(cx), WallMode::all_walls).verdict);
            }
        }
        CHECK(fail > 0);
        MESSAGE("normal condition holds on " << pass << " random polygons");
    }
    SUBCASE("link form at the strata")
    {
        Polytope R = rect(-1, 2, -1, 1);
        PolyhedralSet RS{{R}};
        for (const Vec& a : boundary_strata(c2, R)) {
            LinkSpace link = link_datum_at(c2, a);
            auto s = link_of_set(c2, RS, a, link);
            auto proj = proj_link_chamber(c2, a, c2.fundamental_chamber(), link);
            CHECK(link_normal_condition(s, proj, link).verdict);
        }
    }
}

TEST_CASE("weak normal condition")
{
    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    auto ex = a2_example_data();
    Polytope S = Polytope::hull(2, {ex.m_prime, ex.m});
    for (WallMode m : {WallMode::all_walls, WallMode::two_closest}) {
        auto r = check_weak_normal_condition(a2, S, BuildingCenter::of_chamber(ex.C), m);
        CHECK_FALSE(r.verdict);
        CHECK(has_witness_at(r, "no_outward_normal", ex.a));
        CHECK(check_weak_normal_condition(c2, rect(-1, 2, -1, 1), center_of(c2), m).verdict);
    }
    // a set beyond a wall, with its face on the wall, fails
    Polytope beyond = rect(-1, 2, 1, 2);
    CHECK_FALSE(check_weak_normal_condition(c2, beyond, center_of(c2), WallMode::all_walls).verdict);

    // sector centers are not supported in two_closest mode
    AtlasBuilding T = thin_building(TypeTag::C2affine);
    auto sector = BuildingCenter::of_sector({v2(0, 0), v2(3, 1)});
    CHECK_THROWS_AS(check_weak_normal_condition(c2, S, sector, WallMode::two_closest), InputError);

    // both modes agree on random polygons meeting C
    std::mt19937 rng(23);
    int agree = 0, holds = 0;
    for (TypeTag t : {TypeTag::C2affine, TypeTag::A2affine, TypeTag::G2affine, TypeTag::A1xA1}) {
        Complex cx(CoxeterDatum::of_type(t));
        for (int i = 0; i < 15; ++i) {
            Polytope A = random_polygon(cx, rng);
            bool all = check_weak_normal_condition(cx, A, center_of(cx), WallMode::all_walls).verdict;
            bool two = check_weak_normal_condition(cx, A, center_of(cx), WallMode::two_closest).verdict;
            CHECK(all == two);
            agree += all == two;
            holds += all;
        }
    }
    CHECK(agree == 60);
    MESSAGE("weak normal condition holds on " << holds << " of 60 random polygons");
}

TEST_CASE("cone points and local convexity in an apartment")
{
    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    PolyhedralSet R{{rect(-1, 2, -1, 1)}};
    PolyhedralSet L{{rect(0, 2, 0, 1), rect(0, 1, 0, 2)}};
    for (const Vec& a : {v2(-1, -1), v2(2, 0), v2(1, 1), v2(0, 0)}) {
        CHECK(is_cone_point(c2, R, a, frac(1, 4)));
        CHECK(is_locally_convex_at(c2, R, a).verdict);
    }
    CHECK(is_cone_point(c2, L, v2(1, 1), frac(1, 4)));
    CHECK_FALSE(is_locally_convex_at(c2, L, v2(1, 1)).verdict);
    CHECK(is_locally_convex_at(c2, L, v2(2, 1)).verdict);
    CHECK_THROWS_AS(is_locally_convex_at(c2, L, v2(3, 3)), InputError);
    // a segment from a point outside the set crosses a far piece
    PolyhedralSet two{{rect(0, 1, 0, 1), rect(2, 3, 0, 1)}};
    CHECK(is_cone_point(c2, two, v2(1, 0), frac(1, 2)));
    CHECK_FALSE(is_cone_point(c2, two, v2(1, 0), Q(4)));
}

TEST_CASE("preimage in tripods")
{
    std::mt19937 rng(3);
    std::uniform_int_distribution<long> u(-30, 30);
    struct Case {
        TypeTag t;
        Wall h;
    };
    for (const Case& c : {Case{TypeTag::A1xA1, make_wall(v2(1, 0), 0)}, Case{TypeTag::C2affine, make_wall(v2(1, -1), 0)},
                          Case{TypeTag::A2affine, make_wall(v2(2, -1), 0)}}) {
        AtlasBuilding B = tripod_building(c.t, c.h);
        Polytope A = Polytope::hull(2, {v2(-3, -2, 2), v2(3, -1, 2), v2(1, 3, 2), v2(-2, 2, 2)});
        BuildingSubset S = preimage(B, A);
        int inside = 0;
        for (int i = 0; i < 300; ++i) {
            int k = static_cast<int>(rng() % 3);
            Vec x = v2(u(rng), u(rng), 8);
            if (!B.in_chart(k, x)) continue;
            bool in = A.contains(B.retract({k, x}));
            CHECK(subset_contains(B, S, {k, x}) == in);
            inside += in;
        }
        CHECK(inside > 0);
    }
}

TEST_CASE("A2 counterexample")
{
    AtlasBuilding B = a2_counterexample_building();
    auto ex = a2_example_data();
    Polytope A = Polytope::hull(2, {ex.m_prime, ex.m});
    BuildingSubset S = preimage(B, A);
    BuildingPoint b{0, v2(-1, -1, 4)}, bp{1, v2(-1, -1, 4)};
    CHECK(subset_contains(B, S, b));
    CHECK(subset_contains(B, S, bp));

    // local convexity fails at a: two germs pi/3 apart
    auto lr = is_locally_convex_at(B, S, {0, ex.a});
    CHECK_FALSE(lr.verdict);
    const auto* w = lr.first("escaping_geodesic");
    REQUIRE(w != nullptr);
    CHECK(w->data["distance"].get<double>() == doctest::Approx(std::numbers::pi / 3));
    CHECK(is_locally_convex_at(B, S, b).verdict);

    // the geodesic from b to b' leaves the preimage
    GlobalOptions opt;
    opt.samples = 50;
    opt.seeded_pairs = {{b, bp}};
    auto gr = verify_global_convexity(B, S, opt);
    CHECK_FALSE(gr.verdict);
    const auto* g = gr.first("geodesic_leaves_set");
    REQUIRE(g != nullptr);
    CHECK(g->data["point"]["chart"] == 2);

    // the length metric goes through a
    PolyPath p = length_metric_path(B, S, b, bp);
    CHECK(p.length == doctest::Approx(2 * B.datum().length(v2(1, 1, 4))));
    CHECK(B.geodesic(b, bp).length < p.length - 0.1);

    // d_A o rho o gamma comes back to zero
    auto ar = verify_ascending_propagation(B, A, b, bp, 64);
    CHECK_FALSE(ar.verdict);
    REQUIRE(ar.first("not_ascending") != nullptr);
}

TEST_CASE("length metric in an apartment")
{
    AtlasBuilding T = thin_building(TypeTag::C2affine);
    PolyhedralSet L{{rect(0, 4, 0, 1), rect(0, 1, 0, 4)}};
    BuildingSubset S = base_subset(T, L);
    BuildingPoint x{0, v2(7, 1, 2)}, y{0, v2(1, 7, 2)};
    auto p = length_metric_path(T, S, x, y);
    // via the reflex corner (1, 1)
    double oracle = 2 * std::hypot(2.5, 0.5);
    CHECK(p.length == doctest::Approx(oracle));
    CHECK(p.breakpoints.size() == 3);
    BuildingPoint z{0, v2(1, 1, 2)};
    CHECK(length_metric_path(T, S, x, z).length == doctest::Approx(std::hypot(3.0, 0.0)));
    PolyhedralSet apart{{rect(0, 1, 0, 1), rect(2, 3, 0, 1)}};
    auto q = length_metric_path(T, base_subset(T, apart), {0, v2(0, 0)}, {0, v2(3, 1)});
    CHECK(q.length == kInfinity);
}

TEST_CASE("thickening")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    const auto& d = a2.datum();
    // halfplane: shifted facet only
    Polytope H{{{v2(2, -1), Q(0), 0}}};
    Polytope Ht = thicken(a2, H, frac(1, 2));
    REQUIRE(Ht.halfspaces.size() == 1);
    CHECK(to_double(Ht.halfspaces[0].offset) == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-6));
    CHECK(to_double(Ht.halfspaces[0].offset) >= 0.5 * std::sqrt(2.0));

    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    Polytope R = Polytope::hull(2, {v2(-1, -1), v2(2, -1), v2(2, 1), v2(0, 2)});
    auto RV = polytope_vertices(c2, R);
    for (Q eps : {frac(1, 10), frac(1, 2), Q(1)}) {
        Polytope T = thicken(c2, R, eps);
        const double e = to_double(eps);
        // every vertex of the approximation is between eps and eps (1 + 1/32) from R
        for (const Vec& v : polytope_vertices(c2, T)) {
            double dist = std::sqrt(to_double(distance2_to(c2, R, v)));
            CHECK(dist >= e - 1e-9);
            CHECK(dist <= e * (1 + 1.0 / 32));
        }
        // points at distance slightly below eps are inside
        for (std::size_t i = 0; i < RV.size(); ++i)
            for (int j = 0; j < 64; ++j) {
                double th = 2 * std::numbers::pi * j / 64;
                Vec p = RV[i] + Vec(from_double(0.999 * e * std::cos(th)), from_double(0.999 * e * std::sin(th)));
                CHECK(T.contains(p));
            }
        CHECK(check_thickened_weak_normal(c2, rect(-1, 2, -1, 1), eps, center_of(c2)).verdict);
    }
    (void)d;

    // the A2 segment stays bad after thickening
    auto ex = a2_example_data();
    Polytope S = Polytope::hull(2, {ex.m_prime, ex.m});
    CHECK_FALSE(check_thickened_weak_normal(a2, S, frac(1, 10), BuildingCenter::of_chamber(ex.C)).verdict);

    // weak normal condition survives thickening on random polygons
    std::mt19937 rng(29);
    int tested = 0;
    for (TypeTag t : {TypeTag::C2affine, TypeTag::A2affine, TypeTag::G2affine}) {
        Complex cx(CoxeterDatum::of_type(t));
        for (int i = 0; i < 40 && tested < 30; ++i) {
            Polytope A = random_polygon(cx, rng);
            if (!check_weak_normal_condition(cx, A, center_of(cx), WallMode::all_walls).verdict) continue;
            ++tested;
            for (Q eps : {frac(1, 10), frac(1, 2), Q(1)})
                CHECK(check_thickened_weak_normal(cx, A, eps, center_of(cx)).verdict);
        }
    }
    MESSAGE("thickened " << tested << " weak-normal polygons");
}

TEST_CASE("ascending geodesics")
{
    AtlasBuilding T = thin_building(TypeTag::C2affine);
    Polytope A = rect(0, 1, 0, 1);
    // away from A: ascending; toward A: descending
    CHECK(is_ascending_at(T, A, {0, v2(2, 0)}, {0, v2(4, 1)}, frac(1, 3)).verdict);
    CHECK_FALSE(is_ascending_at(T, A, {0, v2(4, 1)}, {0, v2(2, 0)}, frac(1, 3)).verdict);
    CHECK_THROWS_AS(is_ascending_at(T, A, {0, v2(0, 0)}, {0, v2(1, 1)}, frac(1, 2)), GeometryError);

    // finite-difference oracle for the sign of the derivative
    std::mt19937 rng(41);
    std::uniform_int_distribution<long> u(-24, 24);
    for (int i = 0; i < 40; ++i) {
        Vec x = v2(u(rng), u(rng), 4), y = v2(u(rng), u(rng), 4);
        if (x == y) continue;
        Q t = frac(1, 2);
        Vec p = x + (y - x) * t;
        if (A.contains(p)) continue;
        auto r = is_ascending_at(T, A, {0, x}, {0, y}, t);
        const double h = 1e-6;
        auto dist = [&](double s) {
            Vec z = x + (y - x) * from_double(s);
            return std::sqrt(to_double(distance2_to(T.complex(), A, z)));
        };
        double deriv = (dist(0.5 + h) - dist(0.5 - h)) / (2 * h);
        if (std::abs(deriv) > 1e-4) CHECK(r.verdict == (deriv > 0));
    }

    // propagation in a tripod for a weak-normal set
    AtlasBuilding B = tripod_building(TypeTag::C2affine, make_wall(v2(1, -1), 0));
    Polytope R = rect(-1, 2, -1, 1);
    REQUIRE(check_weak_normal_condition(B.complex(), R, B.center(), WallMode::all_walls).verdict);
    BuildingSubset S = preimage(B, R);
    std::uniform_int_distribution<long> w(-40, 40);
    int exits = 0;
    for (int i = 0; i < 40; ++i) {
        int k = static_cast<int>(rng() % 3);
        Vec x = v2(w(rng), w(rng), 16);
        if (!B.in_chart(k, x) || !subset_contains(B, S, {k, x})) continue;
        int j = static_cast<int>(rng() % 3);
        Vec y = v2(w(rng), w(rng), 8);
        if (!B.in_chart(j, y) || x == y) continue;
        auto r = verify_ascending_propagation(B, R, {k, x}, {j, y}, 32);
        CHECK(r.verdict);
        exits += r.first("exit") != nullptr;
    }
    CHECK(exits > 0);
}

TEST_CASE("global convexity")
{
    AtlasBuilding B = tripod_building(TypeTag::C2affine, make_wall(v2(1, -1), 0));
    Polytope R = rect(-1, 2, -1, 1);
    GlobalOptions opt;
    opt.samples = 150;
    auto r = verify_global_convexity(B, preimage(B, R), opt);
    CHECK(r.verdict);
    auto r2 = verify_global_convexity(B, preimage(B, R), opt);
    CHECK(r.to_json().dump() == r2.to_json().dump());

    AtlasBuilding T = thin_building(TypeTag::A2affine);
    PolyhedralSet L{{rect(0, 2, 0, 1), rect(0, 1, 0, 2)}};
    CHECK_FALSE(verify_global_convexity(T, base_subset(T, L), opt).verdict);
}

TEST_CASE("key halfspace inclusion")
{
    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    Polytope R = rect(-1, 2, -1, 1);
    // closest walls of each class around C, with H+ the side away from C
    for (const Wall& h : {make_wall(v2(1, 0), 1), make_wall(v2(1, 0), 0), make_wall(v2(0, 1), 0),
                          make_wall(v2(1, 1), 1), make_wall(v2(1, -1), 0), make_wall(v2(1, -1), 1)}) {
        int side = -side_sign(c2.fundamental_chamber().point, h);
        auto r = key_halfspace_inclusion(c2, R, h, side);
        CHECK(r.verdict);
    }
    // a triangle opening into H+: no prism over H n A, and the precondition fails
    Polytope tri = Polytope::hull(2, {v2(0, 0), v2(2, 2), v2(2, -2)});
    auto r = key_halfspace_inclusion(c2, tri, make_wall(v2(1, 0), 1), 1);
    CHECK_FALSE(r.verdict);
    CHECK(r.first("precondition_failed") != nullptr);
    // A inside H+
    CHECK(key_halfspace_inclusion(c2, rect(2, 3, 0, 1), make_wall(v2(1, 0), 1), 1).first("precondition_failed") != nullptr);

    // the inclusion on random polygons meeting C
    std::mt19937 rng(7);
    int tested = 0;
    for (TypeTag t : {TypeTag::C2affine, TypeTag::A2affine, TypeTag::G2affine}) {
        Complex cx(CoxeterDatum::of_type(t));
        for (int i = 0; i < 40; ++i) {
            Polytope A = random_polygon(cx, rng);
            for (int w : cx.facet_walls(cx.fundamental_chamber())) {
                const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
                int side = -side_sign(cx.fundamental_chamber().point, h);
                auto kr = key_halfspace_inclusion(cx, A, h, side);
                if (kr.first("precondition_failed")) continue;
                ++tested;
                CHECK(kr.verdict);
            }
        }
    }
    CHECK(tested >= 20);
}
