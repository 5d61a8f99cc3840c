#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cvxbuild/link.hpp"

#include <cmath>
#include <random>

using namespace cvxbuild;

namespace {

Vec v2(long a, long b, long d = 1) { return Vec(frac(a, d), frac(b, d)); }

// Oracle angle straight from the Gram form: acos of the normalized inner product.
double gram_acos(const Mat& g, const Vec& u, const Vec& v)
{
    double uv = to_double(dot(u, g * v));
    double uu = to_double(dot(u, g * u)), vv = to_double(dot(v, g * v));
    return std::acos(std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0));
}

} // namespace

TEST_CASE("links of Sigma")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    LinkSpace l = link_datum_at(a2, v2(0, 0));
    CHECK(l.topology() == LinkTopology::circle);
    REQUIRE(l.arcs().size() == 6);
    for (const auto& arc : l.arcs()) {
        double oracle = gram_acos(a2.datum().gram, arc.controls.front(), arc.controls.back());
        CHECK(arc.length == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(arc.length == doctest::Approx(M_PI / 3).epsilon(1e-12));
    }
    CHECK(l.total_length() == doctest::Approx(2 * M_PI).epsilon(1e-12));
    CHECK(l.girth_ok());

    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    LinkSpace lc = link_datum_at(c2, v2(0, 0));
    CHECK(lc.arcs().size() == 8);
    CHECK(lc.total_length() == doctest::Approx(2 * M_PI));
    Complex g2(CoxeterDatum::of_type(TypeTag::G2affine));
    LinkSpace lg = link_datum_at(g2, v2(0, 0));
    CHECK(lg.arcs().size() == 12);
    for (const auto& arc : lg.arcs()) CHECK(arc.length == doctest::Approx(M_PI / 6));
    // Non-special vertex of G2 (3/2, 1): angles pi/2, pi/3, pi/6 around it sum to 2 pi.
    LinkSpace lg2 = link_datum_at(g2, v2(3, 2, 2));
    CHECK(lg2.total_length() == doctest::Approx(2 * M_PI));

    LinkSpace open = link_datum_at(a2, v2(1, 1, 3));
    CHECK(open.arcs().size() == 1);
    CHECK(open.total_length() == doctest::Approx(2 * M_PI));
    LinkSpace panel = link_datum_at(a2, v2(1, 1, 2));
    REQUIRE(panel.arcs().size() == 2);
    CHECK(panel.arcs()[0].length == doctest::Approx(M_PI));
    CHECK(panel.arcs()[1].length == doctest::Approx(M_PI));

    Complex a1(CoxeterDatum::of_type(TypeTag::A1affine));
    LinkSpace z = link_datum_at(a1, Vec(Q(0)));
    CHECK(z.topology() == LinkTopology::zero_sphere);
    CHECK(z.vertices().size() == 2);
    CHECK(z.distance(z.vertex_direction(0), z.vertex_direction(1)) == doctest::Approx(M_PI));
}

TEST_CASE("direction_of_segment")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    const auto& d = a2.datum();
    Vec a = v2(0, 0);
    LinkSpace l = link_datum_at(a2, a);
    // (1, 2) lies on the wall 2x1 - x2 = 0.
    CHECK(direction_of_segment(a, v2(1, 2), l).is_vertex());
    Direction db = direction_of_segment(a, v2(1, 1, 3), l);
    CHECK(!db.is_vertex());
    // Barycenter direction: pi/6 to both bounding wall directions.
    const auto& arc = l.arcs()[static_cast<std::size_t>(db.arc)];
    Vec dir = v2(1, 1, 3);
    CHECK(gram_acos(d.gram, dir, arc.controls.front()) == doctest::Approx(M_PI / 6));
    CHECK(gram_acos(d.gram, dir, arc.controls.back()) == doctest::Approx(M_PI / 6));
    CHECK(l.position(db.arc, db.t) == doctest::Approx(M_PI / 6));
    CHECK_THROWS_AS(direction_of_segment(a, a, l), GeometryError);
}

TEST_CASE("link_distance")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    Vec a = v2(0, 0);
    LinkSpace l = link_datum_at(a2, a);
    Direction x = direction_of_segment(a, v2(1, 1, 3), l);
    CHECK(l.distance(x, x) == 0);
    // The chamber two steps around: barycenter (-1/3, 1/3) of the chamber across
    // from C over the vertex's other walls.
    std::vector<Cell> around = a2.chambers_at(a2.carrier(a));
    REQUIRE(around.size() == 6);
    int found = 0;
    for (const auto& E : around) {
        Direction y = direction_of_segment(a, E.point, l);
        double oracle = gram_acos(a2.datum().gram, v2(1, 1, 3), E.point);
        CHECK(l.distance(x, y) == doctest::Approx(oracle).epsilon(1e-12));
        if (std::abs(oracle - 2 * M_PI / 3) < 1e-9) ++found;
    }
    CHECK(found == 2);

    LinkSpace circ = unit_circle();
    Direction e = circ.vertex_direction(0);
    Direction anti = circ.arc_direction(0, frac(1, 2));
    CHECK(circ.distance(e, anti) == doctest::Approx(M_PI));
}

TEST_CASE("link distance is a metric")
{
    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    LinkSpace l = link_datum_at(c2, v2(0, 0));
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> arc(0, static_cast<int>(l.arcs().size()) - 1);
    std::uniform_int_distribution<int> tt(0, 16);
    auto pick = [&] { return l.arc_direction(arc(rng), frac(tt(rng), 16)); };
    for (int i = 0; i < 300; ++i) {
        Direction p = pick(), q = pick(), r = pick();
        CHECK(l.distance(p, q) == doctest::Approx(l.distance(q, p)).epsilon(1e-12));
        CHECK(l.distance(p, r) <= l.distance(p, q) + l.distance(q, r) + 1e-12);
        CHECK(l.distance(p, q) <= M_PI + 1e-12);
    }
}

TEST_CASE("angles agree with link distance")
{
    Complex g2(CoxeterDatum::of_type(TypeTag::G2affine));
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> c(-9, 9);
    for (Vec a : {v2(0, 0), v2(3, 2, 2), v2(1, 1, 2), v2(5, 3, 4)}) {
        LinkSpace l = link_datum_at(g2, a);
        for (int i = 0; i < 60; ++i) {
            Vec b = a + v2(c(rng), c(rng), 5), cc = a + v2(c(rng), c(rng), 5);
            if (b == a || cc == a) continue;
            double ang = angle_between_segments(g2.datum(), a, b, cc);
            double ld = l.distance(direction_of_segment(a, b, l), direction_of_segment(a, cc, l));
            if (ang < M_PI - 1e-9) CHECK(ld == doctest::Approx(ang).epsilon(1e-11));
        }
    }
    CHECK(angle_between_segments(g2.datum(), v2(0, 0), v2(1, 0), v2(1, 0)) == 0);
    CHECK(angle_between_segments(g2.datum(), v2(0, 0), v2(1, 0), v2(-2, 0)) == doctest::Approx(M_PI));
}

TEST_CASE("pi-convexity of closed arcs on the circle")
{
    LinkSpace c = unit_circle();
    CHECK(is_pi_convex(whole_link(c), c).verdict);
    // Exhaustive grid of closed arcs starting at several points.
    for (int s0 = 0; s0 < 8; ++s0)
        for (int len = 0; len <= 64; ++len) {
            Q t0 = frac(s0, 64);
            Q t1 = t0 + frac(len, 64);
            LinkSubset s;
            if (t1 <= 1) {
                s.subarcs = {{0, t0, t1}};
            } else {
                s.subarcs = {{0, t0, Q(1)}, {0, Q(0), Q(t1 - 1)}};
            }
            s = canonical_subset(c, s);
            // Arc length from the independent angle of the end vectors.
            double L;
            if (len == 64) {
                L = 2 * M_PI;
            } else {
                Vec u = c.vector_of(c.arc_direction(0, t0));
                Vec w = c.vector_of(c.arc_direction(0, t1 <= 1 ? t1 : Q(t1 - 1)));
                double a0 = std::atan2(to_double(u[1]), to_double(u[0]));
                double a1 = std::atan2(to_double(w[1]), to_double(w[0]));
                L = a1 - a0;
                while (L < -1e-12) L += 2 * M_PI;
            }
            bool expected = L <= M_PI + 1e-12 || len == 64;
            CHECK_MESSAGE(is_pi_convex(s, c).verdict == expected, "t0=" << to_string(t0) << " len=" << len);
        }
}

TEST_CASE("circle minus an open arc of length pi/2")
{
    LinkSpace c = unit_circle();
    // Removed arc: open quarter between t = 0 and t = 1/4.
    LinkSubset s = canonical_subset(c, {{{0, frac(1, 4), Q(1)}}, {}});
    auto r = is_pi_convex(s, c);
    CHECK(!r.verdict);
    const Witness* w = r.first("escaping_geodesic");
    REQUIRE(w);
    CHECK(w->data["distance"].get<double>() == doctest::Approx(M_PI / 2));
    // The witness pair is the two boundary directions of S.
    const Json& f = w->data["from"];
    const Json& t = w->data["to"];
    bool base_first = f.contains("vertex");
    CHECK((base_first ? f : t)["vertex"] == "base");
    CHECK((base_first ? t : f)["t"] == "1/4");
    // Locally convex at every stratum: both endpoints and an interior point.
    for (auto d : {c.vertex_direction(0), c.arc_direction(0, frac(1, 4)), c.arc_direction(0, frac(1, 2))})
        CHECK(is_locally_convex_in_link(s, c, d).verdict);
    CHECK(!is_locally_convex_in_link(s, c, c.arc_direction(0, frac(1, 8))).verdict);
    CHECK(subset_distance(c, s, c.vertex_direction(0), c.arc_direction(0, frac(1, 4))) ==
          doctest::Approx(3 * M_PI / 2).epsilon(1e-12));
    CHECK(c.distance(c.vertex_direction(0), c.arc_direction(0, frac(1, 4))) == doctest::Approx(M_PI / 2));
}

TEST_CASE("subset canonical form")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    LinkSpace l = link_datum_at(a2, v2(0, 0));
    LinkSubset s = canonical_subset(l, {{{0, frac(1, 4), frac(1, 2)}, {0, frac(1, 3), Q(1)}, {1, Q(0), Q(0)}}, {}});
    REQUIRE(s.subarcs.size() == 1);
    CHECK(s.subarcs[0].t0 == frac(1, 4));
    CHECK(s.subarcs[0].t1 == 1);
    CHECK(s.vertices.size() == 1);
    CHECK(s.vertices[0] == l.arcs()[0].to);
    CHECK(subset_contains(l, s, l.arc_direction(1, Q(0))));
    CHECK_THROWS_AS(canonical_subset(l, {{{0, frac(1, 2), frac(1, 4)}}, {}}), InputError);
    auto u = subset_union(l, s, canonical_subset(l, {{{0, Q(0), frac(1, 4)}}, {}}));
    CHECK(u.subarcs.size() == 1);
    CHECK(u.subarcs[0].t0 == 0);
}

TEST_CASE("projection of C in the link")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    const Cell& C = a2.fundamental_chamber();
    // Interior point: the whole circle.
    Vec inside = v2(1, 1, 3);
    LinkSpace li = link_datum_at(a2, inside);
    CHECK(subset_is_whole(li, proj_link_chamber(a2, inside, C, li)));

    // Sampling oracle: directions v with a + eps v in the closed Proj chamber.
    auto check_sampled = [&](const Vec& a, double expected_len) {
        LinkSpace l = link_datum_at(a2, a);
        LinkSubset p = proj_link_chamber(a2, a, C, l);
        Cell P = a2.project_chamber_to_cell(C, a2.carrier(a));
        double len = 0;
        for (const auto& sa : p.subarcs) len += l.position(sa.arc, sa.t1) - l.position(sa.arc, sa.t0);
        CHECK(len == doctest::Approx(expected_len));
        for (std::size_t ai = 0; ai < l.arcs().size(); ++ai)
            for (int k = 0; k <= 24; ++k) {
                Direction d = l.arc_direction(static_cast<int>(ai), frac(k, 24));
                Vec v = l.vector_of(d);
                bool oracle = a2.in_closure(P, a + v * frac(1, 1000));
                CHECK(subset_contains(l, p, d) == oracle);
            }
    };
    check_sampled(v2(1, 1, 2), M_PI);     // panel of C
    check_sampled(v2(0, 0), M_PI / 3);    // vertex of C
    check_sampled(v2(-1, -1, 1), M_PI / 3);  // vertex far from C
}

TEST_CASE("link normal condition on circles")
{
    Complex a2(CoxeterDatum::of_type(TypeTag::A2affine));
    Vec a = v2(0, 0);
    LinkSpace l = link_datum_at(a2, a);
    const Cell& C = a2.fundamental_chamber();
    LinkSubset p = proj_link_chamber(a2, a, C, l);
    // S = P itself: n = middle of the pi/3 arc.
    auto r = link_normal_condition(p, p, l);
    CHECK(r.verdict);
    // S = whole circle: no direction sees all of S within pi/2.
    CHECK(!link_normal_condition(whole_link(l), p, l).verdict);
}
