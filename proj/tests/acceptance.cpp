// Acceptance run: one line per criterion with the measured runtime against
// its budget. Exit status is nonzero when any criterion fails.

#include "cvxbuild/scene.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

using namespace cvxbuild;

namespace {

constexpr double kPi = std::numbers::pi;
const std::filesystem::path kScenes = CVXBUILD_SCENES_DIR;

Vec v2(long a, long b, long d = 1) { return Vec(frac(a, d), frac(b, d)); }

struct Outcome {
    bool pass = true;
    std::string detail;
};

BuildingPoint random_point(const AtlasBuilding& B, int k, std::mt19937_64& rng, long den)
{
    const Chart& c = B.charts()[static_cast<std::size_t>(k)];
    const long span = static_cast<long>(std::sqrt(to_double(c.radius2)) * static_cast<double>(den)) + 1;
    for (;;) {
        auto draw = [&] { return frac(static_cast<long>(rng() % static_cast<std::uint64_t>(2 * span + 1)) - span, den); };
        Vec x = B.rank() == 1 ? Vec(draw()) : Vec(draw(), draw());
        x = x + c.center;
        if (B.in_chart(k, x)) return {k, x};
    }
}

int random_chart(const AtlasBuilding& B, std::mt19937_64& rng)
{
    return static_cast<int>(rng() % B.charts().size());
}

// Convex polygon through the barycenter of the fundamental chamber: a hull
// of random points, or (on odd draws) an intersection of wall slabs.
Polytope random_polygon(const Complex& cx, std::mt19937_64& rng)
{
    const Vec c = cx.fundamental_chamber().point;
    if (rng() % 2 == 1) {
        std::map<Vec, std::vector<Q>> levels;
        for (const auto& w : cx.walls()) levels[w.normal].push_back(w.offset);
        Polytope P;
        for (auto& [n, ls] : levels) {
            std::sort(ls.begin(), ls.end());
            const Q at = dot(n, c);
            std::vector<Q> below, above;
            for (const Q& l : ls) (l < at ? below : above).push_back(l);
            const std::size_t pb = rng() % std::min<std::size_t>(below.size(), 4);
            const std::size_t pa = rng() % std::min<std::size_t>(above.size(), 4);
            P.halfspaces.push_back({n, above[pa], 0});
            P.halfspaces.push_back({-n, Q(-below[below.size() - 1 - pb]), 0});
        }
        return P;
    }
    std::vector<Vec> pts{c};
    const int n = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i)
        pts.push_back(c + v2(static_cast<long>(rng() % 25) - 12, static_cast<long>(rng() % 25) - 12, 4));
    return Polytope::hull(2, pts);
}

BuildingCenter chamber_center(const Complex& cx) { return BuildingCenter::of_chamber(cx.fundamental_chamber()); }

// First `count` distinct weak-normal polygons of the generator meeting C.
std::vector<Polytope> weak_normal_suite(const Complex& cx, std::uint64_t seed, int count)
{
    std::mt19937_64 rng(seed);
    std::vector<Polytope> out;
    std::vector<std::vector<Vec>> seen;
    for (int tries = 0; tries < 2000 && static_cast<int>(out.size()) < count; ++tries) {
        Polytope A = random_polygon(cx, rng);
        if (polytope_dimension(cx, A) != 2) continue;
        auto V = polytope_vertices(cx, A);
        bool boxed = false;
        for (const auto& v : V) boxed = boxed || on_box(cx, v);
        if (boxed || std::find(seen.begin(), seen.end(), V) != seen.end()) continue;
        if (!A.contains(cx.fundamental_chamber().point)) continue;
        if (!check_weak_normal_condition(cx, A, chamber_center(cx), WallMode::all_walls).verdict) continue;
        seen.push_back(V);
        out.push_back(A);
    }
    return out;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome composition_law()
{
    std::vector<AtlasBuilding> atlases{tripod_building(TypeTag::A1affine, make_wall(Vec(Q(1)), Q(0))),
                                       tripod_building(TypeTag::C2affine, make_wall(v2(1, -1), 0)),
                                       a2_counterexample_building(), tree_building(2, 2)};
    atlases.push_back(atlases.back().with_center(BuildingCenter::of_sector({Vec(Q(0)), Vec(Q(1))})));
    atlases.push_back(atlases[1].with_center(BuildingCenter::of_sector({v2(1, 1, 2), v2(3, 1)})));
    std::mt19937_64 rng(1);
    int points = 0, compositions = 0, bad = 0, outside = 0;
    std::string first;
    for (const auto& B : atlases)
        for (int i = 0; i < 250; ++i) {
            BuildingPoint x = random_point(B, random_chart(B, rng), rng, 7);
            ++points;
            const Vec rho = B.retract(x);
            for (int k = 0; k < static_cast<int>(B.charts().size()); ++k) {
                if (!B.contains_center(k)) continue;
                Vec y = B.retract_onto(k, x);
                // images beyond the chart ball are not modeled
                if (!B.in_chart(k, y)) {
                    ++outside;
                    continue;
                }
                ++compositions;
                if (B.retract({k, y}) != rho) {
                    ++bad;
                    if (first.empty()) first = to_string(x.x) + " via chart " + std::to_string(k);
                }
            }
        }
    Outcome o;
    o.pass = bad == 0 && points >= 1000 && compositions >= 1000;
    o.detail = std::to_string(points) + " points, " + std::to_string(compositions) + " compositions (" +
               std::to_string(outside) + " images outside the chart), " +
               std::to_string(bad) + " mismatches" + (first.empty() ? "" : " (first " + first + ")");
    return o;
}

// 2 ---------------------------------------------------------------------------

Outcome chart_independence()
{
    std::vector<std::pair<std::string, AtlasBuilding>> canned{
        {"thin A2", thin_building(TypeTag::A2affine)},
        {"tripod C2", tripod_building(TypeTag::C2affine, make_wall(v2(1, -1), 0))},
        {"A2 counterexample", a2_counterexample_building()},
        {"tree", tree_building(2, 2)}};
    std::mt19937_64 rng(2);
    double worst = 0;
    int pairs = 0, comparisons = 0;
    for (const auto& [name, B] : canned)
        for (int i = 0; i < 1000; ++i) {
            BuildingPoint x = random_point(B, random_chart(B, rng), rng, 5), y = random_point(B, random_chart(B, rng), rng, 5);
            auto cc = B.common_charts(x, y);
            if (cc.empty()) return {false, name + ": no common chart for a pair"};
            ++pairs;
            const double l0 = B.geodesic_in(cc.front(), x, y).length;
            for (int c : cc) {
                ++comparisons;
                worst = std::max(worst, std::abs(B.geodesic_in(c, x, y).length - l0));
            }
        }
    return {worst <= 1e-9, std::to_string(pairs) + " pairs in 4 buildings, " + std::to_string(comparisons) +
                               " chart lengths, max spread " + fmt("%.2e", worst)};
}

// 3 ---------------------------------------------------------------------------

Outcome a2_counterexample()
{
    AtlasBuilding B = a2_counterexample_building();
    A2Example e = a2_example_data();
    Polytope A = Polytope::hull(2, {e.m_prime, e.m});
    BuildingSubset S = preimage(B, A);
    BuildingPoint b{0, e.m_prime}, bp{1, e.m_prime};
    const int k = B.common_apartment(b, bp);
    Vec p = *B.coords_in(b, k), q = *B.coords_in(bp, k), a = *B.coords_in({0, e.a}, k);
    const double angle = angle_between_segments(B.datum(), a, p, q);

    auto local = is_locally_convex_at(B, S, {0, e.a});
    const Witness* lw = local.first("escaping_geodesic");
    const double link_d = lw ? lw->data["distance"].get<double>() : -1;

    GlobalOptions opt;
    opt.seeded_pairs = {{b, bp}};
    auto global = verify_global_convexity(B, S, opt);
    bool pair_witness = false;
    for (const auto& w : global.witnesses)
        if (w.kind == "geodesic_leaves_set" && w.data["x"]["chart"] == 0 && w.data["y"]["chart"] == 1) pair_witness = true;
    BuildingPoint mid{k, (p + q) * frac(1, 2)};
    const bool mid_out = !subset_contains(B, S, mid);

    Outcome o;
    o.pass = std::abs(angle - kPi / 3) <= 1e-9 && !local.verdict && std::abs(link_d - kPi / 3) <= 1e-9 &&
             !global.verdict && pair_witness && mid_out;
    o.detail = "angle/pi " + fmt("%.12f", angle / kPi) + ", local " + (local.verdict ? "true" : "false") +
               " with link witness/pi " + fmt("%.12f", link_d / kPi) + ", global " + (global.verdict ? "true" : "false") +
               ", midpoint " + to_string(mid.x) + " (chart " + std::to_string(k) + ") " + (mid_out ? "outside" : "inside");
    return o;
}

// 4 ---------------------------------------------------------------------------

Outcome circle_counterexample()
{
    LinkSpace c = unit_circle();
    // open ball of radius pi/4 around the direction at t = 1/8
    LinkSubset S = canonical_subset(c, {{{0, frac(1, 4), Q(1)}}, {}});
    const Direction center = c.arc_direction(0, frac(1, 8));
    std::vector<Direction> strata = subset_boundary(c, S);
    for (long j = 2; j <= 8; ++j) strata.push_back(c.arc_direction(0, frac(j, 8)));
    strata.push_back(c.vertex_direction(0));
    bool local = true;
    for (const auto& d : strata) local = local && is_locally_convex_in_link(S, c, d).verdict;

    const Direction u = c.vertex_direction(0), v = c.arc_direction(0, frac(1, 4));
    LinkPath g = c.geodesic(u, v);
    bool in_ball = true;
    for (const auto& seg : g.segments)
        for (int j = 0; j <= 32; ++j) {
            Direction z = c.arc_direction(seg.arc, seg.t0 + (seg.t1 - seg.t0) * frac(j, 32));
            in_ball = in_ball && c.distance(z, center) <= kPi / 4 + 1e-12;
        }
    const double dA = subset_distance(c, S, u, v);
    Outcome o;
    o.pass = local && std::abs(g.length - kPi / 2) <= 1e-9 && in_ball && std::abs(dA - 3 * kPi / 2) <= 1e-9;
    o.detail = std::string("locally convex at ") + std::to_string(strata.size()) + " strata: " + (local ? "yes" : "no") +
               ", ambient length/pi " + fmt("%.12f", g.length / kPi) + (in_ball ? " inside" : " NOT inside") +
               " the closed ball, d_A/pi " + fmt("%.12f", dA / kPi);
    return o;
}

// 5 ---------------------------------------------------------------------------

struct SuiteCase {
    std::string atlas;
    const AtlasBuilding* B;
    Polytope A;
};

std::vector<SuiteCase> weak_normal_cases(const AtlasBuilding& tripod, const AtlasBuilding& a2)
{
    std::vector<SuiteCase> out;
    for (auto& A : weak_normal_suite(tripod.complex(), 11, 3)) out.push_back({"C2 tripod", &tripod, A});
    for (auto& A : weak_normal_suite(a2.complex(), 12, 3)) out.push_back({"A2 atlas", &a2, A});
    return out;
}

Outcome preimages_convex(const std::vector<SuiteCase>& suite)
{
    int passed = 0, c2 = 0, a2 = 0;
    std::string failures;
    for (const auto& s : suite) {
        (s.atlas == "C2 tripod" ? c2 : a2)++;
        GlobalOptions opt;
        opt.samples = 1000;
        opt.tol = 1e-9;
        opt.seed = 5;
        auto r = verify_global_convexity(*s.B, preimage(*s.B, s.A), opt);
        if (r.verdict) ++passed;
        else failures += " [" + s.atlas + ": " + r.witnesses.front().kind + "]";
    }
    Outcome o;
    o.pass = c2 >= 3 && a2 >= 3 && passed == static_cast<int>(suite.size());
    o.detail = std::to_string(passed) + "/" + std::to_string(suite.size()) + " weak-normal sets convex (" +
               std::to_string(c2) + " on the C2 tripod, " + std::to_string(a2) + " on the A2 atlas; 1000 pairs each)" + failures;
    return o;
}

// 6 ---------------------------------------------------------------------------

Outcome mode_equivalence()
{
    std::mt19937_64 rng(6);
    int agree = 0, total = 0, holding = 0;
    for (TypeTag t : {TypeTag::A2affine, TypeTag::C2affine}) {
        Complex cx(CoxeterDatum::of_type(t));
        for (int i = 0; i < 60; ++i) {
            Polytope A = random_polygon(cx, rng);
            bool all = check_weak_normal_condition(cx, A, chamber_center(cx), WallMode::all_walls).verdict;
            bool two = check_weak_normal_condition(cx, A, chamber_center(cx), WallMode::two_closest).verdict;
            ++total;
            agree += all == two;
            holding += all;
        }
    }
    return {agree == total && total >= 100, std::to_string(agree) + "/" + std::to_string(total) +
                                                " polygons agree (60 in A2, 60 in C2; " + std::to_string(holding) +
                                                " satisfy the condition)"};
}

// 7 ---------------------------------------------------------------------------

Outcome thickening(const std::vector<SuiteCase>& suite)
{
    Complex c2(CoxeterDatum::of_type(TypeTag::C2affine));
    std::vector<std::pair<const Complex*, Polytope>> sets;
    for (const auto& s : suite) sets.push_back({&s.B->complex(), s.A});
    sets.push_back({&c2, Polytope::hull(2, {v2(-1, -1), v2(2, -1), v2(2, 1), v2(-1, 1)})});
    int passed = 0, total = 0;
    for (const auto& [cx, A] : sets)
        for (Q eps : {frac(1, 10), frac(1, 2), Q(1)}) {
            ++total;
            passed += check_thickened_weak_normal(*cx, A, eps, chamber_center(*cx), 1e-9).verdict;
        }
    return {passed == total, std::to_string(passed) + "/" + std::to_string(total) + " thickenings (" +
                                 std::to_string(sets.size()) + " sets x 3 radii) keep the weak normal condition"};
}

// 8 ---------------------------------------------------------------------------

Outcome ascending(const std::vector<SuiteCase>& suite)
{
    std::mt19937_64 rng(8);
    int exiting = 0, good = 0, tried = 0;
    std::string failure;
    for (std::size_t si = 0; exiting < 100 && tried < 2000; si = (si + 1) % suite.size()) {
        const auto& s = suite[si];
        static std::map<std::size_t, BuildingSubset> cache;
        auto it = cache.find(si);
        if (it == cache.end()) it = cache.emplace(si, preimage(*s.B, s.A)).first;
        const AtlasBuilding& B = *s.B;
        BuildingPoint x = random_point(B, random_chart(B, rng), rng, 8), y = random_point(B, random_chart(B, rng), rng, 4);
        if (x == y || !subset_contains(B, it->second, x) || subset_contains(B, it->second, y)) continue;
        ++tried;
        auto r = verify_ascending_propagation(B, s.A, x, y, 32, 1e-9);
        if (!r.first("exit")) continue;
        ++exiting;
        if (r.verdict) ++good;
        else if (failure.empty()) failure = " first failure on the " + s.atlas;
    }
    AtlasBuilding B = a2_counterexample_building();
    A2Example e = a2_example_data();
    auto bad = verify_ascending_propagation(B, Polytope::hull(2, {e.m_prime, e.m}), {0, e.m_prime}, {1, e.m_prime}, 64, 1e-9);
    const bool witness = !bad.verdict && bad.first("not_ascending") != nullptr;
    return {exiting >= 100 && good == exiting && witness,
            std::to_string(good) + "/" + std::to_string(exiting) + " exiting geodesics ascend" + failure +
                "; A2 scene " + (witness ? "gives a non-monotone witness" : "gives NO witness")};
}

// 9 ---------------------------------------------------------------------------

Outcome angle_pi()
{
    std::vector<AtlasBuilding> atlases{thin_building(TypeTag::C2affine), tripod_building(TypeTag::C2affine, make_wall(v2(1, -1), 0)),
                                       a2_counterexample_building(), tripod_building(TypeTag::G2affine, make_wall(v2(0, 1), 0))};
    std::mt19937_64 rng(9);
    int built = 0, sampled = 0;
    double worst = 0;
    for (int tries = 0; built < 100 && tries < 5000; ++tries) {
        const AtlasBuilding& B = atlases[static_cast<std::size_t>(tries) % atlases.size()];
        const int k = random_chart(B, rng);
        // joint on a wall through the chart center half of the time
        BuildingPoint q = random_point(B, k, rng, 4);
        if (rng() % 2 == 0 && !B.gluings().empty()) {
            const auto& h = B.gluings().front().domain.front().front();
            Vec dir = Vec(h.normal[1], Q(-h.normal[0]));
            q.x = B.charts()[static_cast<std::size_t>(k)].center + dir * frac(static_cast<long>(rng() % 9) - 4, 4);
        }
        Vec u = v2(static_cast<long>(rng() % 9) - 4, static_cast<long>(rng() % 9) - 4, 4);
        if (u.is_zero()) continue;
        const Q s1 = frac(1 + static_cast<long>(rng() % 8), 2), s2 = frac(1 + static_cast<long>(rng() % 8), 2);
        Vec p = q.x + u * s1, r = q.x - u * s2;
        if (!B.in_chart(k, p) || !B.in_chart(k, r) || !B.in_chart(k, q.x)) continue;
        // the joint has angle pi in the building link
        BuildingLink L = building_link(B, q);
        auto dp = locate_in_link(B, L, k, p - q.x), dr = locate_in_link(B, L, k, r - q.x);
        if (!dp || !dr || std::abs(L.link.distance(*dp, *dr) - kPi) > 1e-9) return {false, "constructed joint without angle pi"};
        // the two halves, each stored in some chart that holds it
        const double l1 = B.datum().length(q.x - p), l2 = B.datum().length(r - q.x);
        auto at = [&](double t) -> BuildingPoint {
            if (t <= l1) return {k, p + (q.x - p) * from_double(t / l1)};
            return {k, q.x + (r - q.x) * from_double((t - l1) / l2)};
        };
        ++built;
        for (int j = 0; j < 6; ++j) {
            double t1 = (l1 + l2) * static_cast<double>(rng() % 1001) / 1000, t2 = (l1 + l2) * static_cast<double>(rng() % 1001) / 1000;
            if (t1 > t2) std::swap(t1, t2);
            BuildingPoint z1 = at(t1), z2 = at(t2);
            auto c1 = B.point_class(z1), c2 = B.point_class(z2);
            const auto& m1 = c1[rng() % c1.size()];
            const auto& m2 = c2[rng() % c2.size()];
            double d = B.geodesic({m1.chart, m1.x}, {m2.chart, m2.x}).length;
            worst = std::max(worst, std::abs(d - (t2 - t1)));
            ++sampled;
        }
    }
    return {built >= 100 && worst <= 1e-9, std::to_string(built) + " concatenations, " + std::to_string(sampled) +
                                               " pairs, max |d - (t2 - t1)| " + fmt("%.2e", worst)};
}

// 10 --------------------------------------------------------------------------

Outcome halfspace_inclusion()
{
    std::mt19937_64 rng(10);
    int polygons = 0, inclusions = 0, held = 0;
    for (int tries = 0; polygons < 20 && tries < 500; ++tries) {
        Complex cx(CoxeterDatum::of_type(tries % 2 ? TypeTag::A2affine : TypeTag::C2affine));
        Polytope A = random_polygon(cx, rng);
        bool any = false;
        for (int w : cx.facet_walls(cx.fundamental_chamber())) {
            const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
            auto r = key_halfspace_inclusion(cx, A, h, -side_sign(cx.fundamental_chamber().point, h));
            if (r.first("precondition_failed")) continue;
            any = true;
            ++inclusions;
            held += r.verdict;
        }
        polygons += any;
    }
    return {polygons >= 20 && held == inclusions, std::to_string(polygons) + " polygons, " + std::to_string(held) + "/" +
                                                       std::to_string(inclusions) + " exact inclusions"};
}

// 11 --------------------------------------------------------------------------

Outcome determinism()
{
    int same = 0;
    auto names = list_scenarios(kScenes);
    std::string differs;
    for (const auto& n : names) {
        auto a = run_scene(load_scene(kScenes / (n + ".json"))).to_json().dump();
        auto b = run_scene(load_scene(kScenes / (n + ".json"))).to_json().dump();
        if (a == b) ++same;
        else differs += " " + n;
    }
    return {same == static_cast<int>(names.size()) && !names.empty(),
            std::to_string(same) + "/" + std::to_string(names.size()) + " scenarios byte-identical" + differs};
}

} // namespace

int main(int argc, char** argv)
{
    // optional criterion ids restrict the run
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

    AtlasBuilding tripod = tripod_building(TypeTag::C2affine, make_wall(v2(1, -1), 0));
    AtlasBuilding a2 = a2_counterexample_building();
    // built on first use, so its cost is charged to the first criterion using it
    std::optional<std::vector<SuiteCase>> suite_store;
    auto suite = [&]() -> const std::vector<SuiteCase>& {
        if (!suite_store) suite_store = weak_normal_cases(tripod, a2);
        return *suite_store;
    };

    struct Criterion {
        int id;
        const char* name;
        double budget;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "retraction composition law", 2, composition_law},
        {2, "geodesic chart independence", 5, chart_independence},
        {3, "A2 counterexample", 2, a2_counterexample},
        {4, "circle counterexample", 1, circle_counterexample},
        {5, "weak-normal preimages are convex", 30, [&] { return preimages_convex(suite()); }},
        {6, "wall mode equivalence", 10, mode_equivalence},
        {7, "thickening keeps the weak normal condition", 5, [&] { return thickening(suite()); }},
        {8, "ascending propagation", 10, [&] { return ascending(suite()); }},
        {9, "angle-pi concatenations are geodesics", 2, angle_pi},
        {10, "halfspace inclusion", 5, halfspace_inclusion},
        {11, "deterministic reports", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget <= 0 || dt < c.budget;
        const bool ok = o.pass && in_time;
        failed += !ok;
        std::string budget = c.budget > 0 ? fmt(" < %.0f s", c.budget) : "";
        std::printf("[%s] %2d %-44s %6.2f s%s%s | %s\n", ok ? "PASS" : "FAIL", c.id, c.name, dt, budget.c_str(),
                    in_time ? "" : " (over budget)", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
