#include "cvxbuild/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace cvxbuild {

namespace {

// Strict JSON access -----------------------------------------------------------

void allow(const Json& j, std::initializer_list<std::string_view> keys, const std::string& where)
{
    if (!j.is_object()) throw InputError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw InputError(where + ": unknown key '" + k + "'");
    }
}

const Json& need(const Json& j, const char* key, const std::string& where)
{
    auto it = j.find(key);
    if (it == j.end()) throw InputError(where + ": missing key '" + key + "'");
    return *it;
}

Q rat(const Json& j, const std::string& where)
{
    if (j.is_number_integer()) return Q(j.get<long>());
    if (j.is_string()) {
        try {
            return parse_rational(j.get<std::string>());
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    }
    throw InputError(where + ": expected an integer or a \"p/q\" string");
}

long integer(const Json& j, const std::string& where)
{
    if (!j.is_number_integer()) throw InputError(where + ": expected an integer");
    return j.get<long>();
}

std::string str(const Json& j, const std::string& where)
{
    if (!j.is_string()) throw InputError(where + ": expected a string");
    return j.get<std::string>();
}

const Json& arr(const Json& j, const std::string& where)
{
    if (!j.is_array()) throw InputError(where + ": expected an array");
    return j;
}

Vec vec(const Json& j, int rank, const std::string& where)
{
    arr(j, where);
    if (static_cast<int>(j.size()) != rank)
        throw InputError(where + ": expected " + std::to_string(rank) + " coordinates");
    Vec v(rank);
    for (int i = 0; i < rank; ++i) v[i] = rat(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    return v;
}

Halfspace halfspace(const Json& j, int rank, const std::string& where)
{
    allow(j, {"normal", "offset"}, where);
    Halfspace h{vec(need(j, "normal", where), rank, where + ".normal"), rat(need(j, "offset", where), where + ".offset"), -1};
    if (h.normal.is_zero()) throw InputError(where + ": zero normal");
    return h;
}

Wall wall(const Json& j, int rank, const std::string& where)
{
    Halfspace h = halfspace(j, rank, where);
    return make_wall(h.normal, h.offset);
}

std::vector<Halfspace> halfspaces(const Json& j, int rank, const std::string& where)
{
    std::vector<Halfspace> out;
    for (std::size_t i = 0; i < arr(j, where).size(); ++i)
        out.push_back(halfspace(j[i], rank, where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<Vec> points(const Json& j, int rank, const std::string& where)
{
    std::vector<Vec> out;
    for (std::size_t i = 0; i < arr(j, where).size(); ++i) out.push_back(vec(j[i], rank, where + "[" + std::to_string(i) + "]"));
    return out;
}

BuildingPoint bpoint(const Json& j, const AtlasBuilding& B, const std::string& where)
{
    BuildingPoint p;
    if (j.is_array()) {
        p = {B.base_chart(), vec(j, B.rank(), where)};
    } else {
        allow(j, {"chart", "x"}, where);
        p.chart = static_cast<int>(integer(need(j, "chart", where), where + ".chart"));
        p.x = vec(need(j, "x", where), B.rank(), where + ".x");
    }
    if (p.chart < 0 || p.chart >= static_cast<int>(B.charts().size())) throw InputError(where + ": no such chart");
    if (!B.in_chart(p.chart, p.x)) throw InputError(where + ": point lies outside its chart");
    return p;
}

Direction link_direction(const Json& j, const LinkSpace& c, const std::string& where)
{
    allow(j, {"vertex", "arc", "t"}, where);
    if (j.contains("vertex")) {
        if (j.contains("arc") || j.contains("t")) throw InputError(where + ": give either a vertex or an arc point");
        long v = integer(j["vertex"], where + ".vertex");
        if (v < 0 || v >= static_cast<long>(c.vertices().size())) throw InputError(where + ": no such vertex");
        return c.vertex_direction(static_cast<int>(v));
    }
    long a = integer(need(j, "arc", where), where + ".arc");
    if (a < 0 || a >= static_cast<long>(c.arcs().size())) throw InputError(where + ": no such arc");
    Q t = rat(need(j, "t", where), where + ".t");
    if (t < 0 || t > 1) throw InputError(where + ": arc parameter outside [0, 1]");
    return c.arc_direction(static_cast<int>(a), t);
}

// Atlas construction -----------------------------------------------------------

CoxeterDatum parse_datum(const Json& j, const std::string& where)
{
    allow(j, {"type_tag", "gram", "simple_walls"}, where);
    TypeTag t;
    try {
        t = parse_type_tag(str(need(j, "type_tag", where), where + ".type_tag"));
    } catch (const InputError& e) {
        throw InputError(where + ".type_tag: " + e.what());
    }
    CoxeterDatum d = CoxeterDatum::of_type(t);
    if (!j.contains("gram") && !j.contains("simple_walls")) return d;
    Mat g = d.gram;
    if (j.contains("gram")) {
        const Json& gj = arr(j["gram"], where + ".gram");
        if (static_cast<int>(gj.size()) != d.rank) throw InputError(where + ".gram: wrong size");
        for (int r = 0; r < d.rank; ++r) {
            Vec row = vec(gj[static_cast<std::size_t>(r)], d.rank, where + ".gram[" + std::to_string(r) + "]");
            for (int c = 0; c < d.rank; ++c) g(r, c) = row[c];
        }
    }
    std::vector<Wall> ws = d.simple_walls;
    if (j.contains("simple_walls")) {
        ws.clear();
        for (const auto& h : halfspaces(j["simple_walls"], d.rank, where + ".simple_walls")) ws.push_back(make_wall(h.normal, h.offset));
    }
    return CoxeterDatum::custom(t, g, ws);
}

Domain parse_domain(const Json& j, int rank, const std::string& where)
{
    allow(j, {"halfspace", "sector", "pieces"}, where);
    if (j.size() != 1) throw InputError(where + ": give exactly one of halfspace, sector, pieces");
    if (j.contains("halfspace")) return {{halfspace(j["halfspace"], rank, where + ".halfspace")}};
    if (j.contains("sector")) {
        const Json& s = j["sector"];
        const std::string sw = where + ".sector";
        allow(s, {"apex", "halfspaces"}, sw);
        Vec apex = vec(need(s, "apex", sw), rank, sw + ".apex");
        auto hs = halfspaces(need(s, "halfspaces", sw), rank, sw + ".halfspaces");
        for (const auto& h : hs)
            if (dot(h.normal, apex) != h.offset) throw InputError(sw + ": halfspace boundary misses the apex");
        return {hs};
    }
    Domain d;
    const Json& ps = arr(j["pieces"], where + ".pieces");
    for (std::size_t i = 0; i < ps.size(); ++i) d.push_back(halfspaces(ps[i], rank, where + ".pieces[" + std::to_string(i) + "]"));
    return d;
}

AtlasBuilding custom_atlas(const Json& j, CoxeterDatum datum, const std::string& where)
{
    Complex cx(std::move(datum));
    const int n = cx.rank();
    std::vector<Chart> charts;
    const Json& cj = need(j, "charts", where);
    if (cj.is_object()) {
        allow(cj, {"count"}, where + ".charts");
        long c = integer(need(cj, "count", where + ".charts"), where + ".charts.count");
        if (c < 1 || c > 64) throw InputError(where + ".charts.count: expected 1..64");
        for (long i = 0; i < c; ++i) charts.push_back({"chart" + std::to_string(i), Vec(n), cx.region_radius2() / 4});
    } else {
        for (std::size_t i = 0; i < arr(cj, where + ".charts").size(); ++i) {
            const std::string w = where + ".charts[" + std::to_string(i) + "]";
            allow(cj[i], {"name", "center", "radius2"}, w);
            Chart ch{cj[i].contains("name") ? str(cj[i]["name"], w + ".name") : "chart" + std::to_string(i),
                     cj[i].contains("center") ? vec(cj[i]["center"], n, w + ".center") : Vec(n),
                     cj[i].contains("radius2") ? rat(cj[i]["radius2"], w + ".radius2") : Q(cx.region_radius2() / 4)};
            if (ch.radius2 <= 0) throw InputError(w + ".radius2: must be positive");
            charts.push_back(ch);
        }
    }
    std::vector<Gluing> gl;
    if (j.contains("gluings")) {
        const Json& gj = arr(j["gluings"], where + ".gluings");
        for (std::size_t i = 0; i < gj.size(); ++i) {
            const std::string w = where + ".gluings[" + std::to_string(i) + "]";
            allow(gj[i], {"i", "j", "weyl_word", "translation", "domain", "name"}, w);
            Gluing g;
            g.i = static_cast<int>(integer(need(gj[i], "i", w), w + ".i"));
            g.j = static_cast<int>(integer(need(gj[i], "j", w), w + ".j"));
            const int nc = static_cast<int>(charts.size());
            if (g.i < 0 || g.j < 0 || g.i >= nc || g.j >= nc) throw InputError(w + ": chart index out of range");
            g.map = AffineMap::identity(n);
            if (gj[i].contains("weyl_word")) {
                const Json& word = arr(gj[i]["weyl_word"], w + ".weyl_word");
                const auto& sw = cx.datum().simple_walls;
                for (std::size_t k = 0; k < word.size(); ++k) {
                    long s = integer(word[k], w + ".weyl_word");
                    if (s < 0 || s >= static_cast<long>(sw.size())) throw InputError(w + ".weyl_word: no simple wall " + std::to_string(s));
                    g.map = g.map.after(cx.datum().reflection(sw[static_cast<std::size_t>(s)]));
                }
            }
            if (gj[i].contains("translation")) g.map.shift += vec(gj[i]["translation"], n, w + ".translation");
            g.domain = parse_domain(need(gj[i], "domain", w), n, w + ".domain");
            g.name = gj[i].contains("name") ? str(gj[i]["name"], w + ".name") : "g" + std::to_string(i);
            gl.push_back(std::move(g));
        }
    }
    long base = j.contains("base_chart") ? integer(j["base_chart"], where + ".base_chart") : 0;
    if (base < 0 || base >= static_cast<long>(charts.size())) throw InputError(where + ".base_chart: out of range");
    Cell C = cx.fundamental_chamber();
    return AtlasBuilding(std::move(cx), std::move(charts), std::move(gl), static_cast<int>(base), BuildingCenter::of_chamber(C));
}

AtlasBuilding parse_atlas(const Json& root, const std::string& where)
{
    const Json& j = need(root, "atlas", where);
    const std::string w = where + ".atlas";
    const std::string kind = str(need(j, "kind", w), w + ".kind");
    auto datum = [&](std::optional<TypeTag> implied) {
        if (!root.contains("coxeter")) {
            if (implied) return CoxeterDatum::of_type(*implied);
            throw InputError(where + ": missing key 'coxeter'");
        }
        CoxeterDatum d = parse_datum(root["coxeter"], where + ".coxeter");
        if (implied && d.type != *implied) throw InputError(w + ": atlas kind '" + kind + "' needs type " + to_string(*implied));
        return d;
    };
    auto plain = [&](const CoxeterDatum& d) {
        if (!(d.gram == CoxeterDatum::of_type(d.type).gram) || d.simple_walls != CoxeterDatum::of_type(d.type).simple_walls)
            throw InputError(w + ": explicit gram or simple walls need a custom atlas");
        return d.type;
    };
    if (kind == "thin") {
        allow(j, {"kind"}, w);
        return thin_building(plain(datum(std::nullopt)));
    }
    if (kind == "tripod") {
        allow(j, {"kind", "wall"}, w);
        TypeTag t = plain(datum(std::nullopt));
        return tripod_building(t, wall(need(j, "wall", w), CoxeterDatum::of_type(t).rank, w + ".wall"));
    }
    if (kind == "a2_counterexample") {
        allow(j, {"kind"}, w);
        datum(TypeTag::A2affine);
        return a2_counterexample_building();
    }
    if (kind == "tree") {
        allow(j, {"kind", "q", "depth"}, w);
        datum(TypeTag::A1affine);
        return tree_building(static_cast<int>(integer(need(j, "q", w), w + ".q")),
                             static_cast<int>(integer(need(j, "depth", w), w + ".depth")));
    }
    if (kind == "custom") {
        allow(j, {"kind", "charts", "gluings", "base_chart"}, w);
        return custom_atlas(j, datum(std::nullopt), w);
    }
    throw InputError(w + ".kind: unknown atlas kind '" + kind + "'");
}

BuildingCenter parse_center(const Json& j, const AtlasBuilding& B, const std::string& where)
{
    allow(j, {"chamber", "sector"}, where);
    if (j.size() != 1) throw InputError(where + ": give exactly one of chamber, sector");
    const int n = B.rank();
    if (j.contains("chamber")) {
        Vec p = vec(j["chamber"], n, where + ".chamber");
        if (!B.complex().in_region(p)) throw InputError(where + ".chamber: point outside the modeled region");
        Cell c = B.complex().canonical_cell(p);
        if (!c.is_chamber()) throw InputError(where + ".chamber: point is not interior to a chamber");
        return BuildingCenter::of_chamber(c);
    }
    const Json& s = j["sector"];
    allow(s, {"base", "direction"}, where + ".sector");
    SectorGerm g{vec(need(s, "base", where + ".sector"), n, where + ".sector.base"),
                 vec(need(s, "direction", where + ".sector"), n, where + ".sector.direction")};
    if (g.direction.is_zero()) throw InputError(where + ".sector.direction: zero vector");
    return BuildingCenter::of_sector(g);
}

Polytope parse_polytope(const Json& j, int rank, const std::string& where)
{
    if (j.contains("halfspaces") == j.contains("hull")) throw InputError(where + ": give exactly one of halfspaces, hull");
    if (j.contains("hull")) {
        auto pts = points(j["hull"], rank, where + ".hull");
        if (pts.empty()) throw InputError(where + ".hull: no points");
        return Polytope::hull(rank, pts);
    }
    return Polytope{halfspaces(j["halfspaces"], rank, where + ".halfspaces")};
}

WallMode parse_mode(const std::string& s, const std::string& where)
{
    if (s == "all") return WallMode::all_walls;
    if (s == "two") return WallMode::two_closest;
    throw InputError(where + ": mode must be 'all' or 'two'");
}

std::size_t line_of(std::string_view text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

} // namespace

const std::vector<std::string>& check_order()
{
    static const std::vector<std::string> order{"validate", "normal", "weak_normal", "weak_normal_two", "thicken",
                                                "key_inclusion", "preimage", "angle", "local", "global",
                                                "length_metric", "ascend"};
    return order;
}

const Polytope& Scene::base_polytope() const
{
    const Polytope* found = nullptr;
    int count = 0;
    for (const auto& [k, P] : polytopes)
        if (building && k == building->base_chart()) {
            found = &P;
            ++count;
        }
    if (count != 1 || polytopes.size() != 1) throw InputError("this check needs exactly one polytope in the base chart");
    return *found;
}

BuildingSubset Scene::subset() const
{
    if (!building) throw InputError("circle scenes have no building subset");
    if (use_preimage) return preimage(*building, base_polytope());
    BuildingSubset S;
    S.charts.resize(building->charts().size());
    for (const auto& [k, P] : polytopes) S.charts[static_cast<std::size_t>(k)].pieces.push_back(P);
    return S;
}

Scene parse_scene(std::string_view text, const std::string& origin)
{
    Json root;
    try {
        root = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw InputError(origin + ": line " + std::to_string(line_of(text, e.byte)) + ": JSON syntax error");
    }
    const std::string& w = origin;
    allow(root, {"name", "description", "space", "coxeter", "atlas", "center", "set", "link_set", "verification"}, w);
    Scene s;
    s.name = str(need(root, "name", w), w + ".name");
    if (root.contains("description")) s.description = str(root["description"], w + ".description");
    s.hash = stable_hash(root.dump());
    const std::string space = root.contains("space") ? str(root["space"], w + ".space") : "building";

    const Json noverify = Json::object();
    const Json& vj = root.contains("verification") ? root["verification"] : noverify;
    const std::string vw = w + ".verification";
    allow(vj, {"checks", "samples", "tol", "seed", "mode", "pairs", "points", "epsilons", "angle", "grid",
               "random_geodesics", "link_pairs"},
          vw);
    if (vj.contains("checks")) {
        for (std::size_t i = 0; i < arr(vj["checks"], vw + ".checks").size(); ++i) {
            std::string c = str(vj["checks"][i], vw + ".checks");
            if (std::find(check_order().begin(), check_order().end(), c) == check_order().end())
                throw InputError(vw + ".checks: unknown check '" + c + "'");
            s.checks.push_back(c);
        }
    }
    if (vj.contains("samples")) {
        long n = integer(vj["samples"], vw + ".samples");
        if (n < 0) throw InputError(vw + ".samples: must be nonnegative");
        s.samples = static_cast<int>(n);
    }
    if (vj.contains("tol")) {
        if (!vj["tol"].is_number() || vj["tol"].get<double>() <= 0) throw InputError(vw + ".tol: expected a positive number");
        s.tol = vj["tol"].get<double>();
    }
    if (vj.contains("seed")) {
        if (!vj["seed"].is_number_unsigned()) throw InputError(vw + ".seed: expected an unsigned integer");
        s.seed = vj["seed"].get<std::uint64_t>();
    }
    if (vj.contains("mode")) s.mode = parse_mode(str(vj["mode"], vw + ".mode"), vw + ".mode");
    if (vj.contains("grid")) {
        s.grid = static_cast<int>(integer(vj["grid"], vw + ".grid"));
        if (s.grid < 1) throw InputError(vw + ".grid: must be positive");
    }
    if (vj.contains("random_geodesics")) s.random_geodesics = static_cast<int>(integer(vj["random_geodesics"], vw + ".random_geodesics"));
    if (vj.contains("epsilons")) {
        for (std::size_t i = 0; i < arr(vj["epsilons"], vw + ".epsilons").size(); ++i) {
            Q e = rat(vj["epsilons"][i], vw + ".epsilons");
            if (e <= 0) throw InputError(vw + ".epsilons: must be positive");
            s.epsilons.push_back(e);
        }
    }

    if (space == "unit_circle") {
        for (const char* k : {"coxeter", "atlas", "center", "set", "pairs", "points", "angle"})
            if (root.contains(k) || vj.contains(k)) throw InputError(w + ": '" + k + "' does not apply to circle scenes");
        LinkSpace c = unit_circle();
        CircleScene cs;
        const Json& lj = need(root, "link_set", w);
        const std::string lw = w + ".link_set";
        allow(lj, {"subarcs", "vertices"}, lw);
        if (lj.contains("subarcs"))
            for (std::size_t i = 0; i < arr(lj["subarcs"], lw + ".subarcs").size(); ++i) {
                const std::string sw = lw + ".subarcs[" + std::to_string(i) + "]";
                const Json& a = lj["subarcs"][i];
                allow(a, {"arc", "t0", "t1"}, sw);
                long arc = integer(need(a, "arc", sw), sw + ".arc");
                if (arc < 0 || arc >= static_cast<long>(c.arcs().size())) throw InputError(sw + ": no such arc");
                Q t0 = rat(need(a, "t0", sw), sw + ".t0"), t1 = rat(need(a, "t1", sw), sw + ".t1");
                if (!(0 <= t0 && t0 <= t1 && t1 <= 1)) throw InputError(sw + ": need 0 <= t0 <= t1 <= 1");
                cs.set.subarcs.push_back({static_cast<int>(arc), t0, t1});
            }
        if (lj.contains("vertices"))
            for (const auto& v : arr(lj["vertices"], lw + ".vertices")) {
                long k = integer(v, lw + ".vertices");
                if (k < 0 || k >= static_cast<long>(c.vertices().size())) throw InputError(lw + ".vertices: no such vertex");
                cs.set.vertices.push_back(static_cast<int>(k));
            }
        cs.set = canonical_subset(c, cs.set);
        if (vj.contains("link_pairs"))
            for (std::size_t i = 0; i < arr(vj["link_pairs"], vw + ".link_pairs").size(); ++i) {
                const std::string pw = vw + ".link_pairs[" + std::to_string(i) + "]";
                const Json& p = arr(vj["link_pairs"][i], pw);
                if (p.size() != 2) throw InputError(pw + ": expected two directions");
                cs.pairs.push_back({link_direction(p[0], c, pw + "[0]"), link_direction(p[1], c, pw + "[1]")});
            }
        for (const auto& ch : s.checks)
            if (ch != "local" && ch != "global" && ch != "length_metric")
                throw InputError(vw + ".checks: '" + ch + "' does not apply to circle scenes");
        s.circle = std::move(cs);
        return s;
    }
    if (space != "building") throw InputError(w + ".space: expected 'building' or 'unit_circle'");
    if (root.contains("link_set") || vj.contains("link_pairs")) throw InputError(w + ": link data needs space 'unit_circle'");

    AtlasBuilding B = parse_atlas(root, w);
    if (root.contains("center")) B = B.with_center(parse_center(root["center"], B, w + ".center"));
    const int n = B.rank();

    const Json& sj = need(root, "set", w);
    const std::string sw = w + ".set";
    allow(sj, {"polytopes", "preimage"}, sw);
    if (sj.contains("preimage")) {
        if (!sj["preimage"].is_boolean()) throw InputError(sw + ".preimage: expected a boolean");
        s.use_preimage = sj["preimage"].get<bool>();
    }
    const Json& pj = arr(need(sj, "polytopes", sw), sw + ".polytopes");
    for (std::size_t i = 0; i < pj.size(); ++i) {
        const std::string pw = sw + ".polytopes[" + std::to_string(i) + "]";
        allow(pj[i], {"chart", "halfspaces", "hull"}, pw);
        long k = pj[i].contains("chart") ? integer(pj[i]["chart"], pw + ".chart") : B.base_chart();
        if (k < 0 || k >= static_cast<long>(B.charts().size())) throw InputError(pw + ".chart: no such chart");
        s.polytopes.push_back({static_cast<int>(k), parse_polytope(pj[i], n, pw)});
    }
    if (s.use_preimage && (s.polytopes.size() != 1 || s.polytopes[0].first != B.base_chart()))
        throw InputError(sw + ": preimage sets need exactly one polytope in the base chart");

    if (vj.contains("pairs"))
        for (std::size_t i = 0; i < arr(vj["pairs"], vw + ".pairs").size(); ++i) {
            const std::string pw = vw + ".pairs[" + std::to_string(i) + "]";
            const Json& p = arr(vj["pairs"][i], pw);
            if (p.size() != 2) throw InputError(pw + ": expected two points");
            s.pairs.push_back({bpoint(p[0], B, pw + "[0]"), bpoint(p[1], B, pw + "[1]")});
        }
    if (vj.contains("points"))
        for (std::size_t i = 0; i < arr(vj["points"], vw + ".points").size(); ++i)
            s.points.push_back(bpoint(vj["points"][i], B, vw + ".points[" + std::to_string(i) + "]"));
    if (vj.contains("angle")) {
        const Json& a = vj["angle"];
        allow(a, {"at", "x", "y"}, vw + ".angle");
        s.angle = AngleSpec{bpoint(need(a, "at", vw + ".angle"), B, vw + ".angle.at"),
                            bpoint(need(a, "x", vw + ".angle"), B, vw + ".angle.x"),
                            bpoint(need(a, "y", vw + ".angle"), B, vw + ".angle.y")};
    }
    s.building = std::make_shared<const AtlasBuilding>(std::move(B));
    return s;
}

Scene load_scene(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read scene file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str(), path.filename().string());
}

// Running ----------------------------------------------------------------------

bool RunReport::verdict() const
{
    return std::all_of(reports.begin(), reports.end(), [](const ConvexityReport& r) { return r.verdict; });
}

Json RunReport::to_json() const
{
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(scene_hash));
    Json j;
    j["scene"] = scene;
    j["scene_hash"] = std::string("fnv1a64:") + hex;
    j["seed"] = seed;
    j["samples"] = samples;
    j["tol"] = tol;
    j["verdict"] = verdict();
    Json rs = Json::array();
    for (const auto& r : reports) rs.push_back(r.to_json());
    j["checks"] = rs;
    return j;
}

Json RunReport::verdict_table() const
{
    Json t = Json::array();
    for (const auto& r : reports) t.push_back(Json{{"check", r.check}, {"verdict", r.verdict}});
    return t;
}

bool matches_expected(const RunReport& report, const Json& expected, std::string* why)
{
    auto say = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    if (!expected.is_object() || !expected.contains("verdicts")) return say("expected table lacks 'verdicts'");
    Json got = report.verdict_table();
    const Json& want = expected["verdicts"];
    if (got.size() != want.size())
        return say("expected " + std::to_string(want.size()) + " checks, ran " + std::to_string(got.size()));
    for (std::size_t i = 0; i < got.size(); ++i)
        if (got[i] != want[i]) return say("check " + std::to_string(i) + ": expected " + want[i].dump() + ", got " + got[i].dump());
    return true;
}

namespace {

Json point_json(const BuildingPoint& p) { return Json{{"chart", p.chart}, {"x", to_string(p.x)}}; }

// Merges sub-reports: the verdict is their conjunction and failing
// witnesses are kept with the case label.
ConvexityReport merge(const std::string& name, double tol, const std::vector<std::pair<Json, ConvexityReport>>& cases)
{
    ConvexityReport r;
    r.check = name;
    r.tolerance = tol;
    int failed = 0;
    for (const auto& [label, sub] : cases) {
        if (sub.verdict) continue;
        ++failed;
        r.verdict = false;
        for (const auto& w : sub.witnesses) {
            Json d = w.data;
            d["case"] = label;
            r.witnesses.push_back({w.kind, d});
        }
    }
    r.note("cases", Json{{"count", cases.size()}, {"failed", failed}});
    return r;
}

// Uniform rational point of a chart on the 1/16 grid.
std::optional<BuildingPoint> random_chart_point(const AtlasBuilding& B, std::mt19937_64& rng)
{
    const int nc = static_cast<int>(B.charts().size());
    const Mat ginv = B.datum().gram.inverse();
    for (int tries = 0; tries < 64; ++tries) {
        int k = static_cast<int>(rng() % static_cast<std::uint64_t>(nc));
        const Chart& ch = B.charts()[static_cast<std::size_t>(k)];
        double m = 0;
        for (int i = 0; i < B.rank(); ++i) m = std::max(m, to_double(ch.radius2 * ginv(i, i)));
        const long r = 16 * static_cast<long>(std::ceil(std::sqrt(m)));
        Vec x = ch.center;
        for (int i = 0; i < B.rank(); ++i)
            x[i] += frac(static_cast<long>(rng() % static_cast<std::uint64_t>(2 * r + 1)) - r, 16);
        if (B.in_chart(k, x)) return BuildingPoint{k, x};
    }
    return std::nullopt;
}

ConvexityReport preimage_report(const AtlasBuilding& B, const Polytope& A, const BuildingSubset& S, int samples,
                                std::uint64_t seed)
{
    ConvexityReport r;
    r.check = "preimage";
    Json pieces = Json::array();
    for (const auto& c : S.charts) pieces.push_back(c.pieces.size());
    r.note("pieces_per_chart", pieces);
    std::mt19937_64 rng(seed);
    int tested = 0, inside = 0;
    for (int i = 0; i < samples; ++i) {
        auto p = random_chart_point(B, rng);
        if (!p) continue;
        ++tested;
        Vec img = B.retract(*p);
        bool want = A.contains(img);
        inside += want;
        if (subset_contains(B, S, *p) != want) {
            r.fail("membership_mismatch", Json{{"point", point_json(*p)}, {"retract", to_string(img)}, {"in_A", want}});
            break;
        }
    }
    r.note("sampled", Json{{"points", tested}, {"inside", inside}, {"seed", seed}});
    return r;
}

ConvexityReport angle_report(const AtlasBuilding& B, const AngleSpec& a)
{
    ConvexityReport r;
    r.check = "angle";
    for (int k = 0; k < static_cast<int>(B.charts().size()); ++k) {
        auto p = B.coords_in(a.at, k), x = B.coords_in(a.x, k), y = B.coords_in(a.y, k);
        if (!p || !x || !y) continue;
        if (*x == *p || *y == *p) throw InputError("angle: endpoints must differ from the vertex");
        double th = angle_between_segments(B.datum(), *p, *x, *y);
        r.note("angle", Json{{"chart", k}, {"at", to_string(*p)}, {"x", to_string(*x)}, {"y", to_string(*y)},
                             {"radians", th}, {"over_pi", th / M_PI}});
        return r;
    }
    r.fail("no_common_chart", Json{{"at", point_json(a.at)}, {"x", point_json(a.x)}, {"y", point_json(a.y)}});
    return r;
}

std::vector<BuildingPoint> default_local_points(const Scene& s)
{
    if (!s.points.empty()) return s.points;
    const AtlasBuilding& B = *s.building;
    std::vector<BuildingPoint> out;
    for (const auto& [k, P] : s.polytopes)
        for (const Vec& v : polytope_vertices(B.complex(), P))
            if (!on_box(B.complex(), v) && B.in_chart(k, v)) out.push_back({k, v});
    return out;
}

ConvexityReport length_metric_report(const AtlasBuilding& B, const BuildingSubset& S,
                                     const std::vector<std::pair<BuildingPoint, BuildingPoint>>& pairs, double tol)
{
    ConvexityReport r;
    r.check = "length_metric";
    r.tolerance = tol;
    for (const auto& [x, y] : pairs) {
        if (!subset_contains(B, S, x) || !subset_contains(B, S, y)) throw InputError("length_metric: pair point outside the set");
        double amb = B.geodesic(x, y).length;
        double in = length_metric_path(B, S, x, y).length;
        Json d{{"x", point_json(x)}, {"y", point_json(y)}, {"ambient", amb}, {"intrinsic", in}};
        if (!(std::abs(in - amb) <= tol)) r.fail("length_gap", d);
        else r.note("distances", d);
    }
    return r;
}

ConvexityReport ascend_report(const Scene& s, const Polytope& A, const BuildingSubset& S, double tol, std::uint64_t seed)
{
    const AtlasBuilding& B = *s.building;
    std::vector<std::pair<Json, ConvexityReport>> cases;
    int exits = 0;
    auto run = [&](const BuildingPoint& x, const BuildingPoint& y) {
        auto r = verify_ascending_propagation(B, A, x, y, s.grid, tol);
        exits += r.first("exit") != nullptr;
        cases.push_back({Json{{"x", point_json(x)}, {"y", point_json(y)}}, r});
    };
    for (const auto& [x, y] : s.pairs) run(x, y);
    std::mt19937_64 rng(seed);
    int made = 0;
    for (int tries = 0; made < s.random_geodesics && tries < 64 * (s.random_geodesics + 1); ++tries) {
        auto x = random_chart_point(B, rng), y = random_chart_point(B, rng);
        if (!x || !y || *x == *y || !subset_contains(B, S, *x)) continue;
        run(*x, *y);
        ++made;
    }
    auto r = merge("ascending_propagation", tol, cases);
    r.note("exits", Json{{"geodesics", cases.size()}, {"exiting", exits}});
    return r;
}

ConvexityReport key_inclusion_report(const Complex& cx, const Polytope& A, const Cell& C)
{
    ConvexityReport r;
    r.check = "key_halfspace_inclusion";
    for (int w : cx.facet_walls(C)) {
        const Wall& h = cx.walls()[static_cast<std::size_t>(w)];
        const int side = -side_sign(C.point, h);
        auto k = key_halfspace_inclusion(cx, A, h, side);
        Json d{{"wall", to_string(h)}, {"side", side}};
        if (k.first("precondition_failed")) {
            d["skipped"] = k.first("precondition_failed")->data;
            r.note("wall", d);
        } else if (!k.verdict) {
            for (const auto& x : k.witnesses) {
                Json e = x.data;
                e["wall"] = to_string(h);
                r.fail(x.kind, e);
            }
        } else {
            r.note("wall", d);
        }
    }
    return r;
}

void run_circle(const Scene& s, const std::vector<std::string>& checks, double tol, RunReport& out)
{
    LinkSpace c = unit_circle();
    const LinkSubset& S = s.circle->set;
    for (const auto& name : checks) {
        if (name == "local") {
            std::vector<Direction> strata = subset_boundary(c, S);
            for (int v : S.vertices) strata.push_back(c.vertex_direction(v));
            for (const auto& a : S.subarcs) strata.push_back(c.arc_direction(a.arc, (a.t0 + a.t1) / 2));
            std::sort(strata.begin(), strata.end());
            strata.erase(std::unique(strata.begin(), strata.end()), strata.end());
            std::vector<std::pair<Json, ConvexityReport>> cases;
            for (const auto& d : strata) cases.push_back({c.direction_json(d), is_locally_convex_in_link(S, c, d)});
            out.reports.push_back(merge("local_convexity", tol, cases));
        } else if (name == "global") {
            out.reports.push_back(is_pi_convex(S, c, tol));
        } else if (name == "length_metric") {
            ConvexityReport r;
            r.check = "length_metric";
            r.tolerance = tol;
            for (const auto& [a, b] : s.circle->pairs) {
                if (!subset_contains(c, S, a) || !subset_contains(c, S, b)) throw InputError("length_metric: pair direction outside the set");
                LinkPath g = c.geodesic(a, b);
                double in = subset_distance(c, S, a, b);
                // interior points of the ambient geodesic lying outside S
                int outside = 0, total = 0;
                for (const auto& seg : g.segments)
                    for (int j = 1; j < 16; ++j) {
                        Q t = seg.t0 + (seg.t1 - seg.t0) * frac(j, 16);
                        ++total;
                        outside += !subset_contains(c, S, c.arc_direction(seg.arc, t));
                    }
                Json d{{"from", c.direction_json(a)}, {"to", c.direction_json(b)}, {"ambient", g.length},
                       {"intrinsic", in}, {"ambient_interior_outside", total > 0 && outside == total}};
                if (!(std::abs(in - g.length) <= tol)) r.fail("length_gap", d);
                else r.note("distances", d);
            }
            out.reports.push_back(r);
        }
    }
}

} // namespace

RunReport run_scene(const Scene& s, const RunOverrides& o)
{
    RunReport out;
    out.scene = s.name;
    out.scene_hash = s.hash;
    out.seed = o.seed.value_or(s.seed);
    out.samples = o.samples.value_or(s.samples);
    out.tol = o.tol.value_or(s.tol);
    const WallMode mode = o.mode.value_or(s.mode);

    std::set<std::string> wanted;
    for (const auto& c : o.checks.empty() ? s.checks : o.checks) {
        if (std::find(check_order().begin(), check_order().end(), c) == check_order().end())
            throw InputError("unknown check '" + c + "'");
        wanted.insert(c);
    }
    std::vector<std::string> checks;
    for (const auto& c : check_order())
        if (wanted.count(c)) checks.push_back(c);

    if (s.is_circle()) {
        for (const auto& c : checks)
            if (c != "local" && c != "global" && c != "length_metric")
                throw InputError("check '" + c + "' does not apply to circle scenes");
        run_circle(s, checks, out.tol, out);
        return out;
    }

    const AtlasBuilding& B = *s.building;
    const Complex& cx = B.complex();
    std::optional<BuildingSubset> S;
    auto subset = [&]() -> const BuildingSubset& {
        if (!S) S = s.subset();
        return *S;
    };
    for (const auto& name : checks) {
        if (name == "validate") {
            out.reports.push_back(validate_atlas(B));
        } else if (name == "normal") {
            out.reports.push_back(check_normal_condition(cx, s.base_polytope(), B.center()));
        } else if (name == "weak_normal") {
            out.reports.push_back(check_weak_normal_condition(cx, s.base_polytope(), B.center(), mode));
        } else if (name == "weak_normal_two") {
            out.reports.push_back(check_weak_normal_condition(cx, s.base_polytope(), B.center(), WallMode::two_closest));
        } else if (name == "thicken") {
            if (s.epsilons.empty()) throw InputError("thicken needs verification.epsilons");
            for (const Q& e : s.epsilons) {
                auto r = check_thickened_weak_normal(cx, s.base_polytope(), e, B.center(), out.tol);
                r.note("eps", Json(to_string(e)));
                out.reports.push_back(r);
            }
        } else if (name == "key_inclusion") {
            out.reports.push_back(key_inclusion_report(cx, s.base_polytope(), B.reference_chamber()));
        } else if (name == "preimage") {
            out.reports.push_back(preimage_report(B, s.base_polytope(), subset(), out.samples, out.seed));
        } else if (name == "angle") {
            if (!s.angle) throw InputError("angle needs verification.angle");
            out.reports.push_back(angle_report(B, *s.angle));
        } else if (name == "local") {
            std::vector<std::pair<Json, ConvexityReport>> cases;
            for (const auto& p : default_local_points(s)) cases.push_back({point_json(p), is_locally_convex_at(B, subset(), p)});
            out.reports.push_back(merge("local_convexity", out.tol, cases));
        } else if (name == "global") {
            GlobalOptions g;
            g.samples = out.samples;
            g.tol = out.tol;
            g.seed = out.seed;
            g.seeded_pairs = s.pairs;
            out.reports.push_back(verify_global_convexity(B, subset(), g));
        } else if (name == "length_metric") {
            out.reports.push_back(length_metric_report(B, subset(), s.pairs, out.tol));
        } else if (name == "ascend") {
            out.reports.push_back(ascend_report(s, s.base_polytope(), subset(), out.tol, out.seed));
        }
    }
    return out;
}

std::vector<std::string> list_scenarios(const std::filesystem::path& dir, const std::string& filter)
{
    std::vector<std::string> out;
    if (!std::filesystem::is_directory(dir)) throw InputError("scene directory " + dir.string() + " not found");
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".json") continue;
        std::string stem = e.path().stem().string();
        if (stem.size() >= 9 && stem.compare(stem.size() - 9, 9, ".expected") == 0) continue;
        if (stem.find(filter) != std::string::npos) out.push_back(stem);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace cvxbuild
