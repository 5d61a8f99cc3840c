#include "cvxbuild/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace cvxbuild {

namespace {

// Upper triangular L with L^T L = gram: y = L x is an isometric picture.
struct Picture {
    double a, b, c;
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;  // view box in y coordinates
    double scale = 1;

    explicit Picture(const Mat& g)
    {
        a = std::sqrt(to_double(g(0, 0)));
        b = to_double(g(0, 1)) / a;
        c = std::sqrt(to_double(g(1, 1)) - b * b);
    }
    std::array<double, 2> y(double u, double v) const { return {a * u + b * v, c * v}; }
    std::array<double, 2> y(const Vec& x) const { return y(to_double(x[0]), to_double(x[1])); }
    // pixel coordinates (y axis flipped)
    std::array<double, 2> px(const std::array<double, 2>& p) const
    {
        return {(p[0] - x0) * scale + 20, (y1 - p[1]) * scale + 20};
    }
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::abs(v) < 5e-4 ? 0.0 : v);
    return buf;
}

std::optional<Vec> parse_vec(const std::string& s)
{
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') return std::nullopt;
    std::string body = s.substr(1, s.size() - 2);
    std::vector<Q> cs;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t comma = body.find(',', start);
        std::string part = body.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            cs.push_back(parse_rational(part));
        } catch (const InputError&) {
            return std::nullopt;
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (cs.size() == 1) return Vec(cs[0]);
    if (cs.size() == 2) return Vec(cs[0], cs[1]);
    return std::nullopt;
}

// Point of a witness field in base chart coordinates: plain vectors are
// base-chart points, {chart, x} objects are retracted.
std::optional<Vec> witness_point(const AtlasBuilding& B, const Json& j)
{
    if (j.is_string()) return parse_vec(j.get<std::string>());
    if (j.is_object() && j.contains("chart") && j.contains("x") && j["x"].is_string()) {
        auto x = parse_vec(j["x"].get<std::string>());
        if (!x) return std::nullopt;
        BuildingPoint p{j["chart"].get<int>(), *x};
        if (p.chart == B.base_chart()) return x;
        return B.retract(p);
    }
    return std::nullopt;
}

std::string polygon(const Picture& pic, const std::vector<Vec>& pts, const std::string& attrs)
{
    std::string s = "<polygon points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto p = pic.px(pic.y(pts[i]));
        s += (i ? " " : "") + num(p[0]) + "," + num(p[1]);
    }
    return s + "\" " + attrs + "/>\n";
}

std::string line(const Picture& pic, const std::array<double, 2>& p, const std::array<double, 2>& q, const std::string& attrs)
{
    auto a = pic.px(p), b = pic.px(q);
    return "<line x1=\"" + num(a[0]) + "\" y1=\"" + num(a[1]) + "\" x2=\"" + num(b[0]) + "\" y2=\"" + num(b[1]) + "\" " +
           attrs + "/>\n";
}

} // namespace

std::string emit_svg(const Scene& scene, const RunReport& report)
{
    if (!scene.building || scene.building->rank() != 2) throw InputError("SVG output needs a rank-2 apartment scene");
    const AtlasBuilding& B = *scene.building;
    const Complex& cx = B.complex();
    Picture pic(cx.datum().gram);

    const std::vector<Vec> chamber = cx.closure_vertices(B.reference_chamber());
    std::vector<std::vector<Vec>> sets;
    for (const auto& [k, P] : scene.polytopes)
        if (k == B.base_chart()) sets.push_back(polytope_vertices(cx, P));

    struct Marker {
        Vec at;
    };
    struct Arrow {
        Vec at, n;
    };
    std::vector<Marker> markers;
    std::vector<Arrow> arrows;
    std::vector<std::vector<Vec>> witness_paths;
    for (const auto& r : report.reports) {
        for (const auto& w : r.witnesses) {
            if (w.kind == "normal_direction") {
                auto at = witness_point(B, w.data["at"]);
                auto n = w.data.contains("n") ? witness_point(B, w.data["n"]) : std::nullopt;
                if (at && n) arrows.push_back({*at, *n});
                continue;
            }
            if (r.verdict) continue;
            for (const char* key : {"at", "point"})
                if (w.data.contains(key))
                    if (auto p = witness_point(B, w.data[key])) markers.push_back({*p});
            if (w.data.contains("x") && w.data.contains("y") && w.data["x"].is_object()) {
                auto xs = w.data["x"], ys = w.data["y"];
                auto px = parse_vec(xs.value("x", "")), py = parse_vec(ys.value("x", ""));
                if (!px || !py) continue;
                BuildingPoint x{xs["chart"].get<int>(), *px}, y{ys["chart"].get<int>(), *py};
                int k = B.common_apartment(x, y);
                Vec p = *B.coords_in(x, k), q = *B.coords_in(y, k);
                std::vector<Vec> path;
                for (int j = 0; j <= 32; ++j) path.push_back(B.retract({k, p + (q - p) * frac(j, 32)}));
                witness_paths.push_back(path);
            }
        }
    }

    // view box: everything of interest plus a margin of one chamber diameter
    double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
    auto grow = [&](const Vec& v) {
        if (on_box(cx, v)) return;
        auto p = pic.y(v);
        for (int i = 0; i < 2; ++i) lo[i] = std::min(lo[i], p[i]), hi[i] = std::max(hi[i], p[i]);
    };
    for (const auto& v : chamber) grow(v);
    for (const auto& s : sets)
        for (const auto& v : s) grow(v);
    for (const auto& m : markers) grow(m.at);
    for (const auto& path : witness_paths)
        for (const auto& v : path) grow(v);
    const double pad = cx.chamber_diameter();
    pic.x0 = lo[0] - pad, pic.x1 = hi[0] + pad, pic.y0 = lo[1] - pad, pic.y1 = hi[1] + pad;
    pic.scale = 560 / std::max(pic.x1 - pic.x0, pic.y1 - pic.y0);
    const double W = (pic.x1 - pic.x0) * pic.scale + 40, H = (pic.y1 - pic.y0) * pic.scale + 40;

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
                      "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
    out += "<title>" + scene.name + "</title>\n";
    out += "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" "
           "orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#2ca02c\"/></marker></defs>\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";

    // walls, one color per parallel family
    static const char* palette[] = {"#7f7f7f", "#8c564b", "#9467bd", "#bcbd22", "#17becf", "#e377c2"};
    std::map<Vec, int> family;
    for (const auto& w : cx.walls()) family.emplace(w.normal, 0);
    int fi = 0;
    for (auto& [n, idx] : family) idx = fi++;
    out += "<g class=\"walls\">\n";
    for (const auto& w : cx.walls()) {
        // covector in picture coordinates: L^T m = n
        const double m0 = to_double(w.normal[0]) / pic.a;
        const double m1 = (to_double(w.normal[1]) - pic.b * m0) / pic.c;
        const double k = to_double(w.offset);
        std::vector<std::array<double, 2>> hits;
        for (double x : {pic.x0, pic.x1})
            if (std::abs(m1) > 1e-12) {
                double y = (k - m0 * x) / m1;
                if (y >= pic.y0 - 1e-9 && y <= pic.y1 + 1e-9) hits.push_back({x, y});
            }
        for (double y : {pic.y0, pic.y1})
            if (std::abs(m0) > 1e-12) {
                double x = (k - m1 * y) / m0;
                if (x >= pic.x0 - 1e-9 && x <= pic.x1 + 1e-9) hits.push_back({x, y});
            }
        if (hits.size() < 2) continue;
        std::sort(hits.begin(), hits.end());
        const int f = family[w.normal];
        out += line(pic, hits.front(), hits.back(),
                    "class=\"wall family-" + std::to_string(f) + "\" stroke=\"" + palette[f % 6] + "\" stroke-width=\"1\"");
    }
    out += "</g>\n";

    for (const auto& s : sets) {
        if (s.size() >= 3) out += polygon(pic, s, "class=\"set\" fill=\"#fd8d3c\" fill-opacity=\"0.5\" stroke=\"#a63603\"");
        else if (s.size() == 2) out += line(pic, pic.y(s[0]), pic.y(s[1]), "class=\"set\" stroke=\"#a63603\" stroke-width=\"3\"");
    }
    out += polygon(pic, chamber, "class=\"chamber\" fill=\"#6baed6\" fill-opacity=\"0.6\" stroke=\"#08519c\"");
    const double alen = 0.35 * cx.chamber_diameter();
    for (const auto& a : arrows) {
        auto p = pic.y(a.at), v = pic.y(a.n);
        double len = std::hypot(v[0], v[1]);
        if (len == 0) continue;
        std::array<double, 2> q{p[0] + v[0] / len * alen, p[1] + v[1] / len * alen};
        out += line(pic, p, q, "class=\"normal\" stroke=\"#2ca02c\" stroke-width=\"1.5\" marker-end=\"url(#arrow)\"");
    }
    for (const auto& path : witness_paths) {
        out += "<polyline class=\"witness-path\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"4,3\" points=\"";
        for (std::size_t i = 0; i < path.size(); ++i) {
            auto p = pic.px(pic.y(path[i]));
            out += (i ? " " : "") + num(p[0]) + "," + num(p[1]);
        }
        out += "\"/>\n";
    }
    for (const auto& m : markers) {
        auto p = pic.px(pic.y(m.at));
        out += "<circle class=\"witness\" cx=\"" + num(p[0]) + "\" cy=\"" + num(p[1]) + "\" r=\"4\" fill=\"#d62728\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace cvxbuild
