#include "cvxbuild/coxeter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <unordered_map>
#include <set>

namespace cvxbuild {

namespace {

struct TypeInfo {
    TypeTag tag;
    const char* name;
};

constexpr TypeInfo kTypes[] = {
    {TypeTag::A1affine, "A1affine"}, {TypeTag::A1xA1, "A1xA1"},       {TypeTag::A2affine, "A2affine"},
    {TypeTag::C2affine, "C2affine"}, {TypeTag::G2affine, "G2affine"},
};

Mat mat2(long a, long b, long c, long d)
{
    Mat m(2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

Wall wall1(long a, long k) { return make_wall(Vec(Q(a)), Q(k)); }
Wall wall2(long a, long b, long k) { return make_wall(Vec(Q(a), Q(b)), Q(k)); }

// Expected Coxeter matrix entries (0 = infinite order) in simple-wall order.
std::vector<std::vector<int>> coxeter_matrix(TypeTag t)
{
    switch (t) {
    case TypeTag::A1affine:
        return {{1, 0}, {0, 1}};
    case TypeTag::A1xA1:
        return {{1, 0, 2, 2}, {0, 1, 2, 2}, {2, 2, 1, 0}, {2, 2, 0, 1}};
    case TypeTag::A2affine:
        return {{1, 3, 3}, {3, 1, 3}, {3, 3, 1}};
    case TypeTag::C2affine:
        return {{1, 4, 4}, {4, 1, 2}, {4, 2, 1}};
    case TypeTag::G2affine:
        return {{1, 6, 2}, {6, 1, 3}, {2, 3, 1}};
    }
    return {};
}

Q ceil_sqrt_bound(double x) { return Q(static_cast<long>(std::ceil(std::sqrt(std::max(x, 0.0)))) + 1); }

} // namespace

TypeTag parse_type_tag(const std::string& name)
{
    for (const auto& t : kTypes)
        if (name == t.name) return t.tag;
    throw InputError("unknown type_tag '" + name + "'");
}

std::string to_string(TypeTag t)
{
    for (const auto& k : kTypes)
        if (k.tag == t) return k.name;
    return "?";
}

bool Wall::operator<(const Wall& o) const
{
    if (normal != o.normal) return normal < o.normal;
    return offset < o.offset;
}

Wall make_wall(const Vec& normal, const Q& offset)
{
    if (normal.is_zero()) throw InputError("wall normal must be nonzero");
    mpz_class lcm_den = 1;
    for (int i = 0; i < normal.size(); ++i) lcm_den = lcm(lcm_den, normal[i].get_den());
    lcm_den = lcm(lcm_den, offset.get_den());
    Vec n = normal * Q(lcm_den);
    Q k = offset * Q(lcm_den);
    mpz_class g = 0;
    for (int i = 0; i < n.size(); ++i) g = gcd(g, n[i].get_num());
    Q scale = Q(1) / Q(g);
    for (int i = 0; i < n.size(); ++i)
        if (n[i] != 0) {
            if (n[i] < 0) scale = -scale;
            break;
        }
    Wall w{n * scale, k * scale};
    w.offset.canonicalize();
    return w;
}

std::string to_string(const Wall& w)
{
    std::string s;
    for (int i = 0; i < w.normal.size(); ++i) {
        if (i) s += " + ";
        s += to_string(w.normal[i]) + "*x" + std::to_string(i + 1);
    }
    return s + " = " + to_string(w.offset);
}

int side_sign(const Vec& p, const Wall& h) { return sgn(Q(dot(h.normal, p) - h.offset)); }

Side side_of_wall(const Vec& p, const Wall& h)
{
    int s = side_sign(p, h);
    return s < 0 ? Side::minus : (s == 0 ? Side::zero : Side::plus);
}

CoxeterDatum CoxeterDatum::of_type(TypeTag t)
{
    CoxeterDatum d;
    d.type = t;
    switch (t) {
    case TypeTag::A1affine:
        d.rank = 1;
        d.gram = Mat::identity(1);
        d.simple_walls = {wall1(1, 0), wall1(1, 1)};
        break;
    case TypeTag::A1xA1:
        d.rank = 2;
        d.gram = Mat::identity(2);
        d.simple_walls = {wall2(1, 0, 0), wall2(1, 0, 1), wall2(0, 1, 0), wall2(0, 1, 1)};
        break;
    case TypeTag::A2affine:
        // Simple-root coordinates.
        d.rank = 2;
        d.gram = mat2(2, -1, -1, 2);
        d.simple_walls = {wall2(2, -1, 0), wall2(-1, 2, 0), wall2(1, 1, 1)};
        break;
    case TypeTag::C2affine:
        d.rank = 2;
        d.gram = Mat::identity(2);
        d.simple_walls = {wall2(0, 1, 0), wall2(1, -1, 0), wall2(1, 1, 1)};
        break;
    case TypeTag::G2affine:
        // Simple-root coordinates, short root first.
        d.rank = 2;
        d.gram = mat2(2, -3, -3, 6);
        d.simple_walls = {wall2(2, -3, 0), wall2(-3, 6, 0), wall2(0, 1, 1)};
        break;
    }
    return d;
}

CoxeterDatum CoxeterDatum::custom(TypeTag t, Mat gram, std::vector<Wall> simple_walls)
{
    CoxeterDatum d;
    d.type = t;
    d.rank = gram.size();
    d.gram = std::move(gram);
    for (auto& w : simple_walls) {
        if (w.normal.size() != d.rank) throw InputError("simple wall dimension does not match gram");
        w = make_wall(w.normal, w.offset);
    }
    d.simple_walls = std::move(simple_walls);
    d.validate();
    return d;
}

Q CoxeterDatum::inner(const Vec& u, const Vec& v) const { return dot(u, gram * v); }

double CoxeterDatum::length(const Vec& v) const { return std::sqrt(to_double(norm2(v))); }

Q CoxeterDatum::cos2(const Vec& u, const Vec& v) const
{
    Q uv = inner(u, v);
    return uv * uv / (norm2(u) * norm2(v));
}

double CoxeterDatum::angle(const Vec& u, const Vec& v) const
{
    if (u.is_zero() || v.is_zero()) throw GeometryError("angle with a zero vector");
    double uv = to_double(inner(u, v));
    if (rank == 1) return uv > 0 ? 0.0 : M_PI;
    // atan2 of the Gram area and the inner product stays accurate near 0 and pi.
    double area = std::sqrt(to_double(gram.determinant())) * std::abs(to_double(det(u, v)));
    return std::atan2(area, uv);
}

Vec CoxeterDatum::covector_to_vector(const Vec& c) const { return gram.inverse() * c; }

Vec CoxeterDatum::vector_to_covector(const Vec& v) const { return gram * v; }

AffineMap CoxeterDatum::reflection(const Wall& h) const
{
    Vec g = covector_to_vector(h.normal);
    Q n = dot(h.normal, g);
    AffineMap f;
    f.linear = Mat::identity(rank);
    for (int i = 0; i < rank; ++i)
        for (int j = 0; j < rank; ++j) f.linear(i, j) -= 2 * g[i] * h.normal[j] / n;
    f.shift = g * (2 * h.offset / n);
    return f;
}

Wall CoxeterDatum::transform(const AffineMap& f, const Wall& h) const
{
    Mat inv = f.linear.inverse();
    Vec c = inv.transpose() * h.normal;
    Q k = h.offset + dot(h.normal, inv * f.shift);
    return make_wall(c, k);
}

AffineMap CoxeterDatum::weyl_element(const std::vector<int>& word) const
{
    AffineMap f = AffineMap::identity(rank);
    for (int i : word) {
        if (i < 0 || i >= static_cast<int>(simple_walls.size())) throw InputError("weyl word index out of range");
        f = f.after(reflection(simple_walls[static_cast<std::size_t>(i)]));
    }
    return f;
}

int CoxeterDatum::relation_order(int i, int j, int max_order) const
{
    AffineMap st = reflection(simple_walls[static_cast<std::size_t>(i)])
                       .after(reflection(simple_walls[static_cast<std::size_t>(j)]));
    AffineMap p = st;
    AffineMap id = AffineMap::identity(rank);
    for (int m = 1; m <= max_order; ++m) {
        if (p == id) return m;
        p = p.after(st);
    }
    return 0;
}

void CoxeterDatum::validate() const
{
    if (rank < 1 || rank > 2) throw InputError("unsupported rank");
    if (gram.size() != rank) throw InputError("gram size does not match rank");
    if (!(gram == gram.transpose())) throw InputError("gram is not symmetric");
    if (gram(0, 0) <= 0 || gram.determinant() <= 0) throw InputError("gram is not positive definite");
    auto expected = coxeter_matrix(type);
    if (expected.size() != simple_walls.size()) throw InputError("simple wall count does not match type " + to_string(type));
    for (const auto& w : simple_walls) {
        Mat l = reflection(w).linear;
        if (!(l.transpose() * gram * l == gram)) throw InputError("reflection does not preserve gram");
    }
    for (std::size_t i = 0; i < simple_walls.size(); ++i)
        for (std::size_t j = i + 1; j < simple_walls.size(); ++j) {
            int m = relation_order(static_cast<int>(i), static_cast<int>(j));
            if (m != expected[i][j])
                throw InputError("Coxeter relation fails for simple walls " + std::to_string(i) + ", " + std::to_string(j));
        }
}

Complex::Complex(CoxeterDatum datum, int radius_in_diameters) : datum_(std::move(datum))
{
    if (radius_in_diameters < 1) throw InputError("region radius must be positive");
    datum_.validate();
    const int n = datum_.rank;

    // Fundamental chamber: the bounded full-dimensional cell of the simple walls.
    const auto& sw = datum_.simple_walls;
    const Q big = 1000;
    std::vector<Vec> chamber;
    for (unsigned mask = 0; mask < (1u << sw.size()) && chamber.empty(); ++mask) {
        std::vector<Vec> cyc = square_cycle(n, big);
        for (std::size_t i = 0; i < sw.size(); ++i) {
            Q s = (mask >> i) & 1u ? 1 : -1;
            cyc = clip_convex(cyc, {sw[i].normal * s, sw[i].offset * s});
        }
        if (affine_dimension(cyc) != n) continue;
        bool bounded = true;
        for (const auto& v : cyc)
            for (int i = 0; i < n; ++i)
                if (abs(v[i]) == big) bounded = false;
        if (bounded) chamber = cyc;
    }
    if (chamber.empty()) throw InputError("simple walls do not bound a chamber");
    diam2_ = 0;
    for (const auto& a : chamber)
        for (const auto& b : chamber) diam2_ = std::max(diam2_, datum_.norm2(a - b));

    const Q r = radius_in_diameters;
    region2_ = r * r * diam2_;
    const Q keep2 = (r + 2) * (r + 2) * diam2_;
    const Q search2 = (r + 4) * (r + 4) * diam2_;
    Mat ginv = datum_.gram.inverse();
    double max_diag = 0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, to_double(ginv(i, i)));
    box_ = ceil_sqrt_bound(to_double(search2) * max_diag);

    auto dist2 = [&](const Wall& w) -> Q { return w.offset * w.offset / dot(w.normal, ginv * w.normal); };

    // Closure of the simple walls under reflections, restricted to a ball.
    // Reflections are involutions, so the image of {c.x = k} under
    // x -> Lx + t is {(L^T c).x = k - c.t}.
    auto image = [&](const AffineMap& s, const Wall& w) {
        return make_wall(s.linear.transpose() * w.normal, w.offset - dot(w.normal, s.shift));
    };
    std::set<Wall> found(sw.begin(), sw.end());
    std::vector<Wall> order(sw.begin(), sw.end());
    std::vector<AffineMap> refl;
    for (const auto& w : sw) refl.push_back(datum_.reflection(w));
    auto add = [&](const Wall& img) {
        if (dist2(img) > search2 || !found.insert(img).second) return;
        order.push_back(img);
        refl.push_back(datum_.reflection(img));
    };
    for (std::size_t next = 0; next < order.size(); ++next) {
        for (std::size_t i = 0; i < next; ++i) {
            add(image(refl[i], order[next]));
            add(image(refl[next], order[i]));
        }
    }
    for (const auto& w : found)
        if (dist2(w) <= keep2) walls_.push_back(w);
    for (const auto& w : walls_) wall_norm2_.push_back(dot(w.normal, ginv * w.normal));
    for (std::size_t i = 0; i < walls_.size(); ++i) {
        const Wall& w = walls_[i];
        approx_.push_back({to_double(w.normal[0]), n > 1 ? to_double(w.normal[1]) : 0.0, to_double(w.offset),
                           to_double(wall_norm2_[i])});
    }
    diam2_d_ = to_double(diam2_);
    cell_cache_ = std::make_shared<CellCache>();

    fundamental_ = canonical_cell(centroid(chamber));
}

int Complex::wall_index(const Wall& w) const
{
    auto it = std::lower_bound(walls_.begin(), walls_.end(), w);
    if (it == walls_.end() || !(*it == w)) return -1;
    return static_cast<int>(it - walls_.begin());
}

double Complex::chamber_diameter() const { return std::sqrt(to_double(diam2_)); }

bool Complex::in_region(const Vec& p) const
{
    if (p.size() != rank()) return false;
    return datum_.norm2(p) <= region2_;
}

void Complex::require_in_region(const Vec& p) const
{
    if (p.size() != rank()) throw InputError("point dimension does not match rank");
    if (!in_region(p)) throw GeometryError("point " + to_string(p) + " lies outside the modeled region");
}

std::array<double, 2> Complex::approx(const Vec& p)
{
    return {p.size() > 0 ? to_double(p[0]) : 0.0, p.size() > 1 ? to_double(p[1]) : 0.0};
}

int Complex::fast_side(const std::array<double, 2>& pd, const Vec& p, std::size_t i) const
{
    const WallApprox& a = approx_[i];
    const double f = a.c0 * pd[0] + a.c1 * pd[1] - a.k;
    const double err = 1e-12 * (std::abs(a.c0 * pd[0]) + std::abs(a.c1 * pd[1]) + std::abs(a.k) + 1.0);
    if (f > err) return 1;
    if (f < -err) return -1;
    return side_sign(p, walls_[i]);
}

// Conservative: may report a far wall as near, which only adds redundant
// constraints for its callers.
bool Complex::near(const Vec& p, int w) const
{
    const auto i = static_cast<std::size_t>(w);
    const WallApprox& a = approx_[i];
    auto pd = approx(p);
    const double f = a.c0 * pd[0] + a.c1 * pd[1] - a.k;
    return f * f <= diam2_d_ * a.norm2 * (1.0 + 1e-6) + 1e-9;
}

std::vector<signed char> Complex::sign_vector(const Vec& p) const
{
    auto pd = approx(p);
    std::vector<signed char> s(walls_.size());
    for (std::size_t i = 0; i < walls_.size(); ++i) s[i] = static_cast<signed char>(fast_side(pd, p, i));
    return s;
}

std::vector<int> Complex::walls_through(const Vec& p) const
{
    auto pd = approx(p);
    std::vector<int> out;
    for (std::size_t i = 0; i < walls_.size(); ++i)
        if (fast_side(pd, p, i) == 0) out.push_back(static_cast<int>(i));
    return out;
}

Cell Complex::carrier(const Vec& p) const
{
    require_in_region(p);
    Cell c;
    c.signs = sign_vector(p);
    c.point = p;
    std::vector<Vec> normals;
    for (std::size_t i = 0; i < walls_.size(); ++i)
        if (c.signs[i] == 0) normals.push_back(walls_[i].normal);
    int zr = 0;
    if (!normals.empty()) {
        zr = 1;
        for (std::size_t i = 1; i < normals.size(); ++i)
            if (rank() == 2 && det(normals[0], normals[i]) != 0) zr = 2;
    }
    c.dim = rank() - zr;
    return c;
}

struct Complex::CellCache {
    std::mutex mutex;
    std::unordered_map<std::string, Vec> points;
};

Cell Complex::canonical_cell(const Vec& p) const
{
    Cell c = carrier(p);
    if (c.dim == 0) return c;
    std::string key(c.signs.begin(), c.signs.end());
    {
        std::lock_guard<std::mutex> lock(cell_cache_->mutex);
        auto it = cell_cache_->points.find(key);
        if (it != cell_cache_->points.end()) {
            c.point = it->second;
            return c;
        }
    }
    c.point = centroid(closure_vertices(c));
    std::lock_guard<std::mutex> lock(cell_cache_->mutex);
    cell_cache_->points.emplace(std::move(key), c.point);
    return c;
}

std::vector<Halfspace> Complex::closure_halfspaces(const Cell& c) const
{
    std::vector<Halfspace> hs;
    for (std::size_t i = 0; i < walls_.size(); ++i) {
        const int tag = static_cast<int>(i);
        const Wall& w = walls_[i];
        const int s = c.signs[i];
        if (s == 0) {
            hs.push_back({w.normal, w.offset, tag});
            hs.push_back({-w.normal, Q(-w.offset), tag});
        } else if (near(c.point, tag)) {
            Q sq = -s;
            hs.push_back({w.normal * sq, Q(w.offset * sq), tag});
        }
    }
    return hs;
}

std::vector<Vec> Complex::closure_vertices(const Cell& c) const
{
    std::vector<Vec> cyc = square_cycle(rank(), box_);
    for (const auto& h : closure_halfspaces(c)) cyc = clip_convex(cyc, h);
    return cyc;
}

bool Complex::in_closure(const Cell& c, const Vec& p) const
{
    auto pd = approx(p);
    for (std::size_t i = 0; i < walls_.size(); ++i) {
        int s = fast_side(pd, p, i);
        if (c.signs[i] == 0 ? s != 0 : s == -c.signs[i]) return false;
    }
    return true;
}

bool Complex::is_face(const Cell& sigma, const Cell& tau) const
{
    for (std::size_t i = 0; i < walls_.size(); ++i)
        if (sigma.signs[i] != 0 && sigma.signs[i] != tau.signs[i]) return false;
    return true;
}

std::vector<int> Complex::facet_walls(const Cell& C) const
{
    if (!C.is_chamber()) throw InputError("facet_walls needs a chamber");
    std::vector<Vec> verts = closure_vertices(C);
    std::vector<int> out;
    for (std::size_t i = 0; i < walls_.size(); ++i) {
        if (!near(C.point, static_cast<int>(i))) continue;
        int on = 0;
        for (const auto& v : verts)
            if (dot(walls_[i].normal, v) == walls_[i].offset) ++on;
        if (on >= rank()) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::vector<int> Complex::separating_walls(const Cell& C, const Cell& D) const
{
    std::vector<int> out;
    for (std::size_t i = 0; i < walls_.size(); ++i)
        if (C.signs[i] * D.signs[i] < 0) out.push_back(static_cast<int>(i));
    return out;
}

Cell Complex::reflect_chamber(const Cell& C, int w) const
{
    return canonical_cell(datum_.reflect(walls_[static_cast<std::size_t>(w)], C.point));
}

std::vector<Cell> Complex::chambers_at(const Cell& sigma) const
{
    Cell start = project_chamber_to_cell(fundamental_, sigma);
    std::vector<Cell> out{start};
    std::deque<Cell> queue{start};
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        for (int w : facet_walls(c)) {
            if (sigma.signs[static_cast<std::size_t>(w)] != 0) continue;
            Cell d = reflect_chamber(c, w);
            if (std::find(out.begin(), out.end(), d) != out.end()) continue;
            out.push_back(d);
            queue.push_back(d);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Cell Complex::project_chamber_to_cell(const Cell& C, const Cell& sigma) const
{
    if (!C.is_chamber()) throw InputError("projection needs a chamber");
    if (sigma.is_chamber()) return sigma;
    Q delta = 1;
    for (std::size_t i = 0; i < walls_.size(); ++i) {
        if (sigma.signs[i] == 0) continue;
        Q fs = dot(walls_[i].normal, sigma.point) - walls_[i].offset;
        Q fc = dot(walls_[i].normal, C.point) - walls_[i].offset;
        if (sgn(fc) == sgn(fs)) continue;
        delta = std::min(delta, Q(fs / (fs - fc)));
    }
    delta /= 2;
    return canonical_cell(sigma.point + (C.point - sigma.point) * delta);
}

Gallery Complex::gallery_between(const Cell& C, const Cell& D) const
{
    if (!C.is_chamber() || !D.is_chamber()) throw InputError("gallery needs chambers");
    Gallery g;
    Cell x = C;
    g.chambers.push_back(x);
    while (x != D) {
        std::vector<int> facets = facet_walls(x);
        int pick = -1;
        for (int w : facets)
            if (x.signs[static_cast<std::size_t>(w)] * D.signs[static_cast<std::size_t>(w)] < 0) {
                pick = w;
                break;
            }
        if (pick < 0) throw GeometryError("no separating facet found");
        x = reflect_chamber(x, pick);
        g.chambers.push_back(x);
        g.crossed_walls.push_back(pick);
    }
    return g;
}

std::vector<Q> Complex::wall_crossings(const Vec& p, const Vec& q) const
{
    std::vector<Q> ts;
    auto pd = approx(p), qd = approx(q);
    for (std::size_t i = 0; i < walls_.size(); ++i) {
        if (fast_side(pd, p, i) * fast_side(qd, q, i) >= 0) continue;
        const Wall& w = walls_[i];
        Q fp = dot(w.normal, p) - w.offset;
        Q fq = dot(w.normal, q) - w.offset;
        if (sgn(fp) * sgn(fq) < 0) ts.push_back(fp / (fp - fq));
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

} // namespace cvxbuild
