#include "cvxbuild/geom.hpp"

#include <algorithm>

namespace cvxbuild {

std::vector<Vec> clip_convex(const std::vector<Vec>& cycle, const Halfspace& h)
{
    if (cycle.empty()) return {};
    const int rank = cycle.front().size();
    if (rank == 1) {
        // Interval endpoints (possibly a single point).
        Q lo = cycle.front()[0], hi = cycle.front()[0];
        for (const auto& v : cycle) {
            lo = std::min(lo, v[0]);
            hi = std::max(hi, v[0]);
        }
        const Q& c = h.normal[0];
        if (c == 0) {
            if (h.offset >= 0) return cycle;
            return {};
        }
        Q bound = h.offset / c;
        if (c > 0) hi = std::min(hi, bound);
        else lo = std::max(lo, bound);
        if (lo > hi) return {};
        if (lo == hi) return {Vec(lo)};
        return {Vec(lo), Vec(hi)};
    }
    std::vector<Vec> out;
    const std::size_t n = cycle.size();
    if (n == 1) {
        if (dot(h.normal, cycle[0]) <= h.offset) out.push_back(cycle[0]);
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& a = cycle[i];
        const Vec& b = cycle[(i + 1) % n];
        Q fa = dot(h.normal, a) - h.offset;
        Q fb = dot(h.normal, b) - h.offset;
        if (fa <= 0) out.push_back(a);
        if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
            Q t = fa / (fa - fb);
            out.push_back(a + (b - a) * t);
        }
    }
    return simplify_cycle(std::move(out));
}

std::vector<Vec> simplify_cycle(std::vector<Vec> cycle)
{
    if (cycle.empty()) return cycle;
    if (cycle.front().size() == 1) return cycle;
    std::vector<Vec> dedup;
    for (auto& v : cycle)
        if (dedup.empty() || dedup.back() != v) dedup.push_back(std::move(v));
    while (dedup.size() > 1 && dedup.front() == dedup.back()) dedup.pop_back();
    if (dedup.size() <= 2) return dedup;
    bool changed = true;
    while (changed && dedup.size() > 2) {
        changed = false;
        const std::size_t n = dedup.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec& prev = dedup[(i + n - 1) % n];
            const Vec& cur = dedup[i];
            const Vec& next = dedup[(i + 1) % n];
            if (det(cur - prev, next - cur) == 0) {
                dedup.erase(dedup.begin() + static_cast<long>(i));
                changed = true;
                break;
            }
        }
    }
    if (dedup.size() == 2 && dedup[0] == dedup[1]) dedup.pop_back();
    return dedup;
}

std::vector<Vec> square_cycle(int rank, const Q& r)
{
    if (rank == 1) return {Vec(Q(-r)), Vec(r)};
    return {Vec(Q(-r), Q(-r)), Vec(r, Q(-r)), Vec(r, r), Vec(Q(-r), r)};
}

std::vector<Vec> convex_hull(std::vector<Vec> points)
{
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() <= 2) return points;
    std::vector<Vec> hull(2 * points.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        while (k >= 2 && det(hull[k - 1] - hull[k - 2], points[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = points[i];
    }
    for (std::size_t i = points.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && det(hull[k - 1] - hull[k - 2], points[i - 1] - hull[k - 2]) <= 0) --k;
        hull[k++] = points[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

std::optional<std::pair<Q, Q>> segment_interval(const Vec& p, const Vec& q, const std::vector<Halfspace>& hs)
{
    Q lo = 0, hi = 1;
    Vec d = q - p;
    for (const auto& h : hs) {
        Q a = dot(h.normal, d);
        Q b = h.offset - dot(h.normal, p);
        // a t <= b
        if (a == 0) {
            if (b < 0) return std::nullopt;
            continue;
        }
        Q t = b / a;
        if (a > 0) hi = std::min(hi, t);
        else lo = std::max(lo, t);
        if (lo > hi) return std::nullopt;
    }
    return std::make_pair(lo, hi);
}

int affine_dimension(const std::vector<Vec>& cycle)
{
    if (cycle.empty()) return -1;
    if (cycle.size() == 1) return 0;
    if (cycle.front().size() == 1) return cycle.front() == cycle.back() ? 0 : 1;
    for (std::size_t i = 2; i < cycle.size(); ++i)
        if (det(cycle[1] - cycle[0], cycle[i] - cycle[0]) != 0) return 2;
    return 1;
}

Vec centroid(const std::vector<Vec>& pts)
{
    Vec s(pts.front().size());
    for (const auto& p : pts) s += p;
    return s * frac(1, static_cast<long>(pts.size()));
}

} // namespace cvxbuild
