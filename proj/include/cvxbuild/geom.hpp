#pragma once

#include "cvxbuild/rational.hpp"

#include <optional>
#include <vector>

namespace cvxbuild {

/// Closed halfspace {x : normal . x <= offset}; `normal` is a covector.
struct Halfspace {
    Vec normal;
    Q offset;
    /// Tag of the originating constraint (-1 for modeled-region clipping).
    int tag = -1;
};

/// Exact clip of a convex point cycle (polygon, segment or point, rank 2) or
/// of an interval given by its endpoints (rank 1). Degenerate inputs stay
/// degenerate; consecutive duplicates are removed.
std::vector<Vec> clip_convex(const std::vector<Vec>& cycle, const Halfspace& h);

/// Removes consecutive duplicates and collinear middle points from a convex
/// cycle, keeping the counterclockwise order.
std::vector<Vec> simplify_cycle(std::vector<Vec> cycle);

/// Axis-aligned square [-r, r]^n as a point cycle (counterclockwise).
std::vector<Vec> square_cycle(int rank, const Q& r);

/// Convex hull (counterclockwise, no collinear points) of a rank-2 point set.
std::vector<Vec> convex_hull(std::vector<Vec> points);

/// Parameter range {t in [0,1] : p + t (q - p) satisfies all halfspaces}.
std::optional<std::pair<Q, Q>> segment_interval(const Vec& p, const Vec& q, const std::vector<Halfspace>& hs);

/// Affine dimension of a convex point cycle.
int affine_dimension(const std::vector<Vec>& cycle);

/// Average of the points (exact).
Vec centroid(const std::vector<Vec>& pts);

} // namespace cvxbuild
