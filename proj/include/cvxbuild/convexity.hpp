#pragma once

#include "cvxbuild/building.hpp"

#include <cstdint>
#include <vector>

namespace cvxbuild {

/// Closed convex polytope {x : h.normal . x <= h.offset for all h}; may be
/// unbounded or lower dimensional.
struct Polytope {
    std::vector<Halfspace> halfspaces;

    /// Convex hull of points (rank 1 or 2); lower dimensional hulls get
    /// equality pairs.
    static Polytope hull(int rank, std::vector<Vec> points);
    bool contains(const Vec& x) const;
    /// Indices of the constraints tight at x.
    std::vector<int> active(const Vec& x) const;
    /// Image under an invertible affine map.
    Polytope transformed(const AffineMap& f) const;
    /// Preimage under an affine map: {x : f(x) in P}.
    Polytope pulled_back(const AffineMap& f) const;
};

/// Finite union of polytopes.
struct PolyhedralSet {
    std::vector<Polytope> pieces;

    bool contains(const Vec& x) const;
};

/// Vertices of P clipped to the coordinate box around the modeled region
/// (counterclockwise cycle in rank 2, endpoints in rank 1).
std::vector<Vec> polytope_vertices(const Complex& cx, const Polytope& P);
int polytope_dimension(const Complex& cx, const Polytope& P);
/// Clipped vertices that sit on the artificial box.
bool on_box(const Complex& cx, const Vec& v);
/// Nearest point of P (Gram metric), exact.
Vec nearest_point(const Complex& cx, const Polytope& P, const Vec& x);
Q distance2_to(const Complex& cx, const Polytope& P, const Vec& x);

/// A subset of an atlas building given per chart.
struct BuildingSubset {
    std::vector<PolyhedralSet> charts;
};

bool subset_contains(const AtlasBuilding& B, const BuildingSubset& S, const BuildingPoint& p);
/// The subset of the base chart only (used for thin buildings).
BuildingSubset base_subset(const AtlasBuilding& B, const PolyhedralSet& A);
/// rho^{-1}(A): charts containing the center pull A back through their
/// folding; other charts are handled chamber by chamber.
BuildingSubset preimage(const AtlasBuilding& B, const Polytope& A);

// Local structure ---------------------------------------------------------------

/// Condition (1) at a along one test direction per face of the local
/// arrangement, for segments of Gram length up to eps.
bool is_cone_point(const Complex& cx, const PolyhedralSet& A, const Vec& a, const Q& eps);
LinkSubset link_of_set(const Complex& cx, const PolyhedralSet& A, const Vec& a, const LinkSpace& link, int chart = 0);
LinkSubset link_of_set(const AtlasBuilding& B, const BuildingSubset& S, const BuildingLink& L);
ConvexityReport is_locally_convex_at(const Complex& cx, const PolyhedralSet& A, const Vec& a);
ConvexityReport is_locally_convex_at(const AtlasBuilding& B, const BuildingSubset& S, const BuildingPoint& a);

/// Representative boundary points: vertices, wall crossings of boundary
/// edges and one point per open edge piece between them.
std::vector<Vec> boundary_strata(const Complex& cx, const Polytope& A);

/// Side of the wall h holding the center (+1 or -1).
int center_side(const BuildingCenter& c, const Wall& h);

/// A nonzero vector of cone(generators) satisfying kappa . n <= 0 for all
/// constraints, if one exists.
std::optional<Vec> cone_point(int rank, const std::vector<Vec>& generators, const std::vector<Vec>& constraints);

ConvexityReport check_normal_condition(const Complex& cx, const Polytope& A, const BuildingCenter& center);

enum class WallMode { all_walls, two_closest };
/// Normal vectors are taken inside the affine hull of A (see the notes on
/// degenerate sets).
ConvexityReport check_weak_normal_condition(const Complex& cx, const Polytope& A, const BuildingCenter& center,
                                            WallMode mode);

/// Outer polytopal approximation of A + eps (Hausdorff error below eps/32
/// for bounded A; facets of A are shifted by eps up to 2^-20 eps rounding).
Polytope thicken(const Complex& cx, const Polytope& A, const Q& eps);
/// Weak normal condition of the exact set A + eps via nearest points.
ConvexityReport check_thickened_weak_normal(const Complex& cx, const Polytope& A, const Q& eps,
                                            const BuildingCenter& center, double tol = 1e-9);

/// Shortest path inside S (visibility graph over piece vertices);
/// infinite length when x and y are in different components.
PolyPath length_metric_path(const AtlasBuilding& B, const BuildingSubset& S, const BuildingPoint& x,
                            const BuildingPoint& y);

/// Tangents v, w of rho o gamma at gamma(t) for the geodesic from x to y and
/// the vector m pointing away from A; verdict (v,m) >= 0 and (w,m) >= 0.
ConvexityReport is_ascending_at(const AtlasBuilding& B, const Polytope& A, const BuildingPoint& x,
                                const BuildingPoint& y, const Q& t);
/// d_A o rho o gamma increases after gamma leaves rho^{-1}(A), sampled on a
/// uniform grid plus every wall crossing.
ConvexityReport verify_ascending_propagation(const AtlasBuilding& B, const Polytope& A, const BuildingPoint& x,
                                             const BuildingPoint& y, int grid, double tol = 1e-9);

struct GlobalOptions {
    int samples = 1000;
    double tol = 1e-9;
    std::uint64_t seed = 1;
    /// Extra pairs tested first in phase 2.
    std::vector<std::pair<BuildingPoint, BuildingPoint>> seeded_pairs;
};
ConvexityReport verify_global_convexity(const AtlasBuilding& B, const BuildingSubset& S, const GlobalOptions& opt);

/// H+ = {side * (c.x - k) >= 0}. Checks H+ n A inside (H n A) + H^perp.
ConvexityReport key_halfspace_inclusion(const Complex& cx, const Polytope& A, const Wall& h, int side);

} // namespace cvxbuild
