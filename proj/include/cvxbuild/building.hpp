#pragma once

#include "cvxbuild/coxeter.hpp"
#include "cvxbuild/link.hpp"
#include "cvxbuild/report.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cvxbuild {

/// A copy of Sigma; only points inside the ball (center, radius) belong
/// to the chart.
struct Chart {
    std::string name;
    Vec center;
    Q radius2;
};

/// Convex chamber subcomplex or a union of such pieces, each piece an
/// intersection of wall halfspaces.
using Domain = std::vector<std::vector<Halfspace>>;
bool domain_contains(const Domain& d, const Vec& x);

/// x in `domain` (chart i coordinates) is identified with map(x) in chart j.
struct Gluing {
    int i = 0;
    int j = 0;
    AffineMap map;
    Domain domain;
    std::string name;
};

/// Chamber at infinity: the Weyl-chamber direction `direction` at `base`.
struct SectorGerm {
    Vec base;
    Vec direction;
};

struct BuildingCenter {
    bool at_infinity = false;
    Cell chamber;
    SectorGerm sector;

    static BuildingCenter of_chamber(Cell c);
    static BuildingCenter of_sector(SectorGerm s);
};

struct BuildingPoint {
    int chart = 0;
    Vec x;

    bool operator==(const BuildingPoint& o) const { return chart == o.chart && x == o.x; }
    bool operator<(const BuildingPoint& o) const { return chart != o.chart ? chart < o.chart : x < o.x; }
};

/// One representative of a gluing class; `from_query` maps coordinates of
/// the queried chart to this chart near the queried point.
struct ClassMember {
    int chart;
    Vec x;
    AffineMap from_query;
};

struct PolyPath {
    int chart = 0;
    std::vector<BuildingPoint> breakpoints;
    double length = 0;
};

/// Euclidean building as a finite atlas of apartment charts.
class AtlasBuilding {
public:
    AtlasBuilding(Complex cx, std::vector<Chart> charts, std::vector<Gluing> gluings, int base_chart,
                  BuildingCenter center);

    const Complex& complex() const { return cx_; }
    const CoxeterDatum& datum() const { return cx_.datum(); }
    int rank() const { return cx_.rank(); }
    const std::vector<Chart>& charts() const { return charts_; }
    const std::vector<Gluing>& gluings() const { return gluings_; }
    int base_chart() const { return base_; }
    const BuildingCenter& center() const { return center_; }
    /// Same atlas with another center.
    AtlasBuilding with_center(BuildingCenter c) const;

    bool in_chart(int k, const Vec& x) const;
    /// All representatives of p (p's own chart first). `conflict`, when
    /// given, reports a chart reached with two different coordinates.
    std::vector<ClassMember> point_class(const BuildingPoint& p, std::string* conflict = nullptr) const;
    BuildingPoint canonical_point(const BuildingPoint& p) const;
    std::optional<Vec> coords_in(const BuildingPoint& p, int chart) const;

    /// Reference chamber of the center in the base chart (C, or the deep
    /// chamber of the sector).
    const Cell& reference_chamber() const { return reference_; }
    /// Isometry chart k -> Sigma fixing the center, if chart k contains it.
    const std::optional<AffineMap>& folding(int k) const { return folding_[static_cast<std::size_t>(k)]; }
    bool contains_center(int k) const { return folding(k).has_value(); }

    /// rho_{Sigma, C} or rho_{Sigma, c}, according to the center.
    Vec retract(const BuildingPoint& x) const;
    Vec retract_center_chamber(const BuildingPoint& x) const;
    Vec retract_center_infinity(const BuildingPoint& x) const;
    /// Retraction onto another chart containing the center.
    Vec retract_onto(int target_chart, const BuildingPoint& x) const;
    /// rho restricted to the closed chamber of chart k containing p: an
    /// affine map from chart k coordinates to Sigma.
    AffineMap retraction_on_chamber(int k, const Cell& chamber) const;

    /// Chamber at sigma (a cell of chart k) pointing toward the sector.
    Cell project_chamber_at_infinity(const SectorGerm& c, int chart, const Cell& sigma) const;
    /// Proj_sigma C for a cell of chart k; evaluated in a chart containing
    /// sigma and C. Returns (chart, chamber).
    std::pair<int, Cell> project_center_chamber(int chart, const Cell& sigma) const;

    int common_apartment(const BuildingPoint& x, const BuildingPoint& y) const;
    std::vector<int> common_charts(const BuildingPoint& x, const BuildingPoint& y) const;
    PolyPath geodesic(const BuildingPoint& x, const BuildingPoint& y) const;
    /// Straight path inside a given common chart.
    PolyPath geodesic_in(int chart, const BuildingPoint& x, const BuildingPoint& y) const;

    /// Chambers of chart k whose barycenter lies in the chart.
    std::vector<Cell> chart_chambers(int k) const;
    /// Sector direction expressed in chart k (which must contain the center).
    Vec sector_direction_in(int k) const;

private:
    void compute_foldings();

    Complex cx_;
    std::vector<Chart> charts_;
    std::vector<Gluing> gluings_;
    std::vector<AffineMap> inverse_maps_;
    std::vector<Domain> image_domains_;  // gluing domains in chart j coordinates
    std::vector<std::vector<int>> adjacency_;
    int base_ = 0;
    BuildingCenter center_;
    Cell reference_;
    std::vector<std::optional<AffineMap>> folding_;
};

ConvexityReport validate_atlas(const AtlasBuilding& B);

/// Merged link of the building at a point: arcs are chamber germs (owned
/// by the smallest chart carrying them), vertices are wall-ray germs.
struct BuildingLink {
    BuildingPoint at;
    std::vector<std::optional<Vec>> coords;  // a in each chart
    LinkSpace link{Mat::identity(1), LinkTopology::zero_sphere};
};

BuildingLink building_link(const AtlasBuilding& B, const BuildingPoint& a);
/// Direction of the vector v (chart coordinates) at the link's point.
std::optional<Direction> locate_in_link(const AtlasBuilding& B, const BuildingLink& L, int chart, const Vec& v);
/// A vector representing d in its owning chart.
std::pair<int, Vec> direction_vector(const BuildingLink& L, const Direction& d);

struct RetractedLink {
    BuildingLink link;
    Vec image;
    LinkSpace sigma_link{Mat::identity(1), LinkTopology::zero_sphere};
};
RetractedLink link_with_retraction(const AtlasBuilding& B, const BuildingPoint& a);
Direction retract_direction(const AtlasBuilding& B, const RetractedLink& R, const Direction& d);
/// Directions of the building link pointing into Proj_{carrier a} C.
LinkSubset building_proj_link(const AtlasBuilding& B, const BuildingLink& L);

// Canned buildings ----------------------------------------------------------

/// One chart, no gluings, center the fundamental chamber.
AtlasBuilding thin_building(TypeTag t);

/// Three half-apartments glued along the wall H: chart 0 = P + N (Sigma),
/// chart 1 = P + B, chart 2 = N + B, where P is the side of H containing
/// the fundamental chamber.
AtlasBuilding tripod_building(TypeTag t, const Wall& h);

/// Data of the A2 tripod around the vertex a = 0 with a chamber-sized
/// segment A along the bisector of C.
struct A2Example {
    Vec a;          // the vertex (origin)
    Cell C;         // fundamental chamber
    Cell D;         // chamber opposite C at a (chart 0)
    Cell D_prime;   // its copy in chart 1
    Vec m;          // foot of the perpendicular from a on C's far edge
    Vec m_prime;    // -m, in D
    Wall L1;        // gluing wall
};
AtlasBuilding a2_counterexample_building();
A2Example a2_example_data();

/// Ball of radius `depth` in the (q+1)-regular tree with each leaf continued
/// by a ray; charts are the lines between pairs of ends.
struct TreeInfo {
    int q = 2;
    int depth = 0;
    std::vector<int> parent;                 // -1 for the root
    std::vector<int> node_depth;
    std::vector<int> leaves;
    std::vector<std::pair<int, int>> chart_ends;  // (leaf index, leaf index)
    /// Tree node at each integer coordinate of each chart (empty entries
    /// beyond the leaves); coordinate x sits at index x + offset.
    std::vector<std::vector<int>> chart_nodes;
    std::vector<int> chart_offset;
    int building_radius = 0;
};
AtlasBuilding tree_building(int q, int depth, TreeInfo* info = nullptr);

} // namespace cvxbuild
