#pragma once

#include "cvxbuild/coxeter.hpp"
#include "cvxbuild/report.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cvxbuild {

enum class LinkTopology { circle, zero_sphere, graph };
std::string to_string(LinkTopology t);

/// A vertex of a link: a wall direction (or a marker on an unsubdivided
/// circle), stored as a vector in its chart.
struct LinkVertex {
    std::string label;
    int chart = 0;
    Vec vec;
};

/// A spherical arc running counterclockwise through `controls` (direction
/// vectors in `chart`; consecutive ones less than pi apart). The parameter
/// t in [0, 1] is split uniformly between the pieces, and inside a piece
/// the point for local parameter s is the direction of the chord point
/// u_k + s (u_{k+1} - u_k).
struct LinkArc {
    int from = -1;
    int to = -1;
    int chart = 0;
    std::vector<Vec> controls;
    std::vector<double> piece_angles;
    double length = 0;
    std::string label;
};

/// A point of a link. Canonical form: points at t = 0 or t = 1 are stored
/// as the endpoint vertex.
struct Direction {
    int vertex = -1;
    int arc = -1;
    Q t;

    bool is_vertex() const { return vertex >= 0; }
    bool operator==(const Direction& o) const { return vertex == o.vertex && arc == o.arc && t == o.t; }
    bool operator<(const Direction& o) const;
};

struct SubArc {
    int arc = -1;
    Q t0, t1;
};

/// Finite union of closed subarcs plus isolated vertices. Canonical form:
/// subarcs sorted and merged per arc, and every vertex in the set listed
/// (including endpoints of subarcs touching it).
struct LinkSubset {
    std::vector<SubArc> subarcs;
    std::vector<int> vertices;
};

/// A geodesic in a link: traversed arc pieces (t_start -> t_end) and the
/// vertices passed, in order.
struct LinkPath {
    std::vector<SubArc> segments;
    std::vector<int> vertices;
    double length = 0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// CAT(1) metric graph (or 0-sphere) modeling a link.
class LinkSpace {
public:
    LinkSpace(Mat gram, LinkTopology topology);

    int add_vertex(LinkVertex v);
    int add_arc(int from, int to, int chart, std::vector<Vec> controls, std::string label);

    LinkTopology topology() const { return topology_; }
    const Mat& gram() const { return gram_; }
    const std::vector<LinkVertex>& vertices() const { return vertices_; }
    const std::vector<LinkArc>& arcs() const { return arcs_; }
    double total_length() const;

    Direction canonical(Direction d) const;
    Direction vertex_direction(int v) const { return Direction{v, -1, 0}; }
    Direction arc_direction(int arc, const Q& t) const { return canonical(Direction{-1, arc, t}); }
    /// Direction vector in the chart of the arc (or of the vertex).
    Vec vector_of(const Direction& d) const;
    int chart_of(const Direction& d) const;
    /// Direction with vector v among the arcs/vertices of `chart`.
    std::optional<Direction> locate(int chart, const Vec& v) const;
    /// Angle from the start of the arc to parameter t.
    double position(int arc, const Q& t) const;

    double distance(const Direction& a, const Direction& b) const;
    /// A shortest path; empty segments and infinite length when disconnected.
    LinkPath geodesic(const Direction& a, const Direction& b) const;

    /// Shortest cycle through each arc is at least 2 pi (within tol).
    bool girth_ok(double tol = 1e-9, double* girth = nullptr) const;

    std::string label_of(const Direction& d) const;
    Json direction_json(const Direction& d) const;
    Json subset_json(const LinkSubset& s) const;

private:
    /// All-pairs vertex distances, recomputed whenever the graph grows.
    void refresh_distances();
    double vertex_distance(int a, int b) const;

    Mat gram_;
    LinkTopology topology_;
    std::vector<LinkVertex> vertices_;
    std::vector<LinkArc> arcs_;
    std::vector<std::vector<double>> dist_;
    std::vector<std::vector<int>> next_arc_;
};

/// Canonical form: merge overlapping or touching subarcs, collect vertices.
LinkSubset canonical_subset(const LinkSpace& link, LinkSubset s);
bool subset_contains(const LinkSpace& link, const LinkSubset& s, const Direction& d);
LinkSubset subset_union(const LinkSpace& link, const LinkSubset& a, const LinkSubset& b);
LinkSubset subset_intersection(const LinkSpace& link, const LinkSubset& a, const LinkSubset& b);
LinkSubset whole_link(const LinkSpace& link);
bool subset_is_whole(const LinkSpace& link, const LinkSubset& s);

/// Directions v of the arcs of `chart` with kappa . v <= 0 for every
/// covector kappa (exact).
LinkSubset cone_subset(const LinkSpace& link, int chart, const std::vector<Vec>& covectors);

/// Boundary points of S: subarc endpoints inside arcs and vertices of S
/// with a missing incident germ.
std::vector<Direction> subset_boundary(const LinkSpace& link, const LinkSubset& s);

/// Pairs at distance exactly pi are not required to be joined inside S
/// (see the project notes); pairs below pi - tol are checked exactly.
ConvexityReport is_pi_convex(const LinkSubset& s, const LinkSpace& link, double tol = 1e-9);

/// Length metric of S (shortest path inside S); infinity when separated.
double subset_distance(const LinkSpace& link, const LinkSubset& s, const Direction& a, const Direction& b);

/// A closed subset of a metric graph is locally convex at each of its
/// points; the report lists the germs of S at d.
ConvexityReport is_locally_convex_in_link(const LinkSubset& s, const LinkSpace& link, const Direction& d);

/// Circle links only: is there n in S with n in P and S inside the closed
/// pi/2-ball around n? The report carries n (as angle and direction).
ConvexityReport link_normal_condition(const LinkSubset& s, const LinkSubset& proj, const LinkSpace& link,
                                      double tol = 1e-9);

/// Link of Sigma at a (chart id recorded on vertices and arcs).
LinkSpace link_datum_at(const Complex& cx, const Vec& a, int chart = 0);
/// The unit circle as a single loop arc of length 2 pi.
LinkSpace unit_circle();

Direction direction_of_segment(const Vec& a, const Vec& b, const LinkSpace& link, int chart = 0);
double angle_between_segments(const CoxeterDatum& d, const Vec& a, const Vec& b, const Vec& c);
/// Directions at a pointing into the closed projection chamber of C.
LinkSubset proj_link_chamber(const Complex& cx, const Vec& a, const Cell& C, const LinkSpace& link, int chart = 0);

} // namespace cvxbuild
