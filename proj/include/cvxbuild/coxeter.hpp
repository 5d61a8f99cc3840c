#pragma once

#include <array>

#include "cvxbuild/geom.hpp"
#include "cvxbuild/rational.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cvxbuild {

enum class TypeTag { A1affine, A1xA1, A2affine, C2affine, G2affine };

TypeTag parse_type_tag(const std::string& name);
std::string to_string(TypeTag t);

/// Affine hyperplane {x : normal . x = offset} in canonical scaling: the
/// normal is a primitive integer covector whose first nonzero entry is
/// positive.
struct Wall {
    Vec normal;
    Q offset;

    bool operator==(const Wall& o) const { return normal == o.normal && offset == o.offset; }
    bool operator<(const Wall& o) const;
};

/// Canonical wall through arbitrary (nonzero) rational data.
Wall make_wall(const Vec& normal, const Q& offset);
std::string to_string(const Wall& w);

enum class Side { minus, zero, plus };
Side side_of_wall(const Vec& p, const Wall& h);
int side_sign(const Vec& p, const Wall& h);

/// Affine Coxeter datum. `gram` is the euclidean inner product on
/// coordinate vectors: <u, v> = u^T gram v. Covectors are turned into
/// vectors through gram^{-1}.
struct CoxeterDatum {
    TypeTag type = TypeTag::A1affine;
    int rank = 1;
    Mat gram;
    std::vector<Wall> simple_walls;

    static CoxeterDatum of_type(TypeTag t);
    /// Explicit override; throws InputError when the data fails validate().
    static CoxeterDatum custom(TypeTag t, Mat gram, std::vector<Wall> simple_walls);

    Q inner(const Vec& u, const Vec& v) const;
    Q norm2(const Vec& v) const { return inner(v, v); }
    double length(const Vec& v) const;
    /// Angle in [0, pi] between two nonzero vectors.
    double angle(const Vec& u, const Vec& v) const;
    /// Exact cos^2 of the angle between u and v.
    Q cos2(const Vec& u, const Vec& v) const;
    /// gram^{-1} c: the vector orthogonal to the level sets of c.
    Vec covector_to_vector(const Vec& c) const;
    /// The covector <v, .>.
    Vec vector_to_covector(const Vec& v) const;

    AffineMap reflection(const Wall& h) const;
    Vec reflect(const Wall& h, const Vec& p) const { return reflection(h).apply(p); }
    /// Image of a wall under an affine isometry.
    Wall transform(const AffineMap& f, const Wall& h) const;
    /// s_{i1} o s_{i2} o ... over simple wall indices.
    AffineMap weyl_element(const std::vector<int>& word) const;

    /// Order of s_i s_j (0 for infinite order) found by direct iteration.
    int relation_order(int i, int j, int max_order = 6) const;
    /// Throws InputError unless gram is positive definite, every simple
    /// reflection preserves it and the Coxeter relations of the type hold.
    void validate() const;
};

/// A cell of the arrangement, identified by its sign vector over the
/// complex's wall list. `point` lies in the relative interior.
struct Cell {
    std::vector<signed char> signs;
    Vec point;
    int dim = 0;

    bool is_chamber() const { return dim == static_cast<int>(point.size()); }
    bool operator==(const Cell& o) const { return signs == o.signs; }
    bool operator!=(const Cell& o) const { return signs != o.signs; }
    bool operator<(const Cell& o) const { return signs < o.signs; }
};

struct Gallery {
    std::vector<Cell> chambers;
    std::vector<int> crossed_walls;
    int length() const { return static_cast<int>(crossed_walls.size()); }
};

/// Finite window onto the Coxeter complex: all walls meeting an enlarged
/// ball around the origin, and cell operations for points of the modeled
/// ball (radius = radius_in_diameters chamber diameters).
class Complex {
public:
    explicit Complex(CoxeterDatum datum, int radius_in_diameters = 8);

    const CoxeterDatum& datum() const { return datum_; }
    int rank() const { return datum_.rank; }
    const std::vector<Wall>& walls() const { return walls_; }
    /// Index in walls(), or -1.
    int wall_index(const Wall& w) const;
    /// Squared Gram diameter of a chamber.
    const Q& chamber_diameter2() const { return diam2_; }
    double chamber_diameter() const;
    /// Squared Gram radius of the modeled ball.
    const Q& region_radius2() const { return region2_; }
    bool in_region(const Vec& p) const;
    void require_in_region(const Vec& p) const;

    std::vector<signed char> sign_vector(const Vec& p) const;
    std::vector<int> walls_through(const Vec& p) const;
    Cell carrier(const Vec& p) const;
    /// Carrier with the point replaced by the canonical interior point
    /// (barycenter of the closure vertices).
    Cell canonical_cell(const Vec& p) const;
    const Cell& fundamental_chamber() const { return fundamental_; }

    /// Halfspaces (tag = wall index) cutting out the closure of the cell.
    std::vector<Halfspace> closure_halfspaces(const Cell& c) const;
    /// Closure as a convex point cycle (counterclockwise in rank 2).
    std::vector<Vec> closure_vertices(const Cell& c) const;
    bool in_closure(const Cell& c, const Vec& p) const;
    /// sigma is a face of tau (including equality).
    bool is_face(const Cell& sigma, const Cell& tau) const;
    /// Indices of walls carrying a facet of chamber C.
    std::vector<int> facet_walls(const Cell& C) const;
    std::vector<int> separating_walls(const Cell& C, const Cell& D) const;

    /// Chamber across wall `w` from C.
    Cell reflect_chamber(const Cell& C, int w) const;
    /// All chambers having sigma as a face, sorted by sign vector.
    std::vector<Cell> chambers_at(const Cell& sigma) const;
    Cell project_chamber_to_cell(const Cell& C, const Cell& sigma) const;
    Gallery gallery_between(const Cell& C, const Cell& D) const;

    /// Parameters t in (0, 1) where p + t (q - p) crosses a wall
    /// transversally, sorted and deduplicated.
    std::vector<Q> wall_crossings(const Vec& p, const Vec& q) const;

private:
    bool near(const Vec& p, int w) const;
    // Exact sign of wall i at p; pd holds p in doubles for a fast first pass.
    int fast_side(const std::array<double, 2>& pd, const Vec& p, std::size_t i) const;
    static std::array<double, 2> approx(const Vec& p);

    CoxeterDatum datum_;
    std::vector<Wall> walls_;
    std::vector<Q> wall_norm2_;  // c^T G^{-1} c per wall
    struct WallApprox {
        double c0, c1, k, norm2;
    };
    std::vector<WallApprox> approx_;
    double diam2_d_ = 0;
    // canonical point of each cell seen so far, keyed by sign vector
    struct CellCache;
    std::shared_ptr<CellCache> cell_cache_;
    Q diam2_;
    Q region2_;
    Q box_;
    Cell fundamental_;
};

} // namespace cvxbuild
