#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cvxbuild {

using Q = mpq_class;

/// Raised for malformed scene data, bad arguments and dimension mismatches.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a geometric precondition fails (point outside the modeled
/// region, atlas not saturated, degenerate segment, ...).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Q parse_rational(std::string_view text);
std::string to_string(const Q& q);
inline double to_double(const Q& q) { return q.get_d(); }
int sign(const Q& q);

/// Rational vector of length 1 or 2 (the supported ranks).
class Vec {
public:
    Vec() = default;
    explicit Vec(int n) : n_(n) { check_dim(n); }
    explicit Vec(Q a) : c_{std::move(a), Q(0)}, n_(1) {}
    Vec(Q a, Q b) : c_{std::move(a), std::move(b)}, n_(2) {}

    int size() const { return n_; }
    Q& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
    const Q& operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }

    Vec operator+(const Vec& o) const;
    Vec operator-(const Vec& o) const;
    Vec operator-() const;
    Vec operator*(const Q& s) const;
    Vec& operator+=(const Vec& o);
    bool operator==(const Vec& o) const;
    bool operator!=(const Vec& o) const { return !(*this == o); }
    bool operator<(const Vec& o) const;
    bool is_zero() const;

private:
    static void check_dim(int n)
    {
        if (n < 1 || n > 2) throw InputError("vector dimension must be 1 or 2");
    }
    std::array<Q, 2> c_{};
    int n_ = 0;
};

inline Vec operator*(const Q& s, const Vec& v) { return v * s; }

/// Plain pairing of a covector with a vector.
Q dot(const Vec& covector, const Vec& v);
/// 2x2 determinant of two vectors (orientation in coordinate space).
Q det(const Vec& u, const Vec& v);
std::string to_string(const Vec& v);

/// Square rational matrix of size 1 or 2.
class Mat {
public:
    Mat() = default;
    explicit Mat(int n);
    static Mat identity(int n);

    int size() const { return n_; }
    Q& operator()(int i, int j) { return m_[idx(i, j)]; }
    const Q& operator()(int i, int j) const { return m_[idx(i, j)]; }

    Vec operator*(const Vec& v) const;
    Mat operator*(const Mat& o) const;
    Mat transpose() const;
    Q determinant() const;
    Mat inverse() const;
    bool operator==(const Mat& o) const;

private:
    static std::size_t idx(int i, int j) { return static_cast<std::size_t>(2 * i + j); }
    std::array<Q, 4> m_{};
    int n_ = 0;
};

/// x -> linear * x + shift.
struct AffineMap {
    Mat linear;
    Vec shift;

    static AffineMap identity(int n) { return {Mat::identity(n), Vec(n)}; }
    Vec apply(const Vec& x) const { return linear * x + shift; }
    Vec apply_linear(const Vec& v) const { return linear * v; }
    /// (*this) o other
    AffineMap after(const AffineMap& other) const;
    AffineMap inverse() const;
    bool operator==(const AffineMap& o) const { return linear == o.linear && shift == o.shift; }
};

/// Solves for the affine map sending `from[i]` to `to[i]`; needs rank+1
/// affinely independent source points.
AffineMap affine_from_points(const Vec* from, const Vec* to, int rank);

/// Canonical fraction n/d.
inline Q frac(long n, long d)
{
    Q q(n, d);
    q.canonicalize();
    return q;
}

/// Rational approximation of a double (exact binary value).
inline Q from_double(double d) { return Q(d); }

/// FNV-1a 64-bit hash, stable across runs and platforms.
std::uint64_t stable_hash(std::string_view bytes);

} // namespace cvxbuild
