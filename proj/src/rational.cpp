#include "cvxbuild/rational.hpp"

#include <cctype>

namespace cvxbuild {

namespace {

Q parse_decimal(std::string_view text)
{
    // "[-]digits[.digits]"
    std::string digits;
    bool negative = false;
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        negative = text[i] == '-';
        ++i;
    }
    std::size_t frac = 0;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        char ch = text[i];
        if (ch == '.' && !seen_point) {
            seen_point = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw InputError("malformed rational '" + std::string(text) + "'");
        digits.push_back(ch);
        if (seen_point) ++frac;
    }
    if (digits.empty()) throw InputError("malformed rational '" + std::string(text) + "'");
    mpz_class num(digits, 10);
    mpz_class den = 1;
    for (std::size_t k = 0; k < frac; ++k) den *= 10;
    Q q(num, den);
    q.canonicalize();
    return negative ? Q(-q) : q;
}

} // namespace

Q parse_rational(std::string_view text)
{
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw InputError("empty rational");
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_decimal(text);
    Q num = parse_decimal(text.substr(0, slash));
    Q den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw InputError("zero denominator in '" + std::string(text) + "'");
    Q q = num / den;
    q.canonicalize();
    return q;
}

std::string to_string(const Q& q) { return q.get_str(); }

int sign(const Q& q) { return sgn(q); }

Vec Vec::operator+(const Vec& o) const
{
    Vec r(n_);
    for (int i = 0; i < n_; ++i) r[i] = (*this)[i] + o[i];
    return r;
}

Vec Vec::operator-(const Vec& o) const
{
    Vec r(n_);
    for (int i = 0; i < n_; ++i) r[i] = (*this)[i] - o[i];
    return r;
}

Vec Vec::operator-() const
{
    Vec r(n_);
    for (int i = 0; i < n_; ++i) r[i] = -(*this)[i];
    return r;
}

Vec Vec::operator*(const Q& s) const
{
    Vec r(n_);
    for (int i = 0; i < n_; ++i) r[i] = (*this)[i] * s;
    return r;
}

Vec& Vec::operator+=(const Vec& o)
{
    for (int i = 0; i < n_; ++i) (*this)[i] += o[i];
    return *this;
}

bool Vec::operator==(const Vec& o) const
{
    if (n_ != o.n_) return false;
    for (int i = 0; i < n_; ++i)
        if ((*this)[i] != o[i]) return false;
    return true;
}

bool Vec::operator<(const Vec& o) const
{
    if (n_ != o.n_) return n_ < o.n_;
    for (int i = 0; i < n_; ++i) {
        if ((*this)[i] < o[i]) return true;
        if (o[i] < (*this)[i]) return false;
    }
    return false;
}

bool Vec::is_zero() const
{
    for (int i = 0; i < n_; ++i)
        if ((*this)[i] != 0) return false;
    return true;
}

Q dot(const Vec& covector, const Vec& v)
{
    if (covector.size() != v.size()) throw InputError("dimension mismatch");
    Q s = 0;
    for (int i = 0; i < v.size(); ++i) s += covector[i] * v[i];
    return s;
}

Q det(const Vec& u, const Vec& v) { return u[0] * v[1] - u[1] * v[0]; }

std::string to_string(const Vec& v)
{
    std::string s = "(";
    for (int i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += to_string(v[i]);
    }
    return s + ")";
}

Mat::Mat(int n) : n_(n)
{
    if (n < 1 || n > 2) throw InputError("matrix dimension must be 1 or 2");
}

Mat Mat::identity(int n)
{
    Mat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

Vec Mat::operator*(const Vec& v) const
{
    if (v.size() != n_) throw InputError("dimension mismatch");
    Vec r(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
}

Mat Mat::operator*(const Mat& o) const
{
    Mat r(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            for (int k = 0; k < n_; ++k) r(i, j) += (*this)(i, k) * o(k, j);
    return r;
}

Mat Mat::transpose() const
{
    Mat r(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) r(i, j) = (*this)(j, i);
    return r;
}

Q Mat::determinant() const
{
    if (n_ == 1) return (*this)(0, 0);
    return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
}

Mat Mat::inverse() const
{
    Q d = determinant();
    if (d == 0) throw GeometryError("singular matrix");
    Mat r(n_);
    if (n_ == 1) {
        r(0, 0) = 1 / d;
        return r;
    }
    r(0, 0) = (*this)(1, 1) / d;
    r(0, 1) = -(*this)(0, 1) / d;
    r(1, 0) = -(*this)(1, 0) / d;
    r(1, 1) = (*this)(0, 0) / d;
    return r;
}

bool Mat::operator==(const Mat& o) const
{
    if (n_ != o.n_) return false;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            if ((*this)(i, j) != o(i, j)) return false;
    return true;
}

AffineMap AffineMap::after(const AffineMap& other) const
{
    return {linear * other.linear, linear * other.shift + shift};
}

AffineMap AffineMap::inverse() const
{
    Mat inv = linear.inverse();
    return {inv, -(inv * shift)};
}

AffineMap affine_from_points(const Vec* from, const Vec* to, int rank)
{
    // Linear part from difference vectors, then the shift.
    Mat src(rank), dst(rank);
    for (int j = 0; j < rank; ++j) {
        Vec a = from[j + 1] - from[0];
        Vec b = to[j + 1] - to[0];
        for (int i = 0; i < rank; ++i) {
            src(i, j) = a[i];
            dst(i, j) = b[i];
        }
    }
    if (src.determinant() == 0) throw GeometryError("affinely dependent points");
    AffineMap f;
    f.linear = dst * src.inverse();
    f.shift = to[0] - f.linear * from[0];
    return f;
}

std::uint64_t stable_hash(std::string_view bytes)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace cvxbuild
