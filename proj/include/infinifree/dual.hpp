#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>

namespace infinifree {

using cx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

namespace ring {

// Uniform ring operations so dual arithmetic works over C and over M_d(C).

inline cx one_like(const cx&) { return cx(1.0, 0.0); }
inline Matrix one_like(const Matrix& a) { return Matrix::Identity(a.rows(), a.cols()); }

inline cx zero_like(const cx&) { return cx(0.0, 0.0); }
inline Matrix zero_like(const Matrix& a) { return Matrix::Zero(a.rows(), a.cols()); }

inline cx inverse(const cx& a) {
    if (a == cx(0.0, 0.0)) throw std::domain_error("inverse: zero scalar");
    return cx(1.0, 0.0) / a;
}
inline Matrix inverse(const Matrix& a) {
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw std::domain_error("inverse: singular matrix");
    return lu.inverse();
}

inline double norm_of(const cx& a) { return std::abs(a); }
inline double norm_of(const Matrix& a) { return a.norm(); }

} // namespace ring

/// An element a + t*a' of the t^2 = 0 extension of the underlying ring;
/// equivalently the 2x2 upper-triangular matrix [[a, a'], [0, a]].
template <class T>
struct Dual {
    T std;
    T inf;

    Dual() = default;
    Dual(T s) : std(std::move(s)), inf(ring::zero_like(std)) {}
    Dual(T s, T i) : std(std::move(s)), inf(std::move(i)) {}

    static Dual constant(T s) { return Dual(std::move(s)); }

    Dual operator-() const { return Dual(-std, -inf); }
    Dual operator+(const Dual& o) const { return Dual(std + o.std, inf + o.inf); }
    Dual operator-(const Dual& o) const { return Dual(std - o.std, inf - o.inf); }
    /// (a + tb)(c + td) = ac + t(ad + bc); the t^2 term is dropped.
    Dual operator*(const Dual& o) const { return Dual(std * o.std, std * o.inf + inf * o.std); }

    Dual& operator+=(const Dual& o) { std += o.std; inf += o.inf; return *this; }
    Dual& operator-=(const Dual& o) { std -= o.std; inf -= o.inf; return *this; }

    double norm() const { return ring::norm_of(std) + ring::norm_of(inf); }
};

using DualScalar = Dual<cx>;
using DualMatrix = Dual<Matrix>;

template <class T>
Dual<T> dual_mul(const Dual<T>& x, const Dual<T>& y) { return x * y; }

/// Inverse in the dual ring: (a + tb)^{-1} = a^{-1} - t a^{-1} b a^{-1}.
/// Requires the standard part to be invertible.
template <class T>
Dual<T> dual_inv(const Dual<T>& x) {
    T si = ring::inverse(x.std);
    return Dual<T>(si, -(si * x.inf * si));
}

template <class T>
Dual<T> dual_one_like(const Dual<T>& x) {
    return Dual<T>(ring::one_like(x.std));
}

inline DualScalar operator*(const cx& a, const DualScalar& x) { return DualScalar(a * x.std, a * x.inf); }
inline DualScalar operator*(const DualScalar& x, const cx& a) { return a * x; }
inline DualScalar operator+(const cx& a, const DualScalar& x) { return DualScalar(a + x.std, x.inf); }
inline DualScalar operator+(const DualScalar& x, const cx& a) { return a + x; }
inline DualScalar operator-(const DualScalar& x, const cx& a) { return DualScalar(x.std - a, x.inf); }
inline DualScalar operator-(const cx& a, const DualScalar& x) { return DualScalar(a - x.std, -x.inf); }

/// Square root carried through the dual part. The branch of the standard part
/// is the principal one unless `negate` flips it; d/dx sqrt = 1/(2 sqrt).
inline DualScalar dual_sqrt(const DualScalar& x, bool negate = false) {
    cx s = std::sqrt(x.std);
    if (negate) s = -s;
    return DualScalar(s, x.inf / (2.0 * s));
}

/// The conditional expectation of the upper-triangular space:
/// Etilde([[a, a'], [0, a]]) = [[E(a), E(a') + E'(a)], [0, E(a)]].
/// `Elem` is whatever representation of algebra elements E and E' accept.
template <class Elem>
struct TildeExpectation {
    std::function<Matrix(const Elem&)> E;
    std::function<Matrix(const Elem&)> Eprime;

    DualMatrix operator()(const Dual<Elem>& a) const {
        return DualMatrix(E(a.std), E(a.inf) + Eprime(a.std));
    }
};

template <class Elem>
DualMatrix tilde_expectation(const TildeExpectation<Elem>& te, const Dual<Elem>& a) {
    return te(a);
}

} // namespace infinifree
