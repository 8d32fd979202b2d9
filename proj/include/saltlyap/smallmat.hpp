#pragma once

// Dense fixed-size linear algebra for the small matrices that appear in the
// variational equation: products, inverses, Householder QR with a positive
// R diagonal, and the Cayley map from skew-symmetric to rotation matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>

#include "saltlyap/errors.hpp"

namespace saltlyap {

template <std::size_t N>
struct Vector {
    std::array<double, N> v{};

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }
    static constexpr std::size_t size() { return N; }

    constexpr Vector& operator+=(const Vector& o) {
        for (std::size_t i = 0; i < N; ++i) v[i] += o.v[i];
        return *this;
    }
    constexpr Vector& operator-=(const Vector& o) {
        for (std::size_t i = 0; i < N; ++i) v[i] -= o.v[i];
        return *this;
    }
    constexpr Vector& operator*=(double s) {
        for (auto& e : v) e *= s;
        return *this;
    }

    friend constexpr Vector operator+(Vector a, const Vector& b) { return a += b; }
    friend constexpr Vector operator-(Vector a, const Vector& b) { return a -= b; }
    friend constexpr Vector operator*(Vector a, double s) { return a *= s; }
    friend constexpr Vector operator*(double s, Vector a) { return a *= s; }
    friend constexpr bool operator==(const Vector&, const Vector&) = default;
};

template <std::size_t N>
double dot(const Vector<N>& a, const Vector<N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
double norm(const Vector<N>& a) {
    return std::sqrt(dot(a, a));
}

template <std::size_t N>
bool all_finite(const Vector<N>& a) {
    return std::all_of(a.v.begin(), a.v.end(), [](double e) { return std::isfinite(e); });
}

/// Row-major N x N real matrix.
template <std::size_t N>
struct Matrix {
    std::array<double, N * N> a{};

    static constexpr std::size_t size() { return N; }

    static constexpr Matrix zero() { return Matrix{}; }

    static constexpr Matrix identity() {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }

    static constexpr Matrix diagonal(const Vector<N>& d) {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = d[i];
        return m;
    }

    /// Builds from nested row lists; missing entries stay zero.
    static constexpr Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m;
        std::size_t i = 0;
        for (const auto& row : rows) {
            std::size_t j = 0;
            for (double e : row) {
                if (i < N && j < N) m(i, j) = e;
                ++j;
            }
            ++i;
        }
        return m;
    }

    constexpr double& operator()(std::size_t i, std::size_t j) { return a[i * N + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return a[i * N + j]; }

    constexpr Vector<N> column(std::size_t j) const {
        Vector<N> c;
        for (std::size_t i = 0; i < N; ++i) c[i] = (*this)(i, j);
        return c;
    }

    constexpr Matrix& operator+=(const Matrix& o) {
        for (std::size_t k = 0; k < N * N; ++k) a[k] += o.a[k];
        return *this;
    }
    constexpr Matrix& operator-=(const Matrix& o) {
        for (std::size_t k = 0; k < N * N; ++k) a[k] -= o.a[k];
        return *this;
    }
    constexpr Matrix& operator*=(double s) {
        for (auto& e : a) e *= s;
        return *this;
    }

    friend constexpr Matrix operator+(Matrix x, const Matrix& y) { return x += y; }
    friend constexpr Matrix operator-(Matrix x, const Matrix& y) { return x -= y; }
    friend constexpr Matrix operator-(Matrix x) { return x *= -1.0; }
    friend constexpr Matrix operator*(Matrix x, double s) { return x *= s; }
    friend constexpr Matrix operator*(double s, Matrix x) { return x *= s; }

    friend constexpr Matrix operator*(const Matrix& x, const Matrix& y) {
        Matrix out;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) {
                const double xik = x(i, k);
                for (std::size_t j = 0; j < N; ++j) out(i, j) += xik * y(k, j);
            }
        return out;
    }

    friend constexpr Vector<N> operator*(const Matrix& x, const Vector<N>& v) {
        Vector<N> out;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) out[i] += x(i, j) * v[j];
        return out;
    }

    friend constexpr bool operator==(const Matrix&, const Matrix&) = default;
};

using Mat3 = Matrix<3>;

template <std::size_t N>
constexpr Matrix<N> transpose(const Matrix<N>& m) {
    Matrix<N> t;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) t(j, i) = m(i, j);
    return t;
}

template <std::size_t N>
constexpr double trace(const Matrix<N>& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += m(i, i);
    return s;
}

template <std::size_t N>
Vector<N> diagonal_of(const Matrix<N>& m) {
    Vector<N> d;
    for (std::size_t i = 0; i < N; ++i) d[i] = m(i, i);
    return d;
}

template <std::size_t N>
double frobenius_norm(const Matrix<N>& m) {
    double s = 0.0;
    for (double e : m.a) s += e * e;
    return std::sqrt(s);
}

template <std::size_t N>
bool all_finite(const Matrix<N>& m) {
    return std::all_of(m.a.begin(), m.a.end(), [](double e) { return std::isfinite(e); });
}

/// ||m^T m - I||_F
template <std::size_t N>
double orthogonality_defect(const Matrix<N>& m) {
    return frobenius_norm(transpose(m) * m - Matrix<N>::identity());
}

template <std::size_t N>
double determinant(const Matrix<N>& m) {
    if constexpr (N == 1) {
        return m(0, 0);
    } else if constexpr (N == 2) {
        return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    } else if constexpr (N == 3) {
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    } else {
        // LU with partial pivoting.
        Matrix<N> lu = m;
        double det = 1.0;
        for (std::size_t c = 0; c < N; ++c) {
            std::size_t p = c;
            for (std::size_t r = c + 1; r < N; ++r)
                if (std::abs(lu(r, c)) > std::abs(lu(p, c))) p = r;
            if (lu(p, c) == 0.0) return 0.0;
            if (p != c) {
                for (std::size_t j = 0; j < N; ++j) std::swap(lu(p, j), lu(c, j));
                det = -det;
            }
            det *= lu(c, c);
            for (std::size_t r = c + 1; r < N; ++r) {
                const double f = lu(r, c) / lu(c, c);
                for (std::size_t j = c; j < N; ++j) lu(r, j) -= f * lu(c, j);
            }
        }
        return det;
    }
}

inline constexpr double kSingularTolerance = 1e-14;

/// Explicit cofactor formula for N == 3, Gauss-Jordan with partial pivoting otherwise.
template <std::size_t N>
Matrix<N> inverse(const Matrix<N>& m) {
    if constexpr (N == 3) {
        const double det = determinant(m);
        if (!(std::abs(det) > kSingularTolerance)) {
            throw SingularMatrixError("inverse: |det| below 1e-14");
        }
        Matrix<3> adj;
        adj(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
        adj(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
        adj(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
        adj(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
        adj(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
        adj(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
        adj(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
        adj(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
        adj(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        return adj * (1.0 / det);
    } else {
        Matrix<N> work = m;
        Matrix<N> inv = Matrix<N>::identity();
        for (std::size_t c = 0; c < N; ++c) {
            std::size_t p = c;
            for (std::size_t r = c + 1; r < N; ++r)
                if (std::abs(work(r, c)) > std::abs(work(p, c))) p = r;
            if (!(std::abs(work(p, c)) > kSingularTolerance)) {
                throw SingularMatrixError("inverse: zero pivot");
            }
            if (p != c) {
                for (std::size_t j = 0; j < N; ++j) {
                    std::swap(work(p, j), work(c, j));
                    std::swap(inv(p, j), inv(c, j));
                }
            }
            const double piv = 1.0 / work(c, c);
            for (std::size_t j = 0; j < N; ++j) {
                work(c, j) *= piv;
                inv(c, j) *= piv;
            }
            for (std::size_t r = 0; r < N; ++r) {
                if (r == c) continue;
                const double f = work(r, c);
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < N; ++j) {
                    work(r, j) -= f * work(c, j);
                    inv(r, j) -= f * inv(c, j);
                }
            }
        }
        return inv;
    }
}

template <std::size_t N>
struct QrFactors {
    Matrix<N> q;
    Matrix<N> r;
};

/// Householder QR normalised so that diag(r) > 0, which makes the factors unique.
template <std::size_t N>
QrFactors<N> qr_decompose(const Matrix<N>& m) {
    Matrix<N> r = m;
    Matrix<N> q = Matrix<N>::identity();
    for (std::size_t k = 0; k + 1 < N; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k; i < N; ++i) alpha += r(i, k) * r(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (r(k, k) > 0.0) alpha = -alpha;

        Vector<N> v;
        for (std::size_t i = k; i < N; ++i) v[i] = r(i, k);
        v[k] -= alpha;
        double vv = 0.0;
        for (std::size_t i = k; i < N; ++i) vv += v[i] * v[i];
        if (vv == 0.0) continue;

        // r <- (I - 2vv^T/vv) r,  q <- q (I - 2vv^T/vv)
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < N; ++i) s += v[i] * r(i, j);
            s *= 2.0 / vv;
            for (std::size_t i = k; i < N; ++i) r(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = k; j < N; ++j) s += q(i, j) * v[j];
            s *= 2.0 / vv;
            for (std::size_t j = k; j < N; ++j) q(i, j) -= s * v[j];
        }
        for (std::size_t i = k + 1; i < N; ++i) r(i, k) = 0.0;
    }
    for (std::size_t k = 0; k < N; ++k) {
        if (r(k, k) < 0.0) {
            for (std::size_t j = 0; j < N; ++j) r(k, j) = -r(k, j);
            for (std::size_t i = 0; i < N; ++i) q(i, k) = -q(i, k);
        }
        if (!(r(k, k) >= kSingularTolerance)) {
            throw SingularMatrixError("qr_decompose: R diagonal below 1e-14");
        }
    }
    return {q, r};
}

/// Skew-symmetric matrix stored by its strict lower triangle, row by row:
/// (1,0), (2,0), (2,1), (3,0), ...  Skew-symmetry holds by construction.
template <std::size_t N>
class SkewMatrix {
public:
    static constexpr std::size_t kStored = N * (N - 1) / 2;

    constexpr SkewMatrix() = default;
    constexpr explicit SkewMatrix(const std::array<double, kStored>& lower) : lower_(lower) {}

    /// Keeps the strict lower triangle of m and discards everything else.
    static constexpr SkewMatrix from_lower_of(const Matrix<N>& m) {
        SkewMatrix k;
        std::size_t idx = 0;
        for (std::size_t i = 1; i < N; ++i)
            for (std::size_t j = 0; j < i; ++j) k.lower_[idx++] = m(i, j);
        return k;
    }

    constexpr const std::array<double, kStored>& lower() const { return lower_; }
    constexpr std::array<double, kStored>& lower() { return lower_; }

    constexpr Matrix<N> expand() const {
        Matrix<N> m;
        std::size_t idx = 0;
        for (std::size_t i = 1; i < N; ++i)
            for (std::size_t j = 0; j < i; ++j) {
                m(i, j) = lower_[idx];
                m(j, i) = -lower_[idx];
                ++idx;
            }
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double e : lower_) s += e * e;
        return std::sqrt(2.0 * s);
    }

    constexpr SkewMatrix& operator+=(const SkewMatrix& o) {
        for (std::size_t i = 0; i < kStored; ++i) lower_[i] += o.lower_[i];
        return *this;
    }
    friend constexpr SkewMatrix operator+(SkewMatrix a, const SkewMatrix& b) { return a += b; }
    friend constexpr SkewMatrix operator-(SkewMatrix a) {
        for (auto& e : a.lower_) e = -e;
        return a;
    }
    friend constexpr SkewMatrix operator*(double s, SkewMatrix a) {
        for (auto& e : a.lower_) e *= s;
        return a;
    }
    friend constexpr bool operator==(const SkewMatrix&, const SkewMatrix&) = default;

private:
    std::array<double, kStored> lower_{};
};

using SkewMat3 = SkewMatrix<3>;

/// ||m||_F * ||m^{-1}||_F
template <std::size_t N>
double condition_estimate(const Matrix<N>& m) {
    return frobenius_norm(m) * frobenius_norm(inverse(m));
}

inline constexpr double kCayleyConditionLimit = 1e12;

/// Q = (I - K)(I + K)^{-1}.
template <std::size_t N>
Matrix<N> cayley(const SkewMatrix<N>& k) {
    const Matrix<N> km = k.expand();
    const Matrix<N> plus = Matrix<N>::identity() + km;
    Matrix<N> h;
    try {
        h = inverse(plus);
    } catch (const SingularMatrixError&) {
        throw CayleyValidityError("cayley: I + K is singular");
    }
    if (frobenius_norm(plus) * frobenius_norm(h) > kCayleyConditionLimit) {
        throw CayleyValidityError("cayley: I + K is ill-conditioned");
    }
    return (Matrix<N>::identity() - km) * h;
}

/// Inverse of the Cayley map, K = (I - Q)(I + Q)^{-1}. Q must be a rotation with
/// no eigenvalue near -1. The result is projected onto the skew-symmetric part.
template <std::size_t N>
SkewMatrix<N> inverse_cayley(const Matrix<N>& q) {
    const Matrix<N> plus = Matrix<N>::identity() + q;
    Matrix<N> h;
    try {
        h = inverse(plus);
    } catch (const SingularMatrixError&) {
        throw CayleyValidityError("inverse_cayley: Q has an eigenvalue at -1");
    }
    const Matrix<N> k = (Matrix<N>::identity() - q) * h;
    return SkewMatrix<N>::from_lower_of(0.5 * (k - transpose(k)));
}

}  // namespace saltlyap
