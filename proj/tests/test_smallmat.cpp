#include <gtest/gtest.h>

#include <random>

#include "saltlyap/smallmat.hpp"

using namespace saltlyap;

namespace {

void expect_near(const Mat3& a, const Mat3& b, double tol) {
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a(i, j), b(i, j), tol) << "entry (" << i << "," << j << ")";
}

Mat3 random_matrix(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Mat3 m;
    for (auto& e : m.a) e = u(rng);
    return m;
}

SkewMat3 random_skew(std::mt19937_64& rng, double max_norm) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SkewMat3 k({u(rng), u(rng), u(rng)});
    std::uniform_real_distribution<double> scale(0.0, max_norm);
    return (scale(rng) / k.frobenius_norm()) * k;
}

}  // namespace

TEST(Qr, Identity) {
    const auto f = qr_decompose(Mat3::identity());
    expect_near(f.q, Mat3::identity(), 1e-15);
    expect_near(f.r, Mat3::identity(), 1e-15);
}

TEST(Qr, DiagonalPositive) {
    const Mat3 d = Mat3::diagonal(Vector<3>{{2, 3, 4}});
    const auto f = qr_decompose(d);
    expect_near(f.q, Mat3::identity(), 1e-15);
    expect_near(f.r, d, 1e-15);
}

TEST(Qr, Permutation) {
    const Mat3 p = Mat3::from_rows({{0, 1, 0}, {1, 0, 0}, {0, 0, 1}});
    const auto f = qr_decompose(p);
    expect_near(f.q, p, 1e-15);
    expect_near(f.r, Mat3::identity(), 1e-15);
}

TEST(Qr, SingularThrows) {
    const Mat3 s = Mat3::from_rows({{1, 2, 3}, {2, 4, 6}, {0, 0, 1}});
    EXPECT_THROW(qr_decompose(s), SingularMatrixError);
}

TEST(Qr, RandomReconstructionProperty) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        const Mat3 m = random_matrix(rng);
        if (std::abs(determinant(m)) < 1e-3) continue;
        const auto f = qr_decompose(m);
        EXPECT_LE(frobenius_norm(f.q * f.r - m) / frobenius_norm(m), 1e-12);
        EXPECT_LE(orthogonality_defect(f.q), 1e-12);
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_GT(f.r(i, i), 0.0);
            for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(f.r(i, j), 0.0);
        }
    }
}

TEST(Qr, GenericDimension) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix<5> m;
    for (auto& e : m.a) e = u(rng);
    const auto f = qr_decompose(m);
    EXPECT_LE(frobenius_norm(f.q * f.r - m), 1e-12);
    EXPECT_LE(orthogonality_defect(f.q), 1e-12);
}

TEST(Inverse, Examples) {
    expect_near(inverse(Mat3::identity()), Mat3::identity(), 0.0);
    expect_near(inverse(Mat3::diagonal(Vector<3>{{2, 4, 5}})), Mat3::diagonal(Vector<3>{{0.5, 0.25, 0.2}}), 1e-16);
    const SkewMat3 k({1.0, 0.0, 0.0});
    const Mat3 expected = Mat3::from_rows({{0.5, 0.5, 0}, {-0.5, 0.5, 0}, {0, 0, 1}});
    expect_near(inverse(Mat3::identity() + k.expand()), expected, 1e-16);
}

TEST(Inverse, SingularThrows) {
    EXPECT_THROW(inverse(Mat3::zero()), SingularMatrixError);
    EXPECT_THROW(inverse(Matrix<4>::zero()), SingularMatrixError);
}

TEST(Inverse, RandomProperty) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const Mat3 m = random_matrix(rng);
        if (std::abs(determinant(m)) < 1e-2) continue;
        EXPECT_LE(frobenius_norm(m * inverse(m) - Mat3::identity()), 1e-12);
    }
    Matrix<4> m4;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& e : m4.a) e = u(rng);
    EXPECT_LE(frobenius_norm(m4 * inverse(m4) - Matrix<4>::identity()), 1e-12);
}

TEST(Skew, ExpansionIsExactlySkew) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat3 k = random_skew(rng, 1.0).expand();
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_EQ(k(i, i), 0.0);
            for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(k(i, j) + k(j, i), 0.0);
        }
    }
}

TEST(Skew, LowerOrderingAndNorm) {
    const SkewMat3 k({1.0, 2.0, 3.0});
    const Mat3 m = k.expand();
    EXPECT_EQ(m(1, 0), 1.0);
    EXPECT_EQ(m(2, 0), 2.0);
    EXPECT_EQ(m(2, 1), 3.0);
    EXPECT_EQ(m(0, 1), -1.0);
    EXPECT_NEAR(k.frobenius_norm(), frobenius_norm(m), 1e-15);
}

TEST(Cayley, ZeroIsIdentity) { expect_near(cayley(SkewMat3{}), Mat3::identity(), 0.0); }

TEST(Cayley, UnitPlaneRotation) {
    // 2x2 block formula (1 - a^2, 2a; -2a, 1 - a^2) / (1 + a^2) at a = 1
    const Mat3 expected = Mat3::from_rows({{0, 1, 0}, {-1, 0, 0}, {0, 0, 1}});
    expect_near(cayley(SkewMat3({1.0, 0.0, 0.0})), expected, 1e-15);
}

TEST(Cayley, OrthogonalWithUnitDeterminant) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
        const SkewMat3 k = random_skew(rng, 0.999);
        const Mat3 q = cayley(k);
        EXPECT_LE(orthogonality_defect(q), 1e-12);
        EXPECT_NEAR(determinant(q), 1.0, 1e-12);
    }
}

TEST(Cayley, NegationTransposes) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 500; ++trial) {
        const SkewMat3 k = random_skew(rng, 0.999);
        EXPECT_LE(frobenius_norm(cayley(-k) - transpose(cayley(k))), 1e-12);
    }
}

TEST(Cayley, FactorsCommute) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        const Mat3 km = random_skew(rng, 0.999).expand();
        const Mat3 g = Mat3::identity() - km;
        const Mat3 h = inverse(Mat3::identity() + km);
        EXPECT_LE(frobenius_norm(g * h - h * g), 1e-12);
    }
}

TEST(Cayley, InverseRoundTrip) {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 500; ++trial) {
        const SkewMat3 k = random_skew(rng, 0.999);
        const SkewMat3 back = inverse_cayley(cayley(k));
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back.lower()[i], k.lower()[i], 1e-12);
    }
}

TEST(Cayley, HalfTurnIsRejected) {
    // diag(-1, -1, 1) has a double eigenvalue at -1, outside the Cayley chart.
    EXPECT_THROW(inverse_cayley(Mat3::diagonal(Vector<3>{{-1, -1, 1}})), CayleyValidityError);
}
