#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "saltlyap/analysis.hpp"
#include "saltlyap/cayley_nle.hpp"

using namespace saltlyap;

namespace {

const LorenzParams kStd{10.0, 28.0, 8.0 / 3.0};

Mat3 random_orthogonal(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Mat3 m;
    for (auto& e : m.a) e = n(rng);
    return qr_decompose(m).q;
}

SkewMat3 random_skew(std::mt19937_64& rng, double max_norm) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SkewMat3 k({u(rng), u(rng), u(rng)});
    std::uniform_real_distribution<double> scale(0.0, max_norm);
    return (scale(rng) / k.frobenius_norm()) * k;
}

Mat3 random_matrix(std::mt19937_64& rng, double s) {
    std::uniform_real_distribution<double> u(-s, s);
    Mat3 m;
    for (auto& e : m.a) e = u(rng);
    return m;
}

}  // namespace

TEST(ConjugatedJacobians, IdentityFrame) {
    const auto s = SystemDef::salt(0.5, kStd);
    const auto x = make_state(1, 2, 3);
    const auto j = conjugated_jacobians(s, x, Mat3::identity());
    EXPECT_EQ(j.j0, s.jacobian_drift(x));
    EXPECT_EQ(j.j1, s.jacobian_diffusion(x));
}

TEST(ConjugatedJacobians, TracePreserved) {
    std::mt19937_64 rng(2);
    const auto s = SystemDef::fluctuation_dissipation(0.5, kStd);
    for (int i = 0; i < 200; ++i) {
        const auto q = random_orthogonal(rng);
        const auto x = make_state(i * 0.1, -i * 0.2, i * 0.3);
        const auto j = conjugated_jacobians(s, x, q);
        EXPECT_NEAR(trace(j.j0), trace(s.jacobian_drift(x)), 1e-12);
        EXPECT_NEAR(trace(j.j1), 1.5, 1e-12);
        EXPECT_NEAR(trace(j.j0), -13.6667, 5e-5);
    }
}

TEST(StepKRho, AtZeroK) {
    // At K = 0, G = H = I so A = j0 dt: drho = diag(j0) dt and the K increment
    // is minus one half of the strict lower triangle of j0 dt.
    const Mat3 j0 = Mat3::from_rows({{-10, 10, 0}, {18, -1, -4}, {6, 4, -8.0 / 3.0}});
    const double dt = 1e-3;
    for (auto mode : {KUpdate::Composed, KUpdate::Additive}) {
        const auto out = step_k_rho(CayleyState3{}, j0, Mat3::zero(), dt, 0.0, mode);
        EXPECT_NEAR(out.rho[0], -10 * dt, 1e-18);
        EXPECT_NEAR(out.rho[1], -1 * dt, 1e-18);
        EXPECT_NEAR(out.rho[2], -8.0 / 3.0 * dt, 1e-18);
        EXPECT_NEAR(out.k.lower()[0], -0.5 * 18 * dt, 1e-16);
        EXPECT_NEAR(out.k.lower()[1], -0.5 * 6 * dt, 1e-16);
        EXPECT_NEAR(out.k.lower()[2], -0.5 * 4 * dt, 1e-16);
        EXPECT_EQ(out.step, 1u);
    }
}

TEST(StepKRho, ZeroIncrementLeavesStateAlone) {
    std::mt19937_64 rng(3);
    CayleyState3 cs;
    cs.k = random_skew(rng, 0.7);
    cs.rho = Vector<3>{{1.0, -2.0, 3.0}};
    cs.step = 41;
    for (auto mode : {KUpdate::Composed, KUpdate::Additive}) {
        const auto out = step_k_rho(cs, random_matrix(rng, 5), random_matrix(rng, 5), 0.0, 0.0, mode);
        EXPECT_EQ(out.k, cs.k);
        EXPECT_EQ(out.rho, cs.rho);
        EXPECT_EQ(out.step, 42u);
    }
}

TEST(StepKRho, DiscreteLiouvilleIdentity) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    for (auto mode : {KUpdate::Composed, KUpdate::Additive}) {
        for (int trial = 0; trial < 10000; ++trial) {
            CayleyState3 cs;
            cs.k = random_skew(rng, 0.79);
            const Mat3 j0 = random_matrix(rng, 30.0), j1 = random_matrix(rng, 1.0);
            const double dt = 1e-3, dW = std::sqrt(dt) * n(rng);
            const auto out = step_k_rho(cs, j0, j1, dt, dW, mode);
            const double drho = out.rho[0] + out.rho[1] + out.rho[2];
            const double expected = trace(j0) * dt + trace(j1) * dW;
            const double scale = frobenius_norm(j0 * dt + j1 * dW);
            ASSERT_LE(std::abs(drho - expected), 1e-12 * scale);
        }
    }
}

TEST(StepKRho, HeunAveragesTraces) {
    std::mt19937_64 rng(5);
    for (auto mode : {KUpdate::Composed, KUpdate::Additive}) {
        for (int trial = 0; trial < 1000; ++trial) {
            CayleyState3 cs;
            cs.k = random_skew(rng, 0.7);
            const Mat3 a0 = random_matrix(rng, 30), a1 = random_matrix(rng, 1);
            const Mat3 b0 = random_matrix(rng, 30), b1 = random_matrix(rng, 1);
            const double dt = 1e-3, dW = 0.03;
            const auto out = step_k_rho_heun(cs, a0, a1, b0, b1, dt, dW, mode);
            const double expected = 0.5 * (trace(a0) + trace(b0)) * dt + 0.5 * (trace(a1) + trace(b1)) * dW;
            ASSERT_NEAR(out.rho[0] + out.rho[1] + out.rho[2], expected, 1e-12 * 30 * dt * 9);
        }
    }
}

TEST(StepKRho, KStaysExactlySkew) {
    std::mt19937_64 rng(6);
    CayleyState3 cs;
    for (int i = 0; i < 1000; ++i) {
        cs = step_k_rho(cs, random_matrix(rng, 20), random_matrix(rng, 1), 1e-3, 0.01);
        cs = maybe_restart(cs, 0.8);
        const Mat3 k = cs.k.expand();
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(k(r, c), -k(c, r));
    }
}

TEST(StepKRho, ValidityErrorWhenNormReachesOne) {
    CayleyState3 cs;
    cs.k = SkewMat3({0.7, 0.0, 0.0});  // ||K||_F = 0.99
    const Mat3 big = Mat3::from_rows({{0, 0, 0}, {-50, 0, 0}, {0, 0, 0}});
    EXPECT_THROW(step_k_rho(cs, big, Mat3::zero(), 1e-2, 0.0, KUpdate::Additive), CayleyValidityError);
    cs.k = SkewMat3({0.8, 0.0, 0.0});
    EXPECT_THROW(step_k_rho(cs, Mat3::zero(), Mat3::zero(), 1e-3, 0.0), CayleyValidityError);
}

TEST(MaybeRestart, BelowThresholdUnchanged) {
    CayleyState3 cs;
    cs.k = (0.1 / SkewMat3({1, 1, 1}).frobenius_norm()) * SkewMat3({1, 1, 1});
    const auto out = maybe_restart(cs, 0.8);
    EXPECT_EQ(out.k, cs.k);
    EXPECT_EQ(out.restarts, 0u);
}

TEST(MaybeRestart, BanksRotationAndKeepsRho) {
    std::mt19937_64 rng(7);
    CayleyState3 cs;
    cs.q_accum = random_orthogonal(rng);
    cs.k = SkewMat3({0.5, -0.3, 0.4});
    ASSERT_GE(cs.k.frobenius_norm(), 0.8);
    cs.rho = Vector<3>{{3.25, -0.5, -40.0}};
    const Mat3 frame_before = cs.frame();
    const auto out = maybe_restart(cs, 0.8);
    EXPECT_EQ(out.k, SkewMat3{});
    EXPECT_EQ(out.restarts, 1u);
    EXPECT_EQ(out.rho, cs.rho);
    EXPECT_LE(orthogonality_defect(out.q_accum), 1e-10);
    EXPECT_LE(frobenius_norm(out.frame() - frame_before), 1e-14);
    EXPECT_THROW(maybe_restart(cs, 1.0), ArgumentError);
}

TEST(ExponentsFromRho, Examples) {
    const auto a = exponents_from_rho(Vector<3>{{1, 0, -2}}, 2.0);
    EXPECT_EQ(a, (Vector<3>{{0.5, 0.0, -1.0}}));
    EXPECT_EQ(exponents_from_rho(Vector<3>{}, 5.0), (Vector<3>{}));
    EXPECT_EQ(exponents_from_rho(Vector<3>{{-2, 1, 0}}, 2.0), (Vector<3>{{0.5, 0.0, -1.0}}));
    EXPECT_THROW(exponents_from_rho(Vector<3>{}, 0.0), ArgumentError);
}

class RunNle : public ::testing::Test {
protected:
    static constexpr std::size_t kSpin = 20000;
    static constexpr std::size_t kSteps = 40000;
    WienerPath path_ = generate_path(3, kSpin + kSteps, 0.001);

    NleOptions options() const {
        NleOptions o;
        o.n_steps = kSteps;
        o.path_offset = kSpin;
        return o;
    }
    State3 start(const SystemDef& s) const {
        SpinUpOptions su;
        su.steps = kSpin;
        return spin_up(s, path_, su);
    }
};

TEST_F(RunNle, AgreesWithBenettinReference) {
    // Independent reference: Gram-Schmidt QR of the one-step exponential map
    // along the same base trajectory.
    const auto s = SystemDef::deterministic(kStd);
    const auto x0 = start(s);
    const auto res = run_nle(s, x0, path_, options());

    IntegratorConfig cfg{Scheme::EulerMaruyama, 0.001, kSteps};
    const auto traj = Integrator<SystemDef>(s, cfg).simulate(x0, path_, kSpin);
    const auto ref = oracle::benettin(
        kSteps, 0.001,
        [&](std::size_t k) {
            std::array<oracle::Mat3, 2> j{};
            const Mat3 a = s.jacobian_drift(traj[k]);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) j[0][r][c] = a(r, c);
            return j;
        },
        [](std::size_t) { return 0.0; });
    EXPECT_NEAR(res.lambdas[0], ref.lambdas[0], 0.05);
    EXPECT_NEAR(res.lambdas[1], ref.lambdas[1], 0.05);
    EXPECT_NEAR(res.lambdas[2], ref.lambdas[2], 0.05);
}

TEST_F(RunNle, SumMatchesTraceIdentity) {
    for (const auto& s : {SystemDef::deterministic(kStd), SystemDef::salt(0.5, kStd),
                          SystemDef::fluctuation_dissipation(0.5, kStd)}) {
        const auto res = run_nle(s, start(s), path_, options());
        const double expected = theoretical_sum(s, res.w_total, res.total_time);
        EXPECT_LE(std::abs(res.sum - expected), 1e-10 * std::abs(expected));
        EXPECT_LE(res.trace_residual, 1e-10 * std::abs(expected));
        EXPECT_NEAR(res.sum, res.lambdas[0] + res.lambdas[1] + res.lambdas[2], 1e-12);
    }
}

TEST_F(RunNle, RestartThresholdDoesNotChangeExponents) {
    const auto s = SystemDef::salt(0.5, kStd);
    auto a = options(), b = options();
    a.eta = 0.8;
    b.eta = 0.5;
    const auto x0 = start(s);
    const auto ra = run_nle(s, x0, path_, a);
    const auto rb = run_nle(s, x0, path_, b);
    EXPECT_NE(ra.restarts, rb.restarts);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(ra.lambdas[i], rb.lambdas[i], 1e-6);
}

TEST_F(RunNle, AdditiveUpdateDependsOnThreshold) {
    // The literal additive increment is not equivariant under restarts, so the
    // threshold leaks into the exponents at the discretisation-error level.
    const auto s = SystemDef::deterministic(kStd);
    auto a = options(), b = options();
    a.k_update = b.k_update = KUpdate::Additive;
    a.eta = 0.8;
    b.eta = 0.5;
    const auto x0 = start(s);
    const auto ra = run_nle(s, x0, path_, a);
    const auto rb = run_nle(s, x0, path_, b);
    EXPECT_GT(std::abs(ra.lambdas[0] - rb.lambdas[0]), 1e-6);
    EXPECT_NEAR(ra.sum, rb.sum, 1e-10);
}

TEST_F(RunNle, HeunSchemeKeepsTraceIdentity) {
    const auto s = SystemDef::fluctuation_dissipation(0.5, kStd).with_convention(Convention::Stratonovich);
    auto o = options();
    o.scheme = Scheme::Heun;
    SpinUpOptions su;
    su.steps = kSpin;
    su.scheme = Scheme::Heun;
    const auto res = run_nle(s, spin_up(s, path_, su), path_, o);
    const double expected = theoretical_sum(s, res.w_total, res.total_time);
    EXPECT_LE(std::abs(res.sum - expected), 1e-10 * std::abs(expected));
}

TEST_F(RunNle, SeriesAndOrthogonality) {
    const auto s = SystemDef::deterministic(kStd);
    auto o = options();
    o.sample_every = 1000;
    const auto res = run_nle(s, start(s), path_, o);
    ASSERT_EQ(res.rho_series.size(), kSteps / 1000);
    for (std::size_t i = 1; i < res.rho_series.size(); ++i) EXPECT_GT(res.rho_series[i].t, res.rho_series[i - 1].t);
    EXPECT_DOUBLE_EQ(res.rho_series.back().t, res.total_time);
    EXPECT_LE(res.max_orthogonality_defect, 1e-10);
    EXPECT_GT(res.restarts, 0u);
}

TEST_F(RunNle, ArgumentErrors) {
    const auto s = SystemDef::deterministic(kStd);
    auto o = options();
    o.n_steps = kSteps + 1;
    EXPECT_THROW(run_nle(s, make_state(1, 1, 1), path_, o), ArgumentError);
    o = options();
    o.eta = 1.0;
    EXPECT_THROW(run_nle(s, make_state(1, 1, 1), path_, o), ArgumentError);
}

TEST(RunNleBlowUp, ReportsFailingStep) {
    // dt = 0.1 is far outside forward Euler's stability region for this system.
    const auto path = generate_path(1, 1000, 0.1);
    NleOptions o;
    o.n_steps = 1000;
    try {
        run_nle(SystemDef::deterministic(kStd), make_state(1, 1, 1), path, o);
        FAIL() << "expected blow-up";
    } catch (const NonFiniteStateError& e) {
        EXPECT_LT(e.step(), 1000u);
    } catch (const CayleyValidityError&) {
        // the frame can also leave the chart first; both are numerical failures
    }
}
