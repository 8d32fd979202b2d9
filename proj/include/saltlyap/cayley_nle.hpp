#pragma once

// Numerical Lyapunov exponents via the Cayley-parameterised QR method.
//
// The variational flow v_t = Q R is tracked through Q = Q0 * cay(K), with K
// skew-symmetric and Q0 the product of rotations banked at restarts. Per step,
// with M = Q0^T (J0 dt + J1 dW) Q0, G = I - K, H = (I + K)^{-1}:
//
//   A      = H^T G^T M G H                (= Q^T M Q in the restart frame)
//   Omega  = skew completion of the strict lower triangle of A
//   drho_a = A_aa
//   dK     = -(1/2) G Omega G^T
//
// Because G H is orthogonal, sum_a drho_a = trace(M) holds to round-off on
// every step. This is the discrete form of the Liouville trace identity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "saltlyap/errors.hpp"
#include "saltlyap/integrator.hpp"
#include "saltlyap/models.hpp"
#include "saltlyap/smallmat.hpp"
#include "saltlyap/wiener.hpp"

namespace saltlyap {

/// How a frame increment is applied to K.
enum class KUpdate {
    /// cay(K') = cay(K) * cay(D), with D the increment evaluated at K = 0 in
    /// the current frame. Restarting leaves the frame sequence unchanged.
    Composed,
    /// K' = K + dK, the literal explicit Euler increment.
    Additive,
};

inline std::string to_string(KUpdate u) { return u == KUpdate::Composed ? "composed" : "additive"; }

template <std::size_t N>
struct CayleyState {
    SkewMatrix<N> k{};
    Vector<N> rho{};
    Matrix<N> q_accum = Matrix<N>::identity();
    std::size_t step = 0;
    std::size_t restarts = 0;

    /// Current orthogonal factor, q_accum * cay(k).
    Matrix<N> frame() const { return q_accum * cayley(k); }
};

using CayleyState3 = CayleyState<3>;

template <std::size_t N>
struct ConjugatedJacobians {
    Matrix<N> j0;
    Matrix<N> j1;
};

/// Q0^T Df_j(x) Q0 for the drift (j = 0) and the single noise channel (j = 1).
template <StochasticSystem S>
ConjugatedJacobians<S::dimension> conjugated_jacobians(const S& s, const Vector<S::dimension>& x,
                                                       const Matrix<S::dimension>& q0) {
    const auto qt = transpose(q0);
    return {qt * s.jacobian_drift(x) * q0, qt * s.jacobian_diffusion(x) * q0};
}

template <std::size_t N>
struct FrameIncrement {
    Matrix<N> a;        // conjugated generator H^T G^T M G H
    SkewMatrix<N> omega;  // skew part of Q^T dQ, from the strict lower triangle of a
    Vector<N> drho;
};

template <std::size_t N>
FrameIncrement<N> frame_increment(const SkewMatrix<N>& k, const Matrix<N>& m) {
    const Matrix<N> km = k.expand();
    const Matrix<N> g = Matrix<N>::identity() - km;
    const Matrix<N> h = inverse(Matrix<N>::identity() + km);
    const Matrix<N> gh = g * h;
    const Matrix<N> a = transpose(gh) * m * gh;
    return {a, SkewMatrix<N>::from_lower_of(a), diagonal_of(a)};
}

/// dK = -(1/2) G Omega G^T, the additive increment at K.
template <std::size_t N>
SkewMatrix<N> additive_dk(const SkewMatrix<N>& k, const SkewMatrix<N>& omega) {
    const Matrix<N> g = Matrix<N>::identity() - k.expand();
    return SkewMatrix<N>::from_lower_of(-0.5 * (g * omega.expand() * transpose(g)));
}

inline constexpr double kCayleyNormLimit = 1.0;

template <std::size_t N>
void check_cayley_validity(const SkewMatrix<N>& k) {
    const double nk = k.frobenius_norm();
    if (!(nk < kCayleyNormLimit)) {
        throw CayleyValidityError("step_k_rho: ||K||_F reached " + std::to_string(nk) +
                                  "; restart threshold too loose");
    }
}

/// K after applying the frame rotation increment D (in the current frame).
template <std::size_t N>
SkewMatrix<N> compose_k(const SkewMatrix<N>& k, const SkewMatrix<N>& d) {
    if (d == SkewMatrix<N>{}) return k;
    return inverse_cayley(cayley(k) * cayley(d));
}

/// One explicit step of the K and rho equations driven by M = j0 dt + j1 dW.
template <std::size_t N>
CayleyState<N> step_k_rho(const CayleyState<N>& cs, const Matrix<N>& j0, const Matrix<N>& j1, double dt,
                          double dW, KUpdate update = KUpdate::Composed) {
    if (!(cs.k.frobenius_norm() < kCayleyNormLimit)) {
        throw CayleyValidityError("step_k_rho: ||K||_F must be below 1");
    }
    const Matrix<N> m = j0 * dt + j1 * dW;
    const auto inc = frame_increment(cs.k, m);

    CayleyState<N> out = cs;
    out.rho += inc.drho;
    if (update == KUpdate::Composed) {
        out.k = compose_k(cs.k, -0.5 * inc.omega);
    } else {
        out.k = cs.k + additive_dk(cs.k, inc.omega);
    }
    check_cayley_validity(out.k);
    ++out.step;
    return out;
}

/// Predictor-corrector (Heun) step: increments are averaged between the
/// current state and the predicted state, where (pj0, pj1) are the conjugated
/// Jacobians at the predicted base state.
template <std::size_t N>
CayleyState<N> step_k_rho_heun(const CayleyState<N>& cs, const Matrix<N>& j0, const Matrix<N>& j1,
                               const Matrix<N>& pj0, const Matrix<N>& pj1, double dt, double dW,
                               KUpdate update = KUpdate::Composed) {
    if (!(cs.k.frobenius_norm() < kCayleyNormLimit)) {
        throw CayleyValidityError("step_k_rho: ||K||_F must be below 1");
    }
    const Matrix<N> m1 = j0 * dt + j1 * dW;
    const Matrix<N> m2 = pj0 * dt + pj1 * dW;
    const auto inc1 = frame_increment(cs.k, m1);

    CayleyState<N> out = cs;
    if (update == KUpdate::Composed) {
        const SkewMatrix<N> d1 = -0.5 * inc1.omega;
        const SkewMatrix<N> k_pred = compose_k(cs.k, d1);
        const auto inc2 = frame_increment(k_pred, m2);
        const SkewMatrix<N> d = 0.5 * (d1 + (-0.5 * inc2.omega));
        out.k = compose_k(cs.k, d);
        out.rho += 0.5 * (inc1.drho + inc2.drho);
    } else {
        const SkewMatrix<N> dk1 = additive_dk(cs.k, inc1.omega);
        const SkewMatrix<N> k_pred = cs.k + dk1;
        check_cayley_validity(k_pred);
        const auto inc2 = frame_increment(k_pred, m2);
        const SkewMatrix<N> dk2 = additive_dk(k_pred, inc2.omega);
        out.k = cs.k + 0.5 * (dk1 + dk2);
        out.rho += 0.5 * (inc1.drho + inc2.drho);
    }
    check_cayley_validity(out.k);
    ++out.step;
    return out;
}

/// Re-orthogonalises q_accum through its QR factor.
template <std::size_t N>
void reorthogonalize(CayleyState<N>& cs) {
    cs.q_accum = qr_decompose(cs.q_accum).q;
}

/// When ||K||_F >= eta, banks cay(K) into q_accum and resets K to zero. rho
/// carries over unchanged.
template <std::size_t N>
CayleyState<N> maybe_restart(const CayleyState<N>& cs, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw ArgumentError("maybe_restart: eta must lie in (0, 1)");
    if (cs.k.frobenius_norm() < eta) return cs;
    CayleyState<N> out = cs;
    out.q_accum = cs.q_accum * cayley(cs.k);
    out.k = SkewMatrix<N>{};
    ++out.restarts;
    return out;
}

/// rho / T, sorted descending.
template <std::size_t N>
Vector<N> exponents_from_rho(const Vector<N>& rho, double t) {
    if (!(t > 0.0)) throw ArgumentError("exponents_from_rho: T must be positive");
    Vector<N> lam = rho * (1.0 / t);
    std::sort(lam.v.begin(), lam.v.end(), std::greater<>());
    return lam;
}

template <std::size_t N>
struct RhoSample {
    double t;
    Vector<N> rho;
};

template <std::size_t N>
struct NleResultN {
    Vector<N> lambdas{};             // sorted descending
    double sum = 0.0;
    double trace_residual = 0.0;
    std::size_t restarts = 0;
    std::vector<RhoSample<N>> rho_series;
    Vector<N> rho{};                 // final accumulators, frame order
    Vector<N> final_state{};
    double total_time = 0.0;
    double w_total = 0.0;            // sum of consumed increments
    double max_orthogonality_defect = 0.0;
};

using NleResult = NleResultN<3>;

struct NleOptions {
    std::size_t n_steps = 100000;
    double eta = 0.8;
    /// First path increment consumed; spin-up uses the ones before it.
    std::size_t path_offset = 0;
    std::size_t sample_every = 100;
    /// Drives both the base state and the K/rho equations.
    Scheme scheme = Scheme::EulerMaruyama;
    KUpdate k_update = KUpdate::Composed;
    std::size_t reorthogonalize_every = 10000;
};

/// Co-evolves the base state and the Cayley frame. The variational equation
/// uses the Jacobians of `s` exactly as given; the base state is integrated
/// with `s` converted to the convention the scheme consumes.
template <StochasticSystem S>
NleResultN<S::dimension> run_nle(const S& s, const Vector<S::dimension>& x0, const WienerPath& path,
                                 const NleOptions& opt) {
    constexpr std::size_t N = S::dimension;
    const double dt = path.dt();
    if (opt.n_steps == 0) throw ArgumentError("run_nle: n_steps must be positive");
    if (!(opt.eta > 0.0 && opt.eta < 1.0)) throw ArgumentError("run_nle: eta must lie in (0, 1)");
    if (opt.sample_every == 0) throw ArgumentError("run_nle: sample_every must be positive");
    if (opt.path_offset > path.size() || opt.n_steps > path.size() - opt.path_offset) {
        throw ArgumentError("run_nle: path too short");
    }

    const S dynamics = convert_convention(s, convention_for(opt.scheme));
    const bool heun = opt.scheme == Scheme::Heun;

    NleResultN<N> res;
    res.rho_series.reserve(opt.n_steps / opt.sample_every + 1);
    CayleyState<N> cs;
    Vector<N> x = x0;

    for (std::size_t n = 0; n < opt.n_steps; ++n) {
        const double dW = path.increment(opt.path_offset + n);
        const auto jac = conjugated_jacobians(s, x, cs.q_accum);
        if (heun) {
            const auto pred = heun_predictor(dynamics, x, dt, dW);
            const auto pjac = conjugated_jacobians(s, pred, cs.q_accum);
            cs = step_k_rho_heun(cs, jac.j0, jac.j1, pjac.j0, pjac.j1, dt, dW, opt.k_update);
        } else {
            cs = step_k_rho(cs, jac.j0, jac.j1, dt, dW, opt.k_update);
        }
        x = advance(dynamics, x, dt, dW, opt.scheme);
        check_state(x, n);

        const std::size_t before = cs.restarts;
        cs = maybe_restart(cs, opt.eta);
        if (cs.restarts != before || (n + 1) % opt.reorthogonalize_every == 0) {
            res.max_orthogonality_defect = std::max(res.max_orthogonality_defect, orthogonality_defect(cs.q_accum));
            reorthogonalize(cs);
        }
        if ((n + 1) % opt.sample_every == 0 || n + 1 == opt.n_steps) {
            res.rho_series.push_back({static_cast<double>(n + 1) * dt, cs.rho});
        }
    }
    res.max_orthogonality_defect = std::max(res.max_orthogonality_defect, orthogonality_defect(cs.frame()));

    const double total = static_cast<double>(opt.n_steps) * dt;
    res.total_time = total;
    res.rho = cs.rho;
    res.lambdas = exponents_from_rho(cs.rho, total);
    res.sum = 0.0;
    for (std::size_t a = 0; a < N; ++a) res.sum += res.lambdas[a];
    res.restarts = cs.restarts;
    res.final_state = x;
    res.w_total = path.window_sum(opt.path_offset, opt.path_offset + opt.n_steps);
    res.trace_residual =
        std::abs(res.sum - (trace(s.jacobian_drift(x0)) + trace(s.jacobian_diffusion(x0)) * res.w_total / total));
    return res;
}

}  // namespace saltlyap
