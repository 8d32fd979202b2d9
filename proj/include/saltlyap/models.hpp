#pragma once

// Lorenz 63 with no noise, with transport (SALT) noise, and with linear
// multiplicative fluctuation-dissipation noise, written as
//
//   dx = f0(x) dt + f1(x) dW,      f1(x) = B x
//
// in either the Ito or the Stratonovich convention. Both noise fields are
// linear, so the convention change is the linear drift shift +-(1/2) B^2 x.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>

#include "saltlyap/errors.hpp"
#include "saltlyap/smallmat.hpp"

namespace saltlyap {

using State3 = Vector<3>;

inline State3 make_state(double x, double y, double z) { return State3{{x, y, z}}; }

enum class Convention { Ito, Stratonovich };

enum class NoiseKind { None, Salt, FluctuationDissipation };

inline std::string to_string(Convention c) { return c == Convention::Ito ? "ito" : "stratonovich"; }

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::None: return "deterministic";
        case NoiseKind::Salt: return "salt";
        case NoiseKind::FluctuationDissipation: return "fd";
    }
    return "unknown";
}

/// Convention each system is written in: SALT noise is Stratonovich, the
/// fluctuation-dissipation noise is Ito. The deterministic system has no
/// noise, so the choice is immaterial.
inline Convention declared_convention(NoiseKind k) {
    return k == NoiseKind::Salt ? Convention::Stratonovich : Convention::Ito;
}

struct LorenzParams {
    double sigma = 10.0;
    double r = 28.0;
    double b = 8.0 / 3.0;

    void validate() const {
        if (!(sigma > 0.0) || !(r > 0.0) || !(b > 0.0) || !std::isfinite(sigma) || !std::isfinite(r) ||
            !std::isfinite(b)) {
            throw ArgumentError("LorenzParams: sigma, r and b must be positive and finite");
        }
    }

    /// trace of the drift Jacobian, -(sigma + 1 + b)
    double drift_trace() const { return -(sigma + 1.0 + b); }

    friend bool operator==(const LorenzParams&, const LorenzParams&) = default;
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    double beta = 0.0;

    void validate() const {
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw ArgumentError("NoiseSpec: beta must be >= 0");
        if (kind == NoiseKind::None && beta != 0.0) {
            throw ArgumentError("NoiseSpec: deterministic system requires beta = 0");
        }
    }

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Anything the integrator and the Cayley engine can drive.
template <class S>
concept StochasticSystem = requires(const S& s, const Vector<S::dimension>& x, Convention c) {
    { s.drift(x) } -> std::same_as<Vector<S::dimension>>;
    { s.diffusion(x) } -> std::same_as<Vector<S::dimension>>;
    { s.jacobian_drift(x) } -> std::same_as<Matrix<S::dimension>>;
    { s.jacobian_diffusion(x) } -> std::same_as<Matrix<S::dimension>>;
    { s.convention() } -> std::same_as<Convention>;
    { s.with_convention(c) } -> std::same_as<S>;
};

class SystemDef {
public:
    static constexpr std::size_t dimension = 3;

    SystemDef() : SystemDef(LorenzParams{}, NoiseSpec{}) {}

    SystemDef(LorenzParams params, NoiseSpec noise)
        : params_(params), noise_(noise), convention_(declared_convention(noise.kind)) {
        params_.validate();
        noise_.validate();
        noise_matrix_ = build_noise_matrix();
        noise_matrix_sq_ = noise_matrix_ * noise_matrix_;
    }

    static SystemDef deterministic(LorenzParams p = {}) { return {p, {NoiseKind::None, 0.0}}; }
    static SystemDef salt(double beta, LorenzParams p = {}) { return {p, {NoiseKind::Salt, beta}}; }
    static SystemDef fluctuation_dissipation(double beta, LorenzParams p = {}) {
        return {p, {NoiseKind::FluctuationDissipation, beta}};
    }

    const LorenzParams& params() const { return params_; }
    const NoiseSpec& noise() const { return noise_; }
    Convention convention() const { return convention_; }

    /// B in f1(x) = B x.
    const Mat3& noise_matrix() const { return noise_matrix_; }

    /// Drift in this object's convention: the Lorenz field, shifted by the
    /// accumulated convention corrections.
    State3 drift(const State3& x) const {
        State3 f = lorenz_field(x);
        if (correction_ != 0) f += (0.5 * correction_) * (noise_matrix_sq_ * x);
        return f;
    }

    State3 diffusion(const State3& x) const { return noise_matrix_ * x; }

    Mat3 jacobian_drift(const State3& x) const {
        const auto& p = params_;
        Mat3 j = Mat3::from_rows({{-p.sigma, p.sigma, 0.0}, {p.r - x[2], -1.0, -x[0]}, {x[1], x[0], -p.b}});
        if (correction_ != 0) j += (0.5 * correction_) * noise_matrix_sq_;
        return j;
    }

    Mat3 jacobian_diffusion(const State3&) const { return noise_matrix_; }

    /// (1/2)(D f1) f1, the Stratonovich-to-Ito drift shift.
    State3 ito_correction(const State3& x) const { return 0.5 * (noise_matrix_sq_ * x); }

    /// Same dynamics, expressed in the target convention.
    SystemDef with_convention(Convention target) const {
        SystemDef out = *this;
        if (target == convention_) return out;
        out.correction_ += (target == Convention::Ito) ? 1 : -1;
        out.convention_ = target;
        return out;
    }

    /// Net number of Strat->Ito shifts applied relative to the declared form.
    int correction_count() const { return correction_; }

    friend bool operator==(const SystemDef&, const SystemDef&) = default;

private:
    State3 lorenz_field(const State3& x) const {
        const auto& p = params_;
        return make_state(p.sigma * (x[1] - x[0]), p.r * x[0] - x[0] * x[2] - x[1], x[0] * x[1] - p.b * x[2]);
    }

    Mat3 build_noise_matrix() const {
        const double beta = noise_.beta;
        switch (noise_.kind) {
            case NoiseKind::None: return Mat3::zero();
            case NoiseKind::Salt: return Mat3::from_rows({{0.0, 0.0, 0.0}, {0.0, 0.0, -beta}, {0.0, beta, 0.0}});
            case NoiseKind::FluctuationDissipation: return beta * Mat3::identity();
        }
        return Mat3::zero();
    }

    LorenzParams params_;
    NoiseSpec noise_;
    Convention convention_;
    Mat3 noise_matrix_;
    Mat3 noise_matrix_sq_;
    int correction_ = 0;
};

static_assert(StochasticSystem<SystemDef>);

inline State3 drift(const SystemDef& s, const State3& x) { return s.drift(x); }
inline State3 diffusion(const SystemDef& s, const State3& x) { return s.diffusion(x); }
inline Mat3 jacobian_drift(const SystemDef& s, const State3& x) { return s.jacobian_drift(x); }
inline Mat3 jacobian_diffusion(const SystemDef& s, const State3& x) { return s.jacobian_diffusion(x); }

template <StochasticSystem S>
S convert_convention(const S& s, Convention target) {
    return s.with_convention(target);
}

}  // namespace saltlyap
