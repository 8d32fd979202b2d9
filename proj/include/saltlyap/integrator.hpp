#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "saltlyap/errors.hpp"
#include "saltlyap/models.hpp"
#include "saltlyap/wiener.hpp"

namespace saltlyap {

enum class Scheme { EulerMaruyama, Heun };

inline std::string to_string(Scheme s) { return s == Scheme::EulerMaruyama ? "euler-maruyama" : "heun"; }

/// Euler-Maruyama converges to the Ito solution, Heun to the Stratonovich one.
constexpr Convention convention_for(Scheme s) {
    return s == Scheme::EulerMaruyama ? Convention::Ito : Convention::Stratonovich;
}

struct IntegratorConfig {
    Scheme scheme = Scheme::EulerMaruyama;
    double dt = 1e-3;
    std::size_t n_steps = 0;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("IntegratorConfig: dt must be positive");
    }
};

inline constexpr double kStateOverflow = 1e100;

template <std::size_t N>
void check_state(const Vector<N>& x, std::size_t step) {
    for (std::size_t i = 0; i < N; ++i) {
        if (!std::isfinite(x[i]) || std::abs(x[i]) > kStateOverflow) {
            throw NonFiniteStateError("state left the finite range", step);
        }
    }
}

template <StochasticSystem S>
void require_convention(const S& s, Scheme scheme) {
    if (s.convention() != convention_for(scheme)) {
        throw ArgumentError("integrator: " + to_string(scheme) + " needs a " + to_string(convention_for(scheme)) +
                            " system, got " + to_string(s.convention()));
    }
}

/// Heun predictor x + f0(x) dt + f1(x) dW.
template <StochasticSystem S>
Vector<S::dimension> heun_predictor(const S& s, const Vector<S::dimension>& x, double dt, double dW) {
    return x + s.drift(x) * dt + s.diffusion(x) * dW;
}

/// One step with no convention check; callers guarantee the match.
template <StochasticSystem S>
Vector<S::dimension> advance(const S& s, const Vector<S::dimension>& x, double dt, double dW, Scheme scheme) {
    if (scheme == Scheme::EulerMaruyama) {
        return x + s.drift(x) * dt + s.diffusion(x) * dW;
    }
    const auto pred = heun_predictor(s, x, dt, dW);
    return x + (s.drift(x) + s.drift(pred)) * (0.5 * dt) + (s.diffusion(x) + s.diffusion(pred)) * (0.5 * dW);
}

/// Binds a system to a scheme; construction fails on a convention mismatch.
template <StochasticSystem S>
class Integrator {
public:
    using StateT = Vector<S::dimension>;

    Integrator(S system, IntegratorConfig cfg) : system_(std::move(system)), cfg_(cfg) {
        cfg_.validate();
        require_convention(system_, cfg_.scheme);
    }

    /// Converts the system to the convention the scheme consumes first.
    static Integrator converting(const S& system, IntegratorConfig cfg) {
        return Integrator(convert_convention(system, convention_for(cfg.scheme)), cfg);
    }

    const S& system() const { return system_; }
    const IntegratorConfig& config() const { return cfg_; }

    StateT step(const StateT& x, double dW, std::size_t step_index = 0) const {
        StateT next = advance(system_, x, cfg_.dt, dW, cfg_.scheme);
        check_state(next, step_index);
        return next;
    }

    /// Integrates cfg.n_steps steps using increments path[offset, offset + n_steps).
    std::vector<StateT> simulate(const StateT& x0, const WienerPath& path, std::size_t offset = 0) const {
        check_path(path, offset, cfg_.n_steps);
        std::vector<StateT> traj;
        traj.reserve(cfg_.n_steps + 1);
        traj.push_back(x0);
        StateT x = x0;
        for (std::size_t k = 0; k < cfg_.n_steps; ++k) {
            x = step(x, path.increment(offset + k), k);
            traj.push_back(x);
        }
        return traj;
    }

    StateT terminal(const StateT& x0, const WienerPath& path, std::size_t offset = 0) const {
        check_path(path, offset, cfg_.n_steps);
        StateT x = x0;
        for (std::size_t k = 0; k < cfg_.n_steps; ++k) x = step(x, path.increment(offset + k), k);
        return x;
    }

private:
    void check_path(const WienerPath& path, std::size_t offset, std::size_t n) const {
        if (offset > path.size() || n > path.size() - offset) {
            throw ArgumentError("integrator: path too short for the requested steps");
        }
        if (path.dt() != cfg_.dt) throw ArgumentError("integrator: path dt differs from integrator dt");
    }

    S system_;
    IntegratorConfig cfg_;
};

template <StochasticSystem S>
Vector<S::dimension> step(const S& s, const Vector<S::dimension>& x, double dW, const IntegratorConfig& cfg) {
    return Integrator<S>(s, cfg).step(x, dW);
}

template <StochasticSystem S>
std::vector<Vector<S::dimension>> simulate(const S& s, const Vector<S::dimension>& x0, const WienerPath& path,
                                           const IntegratorConfig& cfg, std::size_t offset = 0) {
    return Integrator<S>(s, cfg).simulate(x0, path, offset);
}

struct SpinUpOptions {
    std::size_t steps = 50000;
    Scheme scheme = Scheme::EulerMaruyama;
    /// false: the spin-up integrates the noise-free drift and leaves the
    /// path untouched.
    bool with_noise = true;
    State3 initial = make_state(0.0, 1.0, 0.0);
};

/// Discards the transient from `initial`, consuming path[0, steps) when noise
/// is on. The system is converted to the scheme's convention first.
inline State3 spin_up(const SystemDef& s, const WienerPath& path, const SpinUpOptions& opt = {}) {
    IntegratorConfig cfg{opt.scheme, path.dt(), opt.steps};
    if (opt.with_noise) {
        return Integrator<SystemDef>::converting(s, cfg).terminal(opt.initial, path);
    }
    const auto quiet = SystemDef::deterministic(s.params()).with_convention(convention_for(opt.scheme));
    const Integrator<SystemDef> integ(quiet, cfg);
    State3 x = opt.initial;
    for (std::size_t k = 0; k < opt.steps; ++k) x = integ.step(x, 0.0, k);
    return x;
}

}  // namespace saltlyap
