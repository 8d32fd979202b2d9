#pragma once

// Closed-form oracles for the exponent sum, boundedness diagnostics, and the
// experiment drivers (single runs, beta sweeps, convergence series).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "saltlyap/cayley_nle.hpp"
#include "saltlyap/errors.hpp"
#include "saltlyap/integrator.hpp"
#include "saltlyap/models.hpp"
#include "saltlyap/number_format.hpp"
#include "saltlyap/wiener.hpp"

namespace saltlyap {

/// Long-time exponent sum trace(Df0) + trace(Df1) W_T / T. Lorenz traces are
/// state independent, so they are read off at the origin.
template <StochasticSystem S>
double theoretical_sum(const S& s, double w_total, double t) {
    if (!(t > 0.0)) throw ArgumentError("theoretical_sum: T must be positive");
    const Vector<S::dimension> origin{};
    return trace(s.jacobian_drift(origin)) + trace(s.jacobian_diffusion(origin)) * w_total / t;
}

/// (1/T) sum_k [trace Df0(x_k) dt + trace Df1(x_k) dW_k], the finite-time
/// log-determinant rate of the variational flow along a stored trajectory.
template <StochasticSystem S>
double liouville_oracle(const S& s, std::span<const Vector<S::dimension>> trajectory, const WienerPath& path,
                        std::size_t offset = 0) {
    if (trajectory.size() < 2) throw ArgumentError("liouville_oracle: trajectory needs at least one step");
    const std::size_t n = trajectory.size() - 1;
    if (offset > path.size() || n > path.size() - offset) {
        throw ArgumentError("liouville_oracle: trajectory and path lengths do not match");
    }
    const double dt = path.dt();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& x = trajectory[k];
        acc += trace(s.jacobian_drift(x)) * dt + trace(s.jacobian_diffusion(x)) * path.increment(offset + k);
    }
    return acc / (static_cast<double>(n) * dt);
}

/// V = r X^2 + sigma Y^2 + sigma (Z - 2r)^2
inline double lyapunov_function(const LorenzParams& p, const State3& x) {
    const double dz = x[2] - 2.0 * p.r;
    return p.r * x[0] * x[0] + p.sigma * x[1] * x[1] + p.sigma * dz * dz;
}

/// dV/dt along the deterministic drift, -2 sigma (r X^2 + Y^2 + b Z^2 - 2 b r Z).
inline double lyapunov_derivative(const LorenzParams& p, const State3& x) {
    return -2.0 * p.sigma * (p.r * x[0] * x[0] + x[1] * x[1] + p.b * x[2] * x[2] - 2.0 * p.b * p.r * x[2]);
}

/// dV/dt / (2 r^2 sigma b) = 1 - X^2/(b r) - Y^2/(b r^2) - (Z - r)^2/r^2.
/// Positive inside the critical ellipsoid, negative outside, zero on it.
inline double ellipsoid_residual(const LorenzParams& p, const State3& x) {
    const double dz = x[2] - p.r;
    return 1.0 - x[0] * x[0] / (p.b * p.r) - x[1] * x[1] / (p.b * p.r * p.r) - dz * dz / (p.r * p.r);
}

// ---------------------------------------------------------------------------
// Experiment pipeline

enum class ConventionMode {
    /// Variational Jacobians of each system's declared form (SALT
    /// Stratonovich, FD Ito).
    Paper,
    /// Every system converted to Stratonovich before the variational
    /// Jacobians are taken.
    StratonovichStrict,
};

inline std::string to_string(ConventionMode m) {
    return m == ConventionMode::Paper ? "paper" : "stratonovich-strict";
}

struct ExperimentConfig {
    LorenzParams params{};
    double dt = 1e-3;
    std::size_t spin_up_steps = 50000;
    std::size_t nle_steps = 100000;
    double eta = 0.8;
    Scheme scheme = Scheme::EulerMaruyama;
    ConventionMode convention_mode = ConventionMode::Paper;
    KUpdate k_update = KUpdate::Composed;
    std::size_t sample_every = 100;
    bool spin_up_noise = true;

    std::size_t path_length() const { return spin_up_steps + nle_steps; }

    void validate() const {
        params.validate();
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("dt must be positive");
        if (nle_steps == 0) throw ArgumentError("nle_steps must be positive");
        if (!(eta > 0.0 && eta < 1.0)) throw ArgumentError("eta must lie in (0, 1)");
        if (sample_every == 0) throw ArgumentError("sample_every must be positive");
    }
};

/// The form whose Jacobians drive the variational equation.
inline SystemDef variational_system(NoiseKind kind, double beta, const ExperimentConfig& cfg) {
    const SystemDef declared(cfg.params, NoiseSpec{kind, beta});
    return cfg.convention_mode == ConventionMode::Paper ? declared
                                                        : declared.with_convention(Convention::Stratonovich);
}

struct ExperimentResult {
    SystemDef system;  // consumed form
    State3 start;      // state after spin-up
    NleResult nle;
    double theory_sum = 0.0;
    double w_over_t() const { return nle.w_total / nle.total_time; }
};

inline ExperimentResult run_experiment(NoiseKind kind, double beta, const WienerPath& path,
                                       const ExperimentConfig& cfg) {
    cfg.validate();
    if (path.size() < cfg.path_length()) throw ArgumentError("run_experiment: path too short");
    if (path.dt() != cfg.dt) throw ArgumentError("run_experiment: path dt differs from config dt");
    const SystemDef sys = variational_system(kind, beta, cfg);

    SpinUpOptions su;
    su.steps = cfg.spin_up_steps;
    su.scheme = cfg.scheme;
    su.with_noise = cfg.spin_up_noise;
    const State3 start = spin_up(sys, path, su);

    NleOptions opt;
    opt.n_steps = cfg.nle_steps;
    opt.eta = cfg.eta;
    opt.path_offset = cfg.spin_up_steps;
    opt.sample_every = cfg.sample_every;
    opt.scheme = cfg.scheme;
    opt.k_update = cfg.k_update;

    ExperimentResult out{sys, start, run_nle(sys, start, path, opt), 0.0};
    out.theory_sum = theoretical_sum(sys, out.nle.w_total, out.nle.total_time);
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    double beta = 0.0;
    std::uint64_t seed = 0;
    double sum_salt = 0.0;
    double sum_fd = 0.0;
    double w_T_over_T = 0.0;
    double theory_fd_sum = 0.0;
};

enum class SweepMode { FreshPathPerBeta, FixedPath };

inline std::string to_string(SweepMode m) { return m == SweepMode::FixedPath ? "fixed" : "fresh"; }

/// n values evenly spaced over [lo, hi]; a single value is lo.
inline std::vector<double> beta_grid(double lo, double hi, std::size_t n) {
    if (n == 0) throw ArgumentError("beta_grid: count must be positive");
    if (!(lo >= 0.0) || !(hi >= lo)) throw ArgumentError("beta_grid: need 0 <= lo <= hi");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

/// Runs SALT and FD for every beta. FixedPath shares one path (seed
/// base_seed) across all rows; FreshPathPerBeta uses seed base_seed + index.
/// Rows come back in input order regardless of `jobs`.
inline std::vector<SweepRow> sweep_beta(const std::vector<double>& betas, SweepMode mode, std::uint64_t base_seed,
                                        const ExperimentConfig& cfg, unsigned jobs = 1) {
    if (betas.empty()) throw ArgumentError("sweep_beta: no beta values");
    for (double b : betas) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw ArgumentError("sweep_beta: beta values must be >= 0");
    }
    cfg.validate();

    std::optional<WienerPath> shared;
    if (mode == SweepMode::FixedPath) shared.emplace(generate_path(base_seed, cfg.path_length(), cfg.dt));

    std::vector<SweepRow> rows(betas.size());
    std::vector<std::exception_ptr> errors(betas.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < betas.size(); i = next++) {
            try {
                const std::uint64_t seed = mode == SweepMode::FixedPath ? base_seed : base_seed + i;
                std::optional<WienerPath> own;
                if (!shared) own.emplace(generate_path(seed, cfg.path_length(), cfg.dt));
                const WienerPath& path = shared ? *shared : *own;
                const auto salt = run_experiment(NoiseKind::Salt, betas[i], path, cfg);
                const auto fd = run_experiment(NoiseKind::FluctuationDissipation, betas[i], path, cfg);
                rows[i] = SweepRow{betas[i], seed, salt.nle.sum, fd.nle.sum, fd.w_over_t(), fd.theory_sum};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(betas.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!errors[i]) continue;
        const std::string tag = "beta=" + format_double(betas[i]) + ": ";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const NonFiniteStateError& e) {
            throw NonFiniteStateError(tag + e.what(), e.step());
        } catch (const NumericalError& e) {
            throw NumericalError(tag + e.what());
        } catch (const ArgumentError& e) {
            throw ArgumentError(tag + e.what());
        }
    }
    return rows;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("linear_fit: need two or more paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ArgumentError("linear_fit: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += e * e;
    }
    f.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    return f;
}

inline double sample_stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double e : v) m += e;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) ss += (e - m) * (e - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------------------
// Convergence

struct ConvergencePoint {
    double t;
    State3 lambdas;  // sorted descending

    double sum() const { return lambdas[0] + lambdas[1] + lambdas[2]; }
};

/// rho(t) / t at every stored sample.
inline std::vector<ConvergencePoint> convergence_series(const NleResult& result) {
    if (result.rho_series.empty()) throw ArgumentError("convergence_series: no samples");
    std::vector<ConvergencePoint> out;
    out.reserve(result.rho_series.size());
    for (const auto& s : result.rho_series) out.push_back({s.t, exponents_from_rho(s.rho, s.t)});
    return out;
}

}  // namespace saltlyap
