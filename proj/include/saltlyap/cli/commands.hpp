#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saltlyap/analysis.hpp"
#include "saltlyap/cli/config.hpp"
#include "saltlyap/errors.hpp"
#include "saltlyap/integrator.hpp"
#include "saltlyap/number_format.hpp"
#include "saltlyap/wiener.hpp"

namespace saltlyap::cli {

namespace detail {

inline std::string resolve_output(const RunConfig& cfg, const std::string& explicit_name,
                                  const std::string& fallback) {
    namespace fs = std::filesystem;
    const fs::path name = explicit_name.empty() ? fs::path(fallback) : fs::path(explicit_name);
    const fs::path full = name.is_absolute() ? name : fs::path(cfg.output_dir) / name;
    std::error_code ec;
    if (full.has_parent_path()) fs::create_directories(full.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + full.parent_path().string() + "': " + ec.message());
    return full.string();
}

inline std::ofstream open_output(const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open '" + file + "' for writing");
    return out;
}

inline void finish_output(std::ofstream& out, const std::string& file) {
    out.flush();
    if (!out) throw IoError("write failed: '" + file + "'");
}

inline void write_provenance(std::ostream& out, const std::string& command, const RunConfig& cfg) {
    out << "# saltlyap " << command << " config_hash=" << config_hash(cfg) << " generator_id=" << kGeneratorId
        << '\n';
}

inline std::string format_state(const State3& x) {
    return "(" + format_double(x[0]) + ", " + format_double(x[1]) + ", " + format_double(x[2]) + ")";
}

}  // namespace detail

struct SimulateSummary {
    std::string file;
    std::size_t rows = 0;
    State3 terminal{};
};

/// Spin-up, then records nle_steps steps of the base state (nle_steps + 1 rows).
inline SimulateSummary cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto exp = cfg.experiment();
    const SystemDef sys = variational_system(cfg.system, cfg.effective_beta(), exp);
    const WienerPath path = generate_path(cfg.seed, exp.path_length(), cfg.dt);

    SpinUpOptions su;
    su.steps = cfg.spin_up_steps;
    su.scheme = cfg.scheme;
    su.with_noise = cfg.spin_up_noise;
    const State3 start = spin_up(sys, path, su);

    const auto integ = Integrator<SystemDef>::converting(sys, IntegratorConfig{cfg.scheme, cfg.dt, cfg.nle_steps});
    const auto traj = integ.simulate(start, path, cfg.spin_up_steps);

    SimulateSummary s;
    s.file = detail::resolve_output(cfg, cfg.trajectory_out, "trajectory_" + to_string(cfg.system) + ".csv");
    auto out = detail::open_output(s.file);
    detail::write_provenance(out, "simulate", cfg);
    out << "t,x,y,z\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_double(static_cast<double>(k) * cfg.dt) << ',' << format_double(traj[k][0]) << ','
            << format_double(traj[k][1]) << ',' << format_double(traj[k][2]) << '\n';
    }
    detail::finish_output(out, s.file);
    s.rows = traj.size();
    s.terminal = traj.back();

    log << "system " << to_string(cfg.system) << " (integrated as " << to_string(integ.system().convention())
        << ", " << to_string(cfg.scheme) << ")\n"
        << "wrote " << s.rows << " rows to " << s.file << '\n'
        << "terminal state " << detail::format_state(s.terminal) << '\n';
    return s;
}

struct NleSummary {
    ExperimentResult result;
    std::string convergence_file;
    std::string summary_file;
    nlohmann::json json;
};

inline nlohmann::json nle_json(const RunConfig& cfg, const ExperimentResult& r) {
    nlohmann::json j;
    j["system"] = to_string(cfg.system);
    j["beta"] = cfg.effective_beta();
    j["sigma"] = cfg.params.sigma;
    j["r"] = cfg.params.r;
    j["b"] = cfg.params.b;
    j["seed"] = cfg.seed;
    j["dt"] = cfg.dt;
    j["spin_up_steps"] = cfg.spin_up_steps;
    j["nle_steps"] = cfg.nle_steps;
    j["eta"] = cfg.eta;
    j["scheme"] = to_string(cfg.scheme);
    j["k_update"] = to_string(cfg.k_update);
    j["convention_mode"] = to_string(cfg.convention_mode);
    j["variational_convention"] = to_string(r.system.convention());
    j["integrated_convention"] = to_string(convention_for(cfg.scheme));
    j["lambdas"] = {r.nle.lambdas[0], r.nle.lambdas[1], r.nle.lambdas[2]};
    j["sum"] = r.nle.sum;
    j["trace_residual"] = r.nle.trace_residual;
    j["restarts"] = r.nle.restarts;
    j["w_T_over_T"] = r.w_over_t();
    j["theoretical_sum"] = r.theory_sum;
    j["total_time"] = r.nle.total_time;
    j["max_orthogonality_defect"] = r.nle.max_orthogonality_defect;
    j["generator_id"] = kGeneratorId;
    j["config_hash"] = config_hash(cfg);
    return j;
}

inline NleSummary cmd_nle(const RunConfig& cfg, std::ostream& log, const std::string& tag = {}) {
    cfg.validate();
    const auto exp = cfg.experiment();
    const WienerPath path = generate_path(cfg.seed, exp.path_length(), cfg.dt);

    NleSummary s{run_experiment(cfg.system, cfg.effective_beta(), path, exp), {}, {}, {}};
    const std::string stem = tag.empty() ? to_string(cfg.system) : tag;

    s.convergence_file = detail::resolve_output(cfg, cfg.convergence_out, "convergence_" + stem + ".csv");
    {
        auto out = detail::open_output(s.convergence_file);
        detail::write_provenance(out, "nle", cfg);
        out << "t,lambda1,lambda2,lambda3,sum\n";
        for (const auto& p : convergence_series(s.result.nle)) {
            out << format_double(p.t) << ',' << format_double(p.lambdas[0]) << ',' << format_double(p.lambdas[1])
                << ',' << format_double(p.lambdas[2]) << ',' << format_double(p.sum()) << '\n';
        }
        detail::finish_output(out, s.convergence_file);
    }

    s.json = nle_json(cfg, s.result);
    s.summary_file = detail::resolve_output(cfg, cfg.summary_out, "summary_" + stem + ".json");
    {
        auto out = detail::open_output(s.summary_file);
        out << s.json.dump(2) << '\n';
        detail::finish_output(out, s.summary_file);
    }

    const auto& n = s.result.nle;
    log << "system            " << to_string(cfg.system) << " (beta " << format_double(cfg.effective_beta())
        << ", sigma " << format_double(cfg.params.sigma) << ", r " << format_double(cfg.params.r) << ", b "
        << format_double(cfg.params.b) << ")\n"
        << "lambda1           " << format_double(n.lambdas[0]) << '\n'
        << "lambda2           " << format_double(n.lambdas[1]) << '\n'
        << "lambda3           " << format_double(n.lambdas[2]) << '\n'
        << "sum               " << format_double(n.sum) << '\n'
        << "theoretical sum   " << format_double(s.result.theory_sum) << '\n'
        << "trace residual    " << format_double(n.trace_residual) << '\n'
        << "W_T/T             " << format_double(s.result.w_over_t()) << '\n'
        << "restarts          " << n.restarts << '\n'
        << "wrote " << s.convergence_file << " and " << s.summary_file << '\n';
    return s;
}

struct SweepSummary {
    std::vector<SweepRow> rows;
    std::optional<LinearFit> fit;
    double salt_stddev = 0.0;
    std::string file;
};

inline SweepSummary cmd_sweep(const RunConfig& cfg, std::ostream& log, const std::string& tag = {}) {
    cfg.validate();
    const auto betas = beta_grid(cfg.beta_min, cfg.beta_max, cfg.beta_count);

    SweepSummary s;
    s.rows = sweep_beta(betas, cfg.sweep_mode, cfg.seed, cfg.experiment(), cfg.effective_jobs());
    s.file = detail::resolve_output(cfg, cfg.sweep_out,
                                    "sweep_" + (tag.empty() ? to_string(cfg.sweep_mode) : tag) + ".csv");
    {
        auto out = detail::open_output(s.file);
        detail::write_provenance(out, "sweep", cfg);
        out << "beta,seed,sum_salt,sum_fd,w_T_over_T,theory_fd_sum\n";
        for (const auto& r : s.rows) {
            out << format_double(r.beta) << ',' << r.seed << ',' << format_double(r.sum_salt) << ','
                << format_double(r.sum_fd) << ',' << format_double(r.w_T_over_T) << ','
                << format_double(r.theory_fd_sum) << '\n';
        }
        detail::finish_output(out, s.file);
    }

    std::vector<double> b, fd, salt;
    for (const auto& r : s.rows) {
        b.push_back(r.beta);
        fd.push_back(r.sum_fd);
        salt.push_back(r.sum_salt);
    }
    s.salt_stddev = sample_stddev(salt);
    log << "rows " << s.rows.size() << " (" << to_string(cfg.sweep_mode) << " path)\n"
        << "sum_salt stddev " << format_double(s.salt_stddev) << '\n';
    if (cfg.sweep_mode == SweepMode::FixedPath && s.rows.size() >= 2 && cfg.beta_max > cfg.beta_min) {
        s.fit = linear_fit(b, fd);
        log << "sum_fd fit: slope " << format_double(s.fit->slope) << ", intercept "
            << format_double(s.fit->intercept) << ", R^2 " << format_double(s.fit->r_squared) << '\n'
            << "3 W_T/T " << format_double(3.0 * s.rows.front().w_T_over_T) << '\n';
    }
    log << "wrote " << s.file << '\n';
    return s;
}

/// Pinned configurations for the reference tables and sweeps. Seed,
/// output locations and job count are taken from `base`.
inline RunConfig reproduction_config(const std::string& target, const RunConfig& base) {
    RunConfig c;
    c.seed = base.seed;
    c.output_dir = base.output_dir;
    c.jobs = base.jobs;
    c.trajectory_out = base.trajectory_out;
    c.convergence_out = base.convergence_out;
    c.summary_out = base.summary_out;
    c.sweep_out = base.sweep_out;
    if (target == "table1") {
        c.system = NoiseKind::None;
        c.params = {10.0, 28.0, 8.0 / 3.0};
    } else if (target == "table2") {
        c.system = NoiseKind::None;
        c.params = {16.0, 45.92, 4.0};
    } else if (target == "fig-sweep-fresh" || target == "fig-sweep-fixed") {
        c.params = {10.0, 28.0, 8.0 / 3.0};
        c.beta_min = 0.0;
        c.beta_max = 1.0;
        c.beta_count = 100;
        c.sweep_mode = target == "fig-sweep-fixed" ? SweepMode::FixedPath : SweepMode::FreshPathPerBeta;
    } else {
        throw ArgumentError("unknown reproduction target '" + target +
                            "' (table1|table2|fig-sweep-fresh|fig-sweep-fixed)");
    }
    return c;
}

inline void cmd_reproduce(const std::string& target, const RunConfig& base, std::ostream& log) {
    const RunConfig c = reproduction_config(target, base);
    if (target == "table1" || target == "table2") {
        cmd_nle(c, log, target);
    } else {
        cmd_sweep(c, log, target);
    }
}

}  // namespace saltlyap::cli
