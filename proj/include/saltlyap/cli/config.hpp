#pragma once

// Flat `key = value` run configuration. Every command is a deterministic
// function of the resolved configuration; to_text() is its canonical form and
// config_hash() fingerprints it for provenance headers.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "saltlyap/analysis.hpp"
#include "saltlyap/errors.hpp"
#include "saltlyap/number_format.hpp"

namespace saltlyap::cli {

inline constexpr const char* kOutputDirEnv = "SALTLYAP_OUTPUT_DIR";

struct RunConfig {
    NoiseKind system = NoiseKind::None;
    LorenzParams params{};
    double beta = 0.5;
    std::uint64_t seed = 1;
    double dt = 1e-3;
    std::size_t spin_up_steps = 50000;
    std::size_t nle_steps = 100000;
    double eta = 0.8;
    Scheme scheme = Scheme::EulerMaruyama;
    ConventionMode convention_mode = ConventionMode::Paper;
    KUpdate k_update = KUpdate::Composed;
    std::size_t sample_every = 100;
    bool spin_up_noise = true;

    // sweep
    double beta_min = 0.0;
    double beta_max = 1.0;
    std::size_t beta_count = 100;
    SweepMode sweep_mode = SweepMode::FixedPath;
    unsigned jobs = 0;  // 0: hardware concurrency

    // outputs; empty names fall back to per-command defaults in output_dir
    std::string output_dir = ".";
    std::string trajectory_out;
    std::string convergence_out;
    std::string summary_out;
    std::string sweep_out;

    /// beta actually used for the selected system (0 when deterministic).
    double effective_beta() const { return system == NoiseKind::None ? 0.0 : beta; }

    unsigned effective_jobs() const {
        if (jobs > 0) return jobs;
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1u : hc;
    }

    ExperimentConfig experiment() const {
        ExperimentConfig e;
        e.params = params;
        e.dt = dt;
        e.spin_up_steps = spin_up_steps;
        e.nle_steps = nle_steps;
        e.eta = eta;
        e.scheme = scheme;
        e.convention_mode = convention_mode;
        e.k_update = k_update;
        e.sample_every = sample_every;
        e.spin_up_noise = spin_up_noise;
        return e;
    }

    void validate() const {
        experiment().validate();
        NoiseSpec{system, effective_beta()}.validate();
        if (!(beta_min >= 0.0) || !(beta_max >= beta_min)) throw ArgumentError("need 0 <= beta_min <= beta_max");
        if (beta_count == 0) throw ArgumentError("beta_count must be positive");
    }

    /// Applies one `key = value` setting; unknown keys and bad values throw.
    void set(const std::string& key, const std::string& value);

    /// Canonical resolved configuration, one `key = value` per line.
    std::string to_text() const;

    static const std::vector<std::string>& keys();
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ArgumentError("not a boolean: '" + v + "'");
}

inline NoiseKind parse_system(const std::string& v) {
    if (v == "deterministic" || v == "none") return NoiseKind::None;
    if (v == "salt") return NoiseKind::Salt;
    if (v == "fd") return NoiseKind::FluctuationDissipation;
    throw ArgumentError("unknown system '" + v + "' (deterministic|salt|fd)");
}

inline Scheme parse_scheme(const std::string& v) {
    if (v == "euler-maruyama" || v == "em") return Scheme::EulerMaruyama;
    if (v == "heun") return Scheme::Heun;
    throw ArgumentError("unknown scheme '" + v + "' (euler-maruyama|heun)");
}

inline ConventionMode parse_convention_mode(const std::string& v) {
    if (v == "paper") return ConventionMode::Paper;
    if (v == "stratonovich-strict") return ConventionMode::StratonovichStrict;
    throw ArgumentError("unknown convention_mode '" + v + "' (paper|stratonovich-strict)");
}

inline KUpdate parse_k_update(const std::string& v) {
    if (v == "composed") return KUpdate::Composed;
    if (v == "additive") return KUpdate::Additive;
    throw ArgumentError("unknown k_update '" + v + "' (composed|additive)");
}

inline SweepMode parse_sweep_mode(const std::string& v) {
    if (v == "fixed") return SweepMode::FixedPath;
    if (v == "fresh") return SweepMode::FreshPathPerBeta;
    throw ArgumentError("unknown sweep_mode '" + v + "' (fixed|fresh)");
}

inline std::size_t parse_count(const std::string& v) { return static_cast<std::size_t>(parse_unsigned(v)); }

}  // namespace detail

inline const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = {
        "system",       "sigma",        "r",           "b",          "beta",          "seed",
        "dt",           "spin_up_steps", "nle_steps",  "eta",        "scheme",        "convention_mode",
        "k_update",     "sample_every", "spin_up_noise", "beta_min", "beta_max",      "beta_count",
        "sweep_mode",   "jobs",         "output_dir",  "trajectory_out", "convergence_out", "summary_out",
        "sweep_out"};
    return k;
}

inline void RunConfig::set(const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = trim(raw);
    try {
        if (key == "system") system = parse_system(v);
        else if (key == "sigma") params.sigma = parse_double(v);
        else if (key == "r") params.r = parse_double(v);
        else if (key == "b") params.b = parse_double(v);
        else if (key == "beta") beta = parse_double(v);
        else if (key == "seed") seed = parse_unsigned(v);
        else if (key == "dt") dt = parse_double(v);
        else if (key == "spin_up_steps") spin_up_steps = parse_count(v);
        else if (key == "nle_steps") nle_steps = parse_count(v);
        else if (key == "eta") eta = parse_double(v);
        else if (key == "scheme") scheme = parse_scheme(v);
        else if (key == "convention_mode") convention_mode = parse_convention_mode(v);
        else if (key == "k_update") k_update = parse_k_update(v);
        else if (key == "sample_every") sample_every = parse_count(v);
        else if (key == "spin_up_noise") spin_up_noise = parse_bool(v);
        else if (key == "beta_min") beta_min = parse_double(v);
        else if (key == "beta_max") beta_max = parse_double(v);
        else if (key == "beta_count") beta_count = parse_count(v);
        else if (key == "sweep_mode") sweep_mode = parse_sweep_mode(v);
        else if (key == "jobs") jobs = static_cast<unsigned>(parse_count(v));
        else if (key == "output_dir") output_dir = v;
        else if (key == "trajectory_out") trajectory_out = v;
        else if (key == "convergence_out") convergence_out = v;
        else if (key == "summary_out") summary_out = v;
        else if (key == "sweep_out") sweep_out = v;
        else throw ArgumentError("unknown configuration key '" + key + "'");
    } catch (const ArgumentError& e) {
        const std::string msg = e.what();
        if (msg.rfind("unknown configuration key", 0) == 0) throw;
        throw ArgumentError(key + ": " + msg);
    }
}

inline std::string RunConfig::to_text() const {
    std::ostringstream o;
    o << "system = " << to_string(system) << '\n'
      << "sigma = " << format_double(params.sigma) << '\n'
      << "r = " << format_double(params.r) << '\n'
      << "b = " << format_double(params.b) << '\n'
      << "beta = " << format_double(beta) << '\n'
      << "seed = " << seed << '\n'
      << "dt = " << format_double(dt) << '\n'
      << "spin_up_steps = " << spin_up_steps << '\n'
      << "nle_steps = " << nle_steps << '\n'
      << "eta = " << format_double(eta) << '\n'
      << "scheme = " << to_string(scheme) << '\n'
      << "convention_mode = " << to_string(convention_mode) << '\n'
      << "k_update = " << to_string(k_update) << '\n'
      << "sample_every = " << sample_every << '\n'
      << "spin_up_noise = " << (spin_up_noise ? "true" : "false") << '\n'
      << "beta_min = " << format_double(beta_min) << '\n'
      << "beta_max = " << format_double(beta_max) << '\n'
      << "beta_count = " << beta_count << '\n'
      << "sweep_mode = " << to_string(sweep_mode) << '\n'
      << "jobs = " << jobs << '\n'
      << "output_dir = " << output_dir << '\n'
      << "trajectory_out = " << trajectory_out << '\n'
      << "convergence_out = " << convergence_out << '\n'
      << "summary_out = " << summary_out << '\n'
      << "sweep_out = " << sweep_out << '\n';
    return o.str();
}

/// Reads `key = value` lines; '#' starts a comment.
inline void apply_config_stream(RunConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        cfg.set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline void apply_config_file(RunConfig& cfg, const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file '" + file + "'");
    apply_config_stream(cfg, in);
}

/// FNV-1a 64-bit
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Hash of the settings that determine numerical output. Output locations and
/// the worker count are excluded so relocating a run keeps its fingerprint.
inline std::string config_hash(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.output_dir.clear();
    c.trajectory_out.clear();
    c.convergence_out.clear();
    c.summary_out.clear();
    c.sweep_out.clear();
    c.jobs = 0;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(c.to_text())));
    return buf;
}

}  // namespace saltlyap::cli
