#pragma once

// Seeded, replayable Brownian increment paths.
//
// Increment (step k, channel c) is a pure function of (seed, k, c): a
// Philox4x32-10 block keyed by the seed and counted by (k, c) yields two
// 53-bit uniforms, which the cosine branch of Box-Muller maps to one standard
// normal draw. The pairing of generator and transform is pinned by
// kGeneratorId; any change to either must bump the id.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "saltlyap/errors.hpp"
#include "saltlyap/number_format.hpp"

namespace saltlyap {

inline constexpr const char* kGeneratorId = "philox4x32-10+box-muller-cos/v1";

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(const Counter& ctr, const Key& key) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

/// Philox4x32 with 10 rounds.
constexpr Counter philox4x32_10(Counter ctr, Key key) {
    for (int i = 0; i < 10; ++i) {
        if (i > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        ctr = round(ctr, key);
    }
    return ctr;
}

}  // namespace philox

/// Standard normal draw for (seed, step, channel).
inline double standard_normal(std::uint64_t seed, std::uint64_t step, std::uint32_t channel) {
    const philox::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                              channel, 0u};
    const philox::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto out = philox::philox4x32_10(ctr, key);

    constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
    const std::uint64_t a = ((std::uint64_t{out[0]} << 32) | out[1]) >> 11;
    const std::uint64_t b = ((std::uint64_t{out[2]} << 32) | out[3]) >> 11;
    const double u1 = (static_cast<double>(a) + 1.0) * kTwoPow53Inv;  // (0, 1]
    const double u2 = static_cast<double>(b) * kTwoPow53Inv;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Fixed-step Brownian increments for one or more independent channels.
/// Immutable once built; safe to share read-only between threads.
class WienerPath {
public:
    WienerPath(std::uint64_t seed, double dt, std::size_t channels, std::vector<double> increments,
               std::string generator_id)
        : seed_(seed), dt_(dt), channels_(channels), increments_(std::move(increments)),
          generator_id_(std::move(generator_id)) {
        if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ArgumentError("WienerPath: dt must be positive");
        if (channels_ == 0) throw ArgumentError("WienerPath: need at least one channel");
        if (increments_.size() % channels_ != 0) {
            throw ArgumentError("WienerPath: increment count not a multiple of channel count");
        }
    }

    /// Path from explicit single-channel increments; tagged with generator id "explicit".
    static WienerPath from_increments(double dt, std::vector<double> increments) {
        return WienerPath(0, dt, 1, std::move(increments), "explicit");
    }

    std::uint64_t seed() const { return seed_; }
    double dt() const { return dt_; }
    std::size_t channels() const { return channels_; }
    std::size_t size() const { return increments_.size() / channels_; }
    const std::string& generator_id() const { return generator_id_; }
    const std::vector<double>& raw() const { return increments_; }

    double increment(std::size_t step, std::size_t channel = 0) const {
        return increments_[step * channels_ + channel];
    }

    /// Sum of increments over steps [begin, end).
    double window_sum(std::size_t begin, std::size_t end, std::size_t channel = 0) const {
        if (begin > end || end > size() || channel >= channels_) {
            throw ArgumentError("WienerPath: window out of range");
        }
        double w = 0.0;
        for (std::size_t k = begin; k < end; ++k) w += increment(k, channel);
        return w;
    }

    friend bool operator==(const WienerPath&, const WienerPath&) = default;

private:
    std::uint64_t seed_;
    double dt_;
    std::size_t channels_;
    std::vector<double> increments_;
    std::string generator_id_;
};

inline WienerPath generate_path(std::uint64_t seed, std::size_t n_steps, double dt, std::size_t channels = 1) {
    if (n_steps < 1) throw ArgumentError("generate_path: n_steps must be at least 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("generate_path: dt must be positive");
    if (channels < 1 || channels > 0xFFFFFFFFu) throw ArgumentError("generate_path: bad channel count");
    const double scale = std::sqrt(dt);
    std::vector<double> inc(n_steps * channels);
    for (std::size_t k = 0; k < n_steps; ++k)
        for (std::size_t c = 0; c < channels; ++c)
            inc[k * channels + c] = scale * standard_normal(seed, k, static_cast<std::uint32_t>(c));
    return WienerPath(seed, dt, channels, std::move(inc), kGeneratorId);
}

/// W at step k, i.e. the sum of the first k increments. W(0) = 0.
inline double terminal_value(const WienerPath& path, std::size_t k, std::size_t channel = 0) {
    if (k > path.size()) throw ArgumentError("terminal_value: step index out of range");
    return path.window_sum(0, k, channel);
}

// Path file: '#'-prefixed key=value header, a column header, then one row per
// step with one column per channel. Numbers use shortest round-trip form so a
// dump/load cycle is bit-exact.

inline void write_path_csv(const WienerPath& path, std::ostream& out) {
    out << "#wiener-path v1\n";
    out << "#seed=" << path.seed() << '\n';
    out << "#dt=" << format_double(path.dt()) << '\n';
    out << "#n_steps=" << path.size() << '\n';
    out << "#channels=" << path.channels() << '\n';
    out << "#generator_id=" << path.generator_id() << '\n';
    for (std::size_t c = 0; c < path.channels(); ++c) out << (c ? ",dW" : "dW") << c;
    out << '\n';
    for (std::size_t k = 0; k < path.size(); ++k) {
        for (std::size_t c = 0; c < path.channels(); ++c) {
            if (c) out << ',';
            out << format_double(path.increment(k, c));
        }
        out << '\n';
    }
}

inline WienerPath read_path_csv(std::istream& in) {
    std::string line;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::size_t n_steps = 0, channels = 0;
    std::string gen_id;
    bool have_dt = false, have_n = false, have_ch = false, have_gen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] != '#') break;  // column header
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(1, eq - 1);
        const std::string val = line.substr(eq + 1);
        if (key == "seed") {
            seed = parse_unsigned(val);
        } else if (key == "dt") {
            dt = parse_double(val);
            have_dt = true;
        } else if (key == "n_steps") {
            n_steps = parse_unsigned(val);
            have_n = true;
        } else if (key == "channels") {
            channels = parse_unsigned(val);
            have_ch = true;
        } else if (key == "generator_id") {
            gen_id = val;
            have_gen = true;
        }
    }
    if (!(have_dt && have_n && have_ch && have_gen)) throw IoError("path file: incomplete header");

    std::vector<double> inc;
    inc.reserve(n_steps * channels);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t start = 0, fields = 0;
        while (true) {
            const auto comma = line.find(',', start);
            inc.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
            ++fields;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields != channels) throw IoError("path file: wrong column count");
    }
    if (inc.size() != n_steps * channels) throw IoError("path file: row count does not match header");
    return WienerPath(seed, dt, channels, std::move(inc), gen_id);
}

inline void save_path(const WienerPath& path, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open '" + file + "' for writing");
    write_path_csv(path, out);
    if (!out) throw IoError("write failed: '" + file + "'");
}

inline WienerPath load_path(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open '" + file + "'");
    return read_path_csv(in);
}

}  // namespace saltlyap
