/// @file io.hpp
/// @brief Field snapshots (text or raw binary), checkpoints and the per-step CSV series.
///
/// Snapshot layout: a text header of `key value...` lines closed by `end_header`,
/// then either one text line per node
///     i j [k] x y [z] m1 m2 m3
/// or, for `format binary`, 3 * node_count little-endian IEEE doubles (m1 m2 m3 per node).
/// Reals are printed in shortest round-trip form, so text snapshots re-read bit-exactly.
#pragma once

#include "sipllg/errors.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/stepper.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace sipllg {

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_real(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("not a real number: '" + std::string(s) + "'");
    }
    return v;
}

inline long parse_integer(std::string_view s)
{
    long v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

enum class SnapshotFormat { Text, Binary };

struct Snapshot {
    VectorField field;
    double time = 0.0;
    long step = 0;
    /// Present in checkpoints: fingerprint of the scheme parameters that produced the state.
    std::optional<std::string> params_hash;
};

namespace io_detail {

inline std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> out;
    std::istringstream ss{std::string(line)};
    std::string tok;
    while (ss >> tok) {
        out.push_back(tok);
    }
    return out;
}

inline void put_le(std::ostream& os, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) {
        bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
    os.write(bytes, 8);
}

inline double get_le(std::istream& is)
{
    unsigned char bytes[8];
    is.read(reinterpret_cast<char*>(bytes), 8);
    if (!is) {
        throw ConfigError("binary snapshot body is truncated");
    }
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) {
        bits = (bits << 8) | bytes[b];
    }
    return std::bit_cast<double>(bits);
}

} // namespace io_detail

inline void write_snapshot(const Snapshot& snap, const std::filesystem::path& path,
                           SnapshotFormat format = SnapshotFormat::Text)
{
    const VectorField& f = snap.field;
    const GridSpec& g = f.grid();
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ConfigError("cannot open '" + path.string() + "' for writing");
    }
    os << "# sipllg field snapshot\n";
    os << "format " << (format == SnapshotFormat::Text ? "text" : "binary") << '\n';
    os << "dim " << g.dim << '\n';
    os << "counts " << g.counts[0] << ' ' << g.counts[1] << ' ' << g.counts[2] << '\n';
    os << "spacing " << format_real(g.spacing[0]) << ' ' << format_real(g.spacing[1]) << ' '
       << format_real(g.spacing[2]) << '\n';
    os << "origin " << format_real(g.origin[0]) << ' ' << format_real(g.origin[1]) << ' '
       << format_real(g.origin[2]) << '\n';
    os << "boundary " << to_string(g.boundary) << '\n';
    os << "time " << format_real(snap.time) << '\n';
    os << "step " << snap.step << '\n';
    if (snap.params_hash) {
        os << "params_hash " << *snap.params_hash << '\n';
    }
    os << "nodes " << g.node_count() << '\n';
    os << "end_header\n";

    if (format == SnapshotFormat::Binary) {
        for (double v : f.values()) {
            io_detail::put_le(os, v);
        }
        return;
    }
    std::string line;
    for (int k = 0; k < g.counts[2]; ++k) {
        for (int j = 0; j < g.counts[1]; ++j) {
            for (int i = 0; i < g.counts[0]; ++i) {
                const Point x = g.position(i, j, k);
                const Vec3 m = f.at(i, j, k);
                line.clear();
                line += std::to_string(i) + ' ' + std::to_string(j) + ' ';
                if (g.dim == 3) {
                    line += std::to_string(k) + ' ';
                }
                line += format_real(x[0]) + ' ' + format_real(x[1]) + ' ';
                if (g.dim == 3) {
                    line += format_real(x[2]) + ' ';
                }
                line += format_real(m.x) + ' ' + format_real(m.y) + ' ' + format_real(m.z) + '\n';
                os << line;
            }
        }
    }
    if (!os) {
        throw ConfigError("write failed for '" + path.string() + "'");
    }
}

inline Snapshot read_snapshot(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ConfigError("cannot open snapshot '" + path.string() + "'");
    }
    Snapshot snap;
    GridSpec g;
    SnapshotFormat format = SnapshotFormat::Text;
    long nodes = -1;
    bool seen_end = false;
    std::string line;
    int lineno = 0;
    auto need = [&](const std::vector<std::string>& t, std::size_t n) {
        if (t.size() != n) {
            throw ConfigError("malformed header line in '" + path.string() + "'", lineno, t.empty() ? "" : t[0]);
        }
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto t = io_detail::split(line);
        if (t.empty()) {
            continue;
        }
        const std::string& key = t[0];
        if (key == "end_header") {
            seen_end = true;
            break;
        }
        if (key == "format") {
            need(t, 2);
            format = t[1] == "binary" ? SnapshotFormat::Binary : SnapshotFormat::Text;
        } else if (key == "dim") {
            need(t, 2);
            g.dim = static_cast<int>(parse_integer(t[1]));
        } else if (key == "counts") {
            need(t, 4);
            for (int a = 0; a < 3; ++a) {
                g.counts[a] = static_cast<int>(parse_integer(t[a + 1]));
            }
        } else if (key == "spacing") {
            need(t, 4);
            for (int a = 0; a < 3; ++a) {
                g.spacing[a] = parse_real(t[a + 1]);
            }
        } else if (key == "origin") {
            need(t, 4);
            for (int a = 0; a < 3; ++a) {
                g.origin[a] = parse_real(t[a + 1]);
            }
        } else if (key == "boundary") {
            need(t, 2);
            if (t[1] != "periodic" && t[1] != "neumann") {
                throw ConfigError("unknown boundary '" + t[1] + "'", lineno, key);
            }
            g.boundary = t[1] == "periodic" ? Boundary::Periodic : Boundary::Neumann;
        } else if (key == "time") {
            need(t, 2);
            snap.time = parse_real(t[1]);
        } else if (key == "step") {
            need(t, 2);
            snap.step = parse_integer(t[1]);
        } else if (key == "params_hash") {
            need(t, 2);
            snap.params_hash = t[1];
        } else if (key == "nodes") {
            need(t, 2);
            nodes = parse_integer(t[1]);
        } else {
            throw ConfigError("unknown snapshot header key '" + key + "'", lineno, key);
        }
    }
    if (!seen_end) {
        throw ConfigError("snapshot '" + path.string() + "' has no end_header line");
    }
    try {
        g.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("invalid grid in snapshot: ") + e.what());
    }
    if (nodes != static_cast<long>(g.node_count())) {
        throw ConfigError("snapshot node count does not match its grid");
    }

    VectorField f(g);
    if (format == SnapshotFormat::Binary) {
        for (double& v : f.values()) {
            v = io_detail::get_le(is);
        }
        snap.field = std::move(f);
        return snap;
    }
    const std::size_t expected_tokens = g.dim == 3 ? 9 : 7;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto t = io_detail::split(line);
        if (t.size() != expected_tokens || n >= g.node_count()) {
            throw ConfigError("malformed snapshot record", lineno);
        }
        const auto c = g.coords(n);
        const int nidx = g.dim == 3 ? 3 : 2;
        for (int a = 0; a < nidx; ++a) {
            if (parse_integer(t[a]) != c[a]) {
                throw ConfigError("snapshot records out of node order", lineno);
            }
        }
        const std::size_t off = expected_tokens - 3;
        f.set(n, {parse_real(t[off]), parse_real(t[off + 1]), parse_real(t[off + 2])});
        ++n;
    }
    if (n != g.node_count()) {
        throw ConfigError("snapshot has " + std::to_string(n) + " records, expected " +
                          std::to_string(g.node_count()));
    }
    snap.field = std::move(f);
    return snap;
}

/// Per-step time series with the fixed column set shared by every experiment.
class CsvSeries {
public:
    CsvSeries(const std::filesystem::path& path, bool with_q) : os_(path), with_q_(with_q)
    {
        if (!os_) {
            throw ConfigError("cannot open '" + path.string() + "' for writing");
        }
        os_ << "step,time,energy,min_tilde_len,max_len_err,krylov_iters,residual";
        if (with_q_) {
            os_ << ",Q";
        }
        os_ << '\n';
    }

    void write(const StepReport& r, std::optional<double> q = std::nullopt)
    {
        os_ << r.step_index << ',' << format_real(r.time) << ',' << format_real(r.energy) << ','
            << format_real(r.min_intermediate_length) << ',' << format_real(r.max_length_error) << ','
            << r.krylov_iters << ',' << format_real(r.residual);
        if (with_q_) {
            os_ << ',' << format_real(q.value_or(0.0));
        }
        os_ << '\n';
        os_.flush();
    }

private:
    std::ofstream os_;
    bool with_q_;
};

/// Report row for the state before the first step (no solve happened).
inline StepReport initial_report(const VectorField& m, const FieldModel& model, long step, double time)
{
    StepReport r;
    r.step_index = step;
    r.time = time;
    r.min_intermediate_length = min_length(m);
    r.energy = discrete_energy(m, model);
    r.max_length_error = max_length_error(m);
    return r;
}

} // namespace sipllg
