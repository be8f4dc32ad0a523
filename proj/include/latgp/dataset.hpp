#pragma once

// Profiling-data files and the synthetic profiling-data generator.
//
// CSV schema (header names are exact, column order is free):
//   h,w,h_o,w_o,k,f,c,pf,pc,m_clk_mhz,l_clk_mhz,m_eff_pct,s_bits,dw_bits,position,latency_ms
// `m_eff_pct` is a percentage (70 means 0.7) and `position` is one of
// first, middle, last.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "latgp/analytic_model.hpp"
#include "latgp/error.hpp"
#include "latgp/features.hpp"

namespace latgp {

inline constexpr std::array<std::string_view, 16> kCsvColumns = {
    "h",         "w",         "h_o",       "w_o",    "k",       "f",        "c",        "pf",
    "pc",        "m_clk_mhz", "l_clk_mhz", "m_eff_pct", "s_bits", "dw_bits", "position", "latency_ms"};

namespace detail {

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

// Percentage text whose parsed value divides back to exactly `fraction`.
inline std::string percent_text(double fraction) {
    double pct = fraction * 100.0;
    if (pct / 100.0 != fraction) {
        for (double cand : {std::nextafter(pct, 0.0), std::nextafter(pct, 200.0)}) {
            if (cand / 100.0 == fraction) {
                pct = cand;
                break;
            }
        }
    }
    return format_double(pct);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        cells.push_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::string row_error(std::size_t line_no, std::string_view column, std::string_view what) {
    return "row " + std::to_string(line_no) + ", column '" + std::string(column) + "': " + std::string(what);
}

inline double parse_real(std::string_view cell, std::size_t line_no, std::string_view column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
        throw DataError(row_error(line_no, column, "non-numeric value '" + std::string(cell) + "'"));
    }
    return v;
}

inline std::int64_t parse_count(std::string_view cell, std::size_t line_no, std::string_view column) {
    const double v = parse_real(cell, line_no, column);
    if (v != std::floor(v) || v < 1.0 || v > 9.0e15) {
        throw DataError(row_error(line_no, column, "expected a positive integer, got '" + std::string(cell) + "'"));
    }
    return static_cast<std::int64_t>(v);
}

}  // namespace detail

/// Parses profiling samples. Rows whose hardware differs from the first row
/// are accepted; a note is appended to `warnings` when it is given.
inline std::vector<Sample> read_csv(std::istream& in, std::vector<std::string>* warnings = nullptr) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("no samples");
    ++line_no;
    const auto header = detail::split_csv(line);
    std::array<std::size_t, kCsvColumns.size()> index{};
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
        bool found = false;
        for (std::size_t h = 0; h < header.size(); ++h) {
            if (header[h] == kCsvColumns[c]) {
                index[c] = h;
                found = true;
                break;
            }
        }
        if (!found) throw DataError("missing column '" + std::string(kCsvColumns[c]) + "'");
    }

    std::vector<Sample> samples;
    bool mixed_hw_reported = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size()) {
            throw DataError("row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " cells, got " + std::to_string(cells.size()));
        }
        auto cell = [&](std::size_t c) { return cells[index[c]]; };
        auto count = [&](std::size_t c) { return detail::parse_count(cell(c), line_no, kCsvColumns[c]); };
        auto real = [&](std::size_t c) { return detail::parse_real(cell(c), line_no, kCsvColumns[c]); };

        Sample s;
        s.layer = {count(0), count(1), count(2), count(3), count(4), count(5), count(6)};
        s.hw = {count(7), count(8), real(9), real(10), real(11) / 100.0, count(12), count(13)};
        try {
            validate(s.hw);
        } catch (const DataError& e) {
            throw DataError("row " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string_view pos = cell(14);
        if (pos != "first" && pos != "middle" && pos != "last") {
            throw DataError(detail::row_error(line_no, "position", "expected first, middle or last"));
        }
        s.position = parse_position(pos);
        s.latency_ms = real(15);
        if (!(s.latency_ms > 0.0)) {
            throw DataError(detail::row_error(line_no, "latency_ms", "latency must be positive"));
        }
        if (!samples.empty() && !(s.hw == samples.front().hw) && !mixed_hw_reported) {
            mixed_hw_reported = true;
            if (warnings) {
                warnings->push_back("row " + std::to_string(line_no) + ": hardware differs from the first sample");
            }
        }
        samples.push_back(s);
    }
    if (samples.empty()) throw DataError("no samples");
    return samples;
}

inline std::vector<Sample> load_csv(const std::string& path, std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_csv(in, warnings);
}

/// Writes samples with shortest round-trip number formatting.
inline void write_csv(std::ostream& out, std::span<const Sample> samples) {
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) out << (c ? "," : "") << kCsvColumns[c];
    out << '\n';
    for (const Sample& s : samples) {
        if (s.position == LayerPosition::Single) {
            throw DataError("position 'single' cannot be stored in a profiling file");
        }
        const auto& l = s.layer;
        const auto& hw = s.hw;
        out << l.h << ',' << l.w << ',' << l.h_o << ',' << l.w_o << ',' << l.k << ',' << l.f << ',' << l.c << ','
            << hw.pf << ',' << hw.pc << ',' << detail::format_double(hw.m_clk_mhz) << ','
            << detail::format_double(hw.l_clk_mhz) << ',' << detail::percent_text(hw.m_eff) << ',' << hw.s_bits
            << ',' << hw.dw_bits << ',' << to_string(s.position) << ',' << detail::format_double(s.latency_ms)
            << '\n';
    }
}

inline void save_csv(const std::string& path, std::span<const Sample> samples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(out, samples);
    if (!out) throw DataError("error writing '" + path + "'");
}

/// Unmodelled effects layered on top of the closed-form latency:
/// target = (T * (1 + bias_amplitude * (1 - exp(-ops / bias_ops_scale))) + overhead_ms) * exp(noise_sigma_log * z).
struct DistortionSpec {
    double bias_amplitude = 0.3;
    double bias_ops_scale = 1e8;
    double overhead_ms = 0.02;
    double noise_sigma_log = 0.05;

    static DistortionSpec none() { return {0.0, 1e8, 0.0, 0.0}; }
};

/// Shape ranges of the generated layers.
namespace synth_range {
inline constexpr std::int64_t kSpatialMin = 1, kSpatialMax = 418;
inline constexpr std::int64_t kOutputMax = 416;
inline constexpr std::int64_t kChannelMin = 3, kChannelMax = 2048;
inline constexpr std::int64_t kFilterMin = 64, kFilterMax = 2048;
inline constexpr std::array<std::int64_t, 4> kKernelSizes = {1, 3, 5, 7};
// Measured latency range of the profiled layers; draws outside it are redrawn.
inline constexpr double kLatencyMinMs = 0.018, kLatencyMaxMs = 11.727;
// Layer counts of the profiled networks; samples are grouped into networks
// of these lengths, cycling, to assign first/middle/last positions.
inline constexpr std::array<std::size_t, 3> kNetworkLengths = {24, 75, 57};
}  // namespace synth_range

namespace detail {

// Uniform in [0, 1) from the top 53 bits of the engine output. The standard
// distributions are implementation-defined, which would break seeding.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::int64_t log_uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    const double a = std::log(static_cast<double>(lo));
    const double b = std::log(static_cast<double>(hi) + 1.0);
    const auto v = static_cast<std::int64_t>(std::floor(std::exp(a + unit_uniform(rng) * (b - a))));
    return std::clamp(v, lo, hi);
}

inline double standard_normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - unit_uniform(rng);  // (0, 1]
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::int64_t output_extent(std::int64_t in, std::int64_t k, std::int64_t stride) {
    const std::int64_t out = in >= k ? (in - k) / stride + 1 : 1;
    return std::clamp<std::int64_t>(out, 1, synth_range::kOutputMax);
}

}  // namespace detail

/// Deterministic stand-in for profiling data: log-uniform layer shapes,
/// closed-form latencies, then the distortion. Samples whose distorted
/// latency leaves the profiled latency range are rejected and redrawn.
inline std::vector<Sample> generate_synthetic(std::uint64_t seed, std::size_t count, const HardwareConfig& hw,
                                              const DistortionSpec& distortion = {}) {
    if (count < 1) throw DataError("sample count must be at least 1");
    validate(hw);
    using namespace synth_range;
    std::mt19937_64 rng(seed);
    std::vector<Sample> out;
    out.reserve(count);

    constexpr std::size_t kMaxRedraws = 100000;
    std::size_t net = 0, in_net = 0, rejected = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t net_len = std::min(kNetworkLengths[net % kNetworkLengths.size()], count - (i - in_net));
        Sample s;
        s.hw = hw;
        auto& l = s.layer;
        l.h = detail::log_uniform_int(rng, kSpatialMin, kSpatialMax);
        l.w = detail::log_uniform_int(rng, kSpatialMin, kSpatialMax);
        l.k = kKernelSizes[static_cast<std::size_t>(rng() % kKernelSizes.size())];
        const std::int64_t stride = 1 + static_cast<std::int64_t>(rng() % 2);
        l.c = detail::log_uniform_int(rng, kChannelMin, kChannelMax);
        l.f = detail::log_uniform_int(rng, kFilterMin, kFilterMax);
        l.h_o = detail::output_extent(l.h, l.k, stride);
        l.w_o = detail::output_extent(l.w, l.k, stride);
        const double z = detail::standard_normal(rng);

        // A trailing one-layer network is stored as a first layer; the file
        // schema has no single-layer position.
        s.position = net_len == 1 ? LayerPosition::First : position_in_network(in_net, net_len);

        const double t = layer_breakdown(l, hw, s.position).t_layer;

        const auto ops = static_cast<double>(compute_counts(l).ops);
        const double bias = 1.0 + distortion.bias_amplitude * (1.0 - std::exp(-ops / distortion.bias_ops_scale));
        s.latency_ms = (t * bias + distortion.overhead_ms) * std::exp(distortion.noise_sigma_log * z);
        if (s.latency_ms < kLatencyMinMs || s.latency_ms > kLatencyMaxMs) {
            if (++rejected > kMaxRedraws) {
                throw DataError("hardware configuration yields no latencies inside the profiled range");
            }
            --i;  // redraw this slot
            continue;
        }
        rejected = 0;
        out.push_back(s);

        if (++in_net == net_len) {
            in_net = 0;
            ++net;
        }
    }
    return out;
}

}  // namespace latgp
