#pragma once

// Closed-form latency model for a pipelined FPGA convolution accelerator.
//
// Every layer is split into a load, a compute and a store phase. Memory
// phases move DW-bit elements over an S-bit bus at M_CLK with efficiency
// M_EFF, spread over PF filter lanes; the compute phase retires PF x PC
// multiply-accumulates per logic cycle. Clocks are given in MHz and all
// results are reported in milliseconds.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latgp/error.hpp"

namespace latgp {

/// Shape of one 2D convolution.
struct LayerConfig {
    std::int64_t h = 1;    // input height
    std::int64_t w = 1;    // input width
    std::int64_t h_o = 1;  // output height
    std::int64_t w_o = 1;  // output width
    std::int64_t k = 1;    // square kernel size
    std::int64_t f = 1;    // filters
    std::int64_t c = 1;    // channels

    friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

/// Accelerator and device constants. `m_eff` is a fraction in (0, 1].
struct HardwareConfig {
    std::int64_t pf = 1;
    std::int64_t pc = 1;
    double m_clk_mhz = 1.0;
    double l_clk_mhz = 1.0;
    double m_eff = 1.0;
    std::int64_t s_bits = 1;
    std::int64_t dw_bits = 1;

    friend bool operator==(const HardwareConfig&, const HardwareConfig&) = default;

    /// The evaluation accelerator: 64x64 parallelism, 200 MHz clocks,
    /// 70% memory efficiency, 64-bit transfers of 8-bit data.
    static HardwareConfig reference() {
        return {.pf = 64, .pc = 64, .m_clk_mhz = 200.0, .l_clk_mhz = 200.0,
                .m_eff = 0.7, .s_bits = 64, .dw_bits = 8};
    }
};

/// Where a layer sits in the network. `Single` is a one-layer network,
/// which is both first and last.
enum class LayerPosition { First, Middle, Last, Single };

struct LatencyBreakdown {
    double t_weights = 0.0;
    double t_data = 0.0;
    double t_load = 0.0;
    double t_compute = 0.0;
    double t_store = 0.0;
    double t_layer = 0.0;
};

struct ConvCounts {
    std::int64_t ops = 0;
    std::int64_t input_size = 0;
    std::int64_t weights_size = 0;
    std::int64_t output_size = 0;
};

struct NetworkEstimate {
    std::vector<LatencyBreakdown> per_layer;
    double total = 0.0;
};

inline void validate(const LayerConfig& l) {
    if (l.h <= 0 || l.w <= 0 || l.h_o <= 0 || l.w_o <= 0 || l.k <= 0 || l.f <= 0 || l.c <= 0) {
        throw DataError("layer fields must be positive integers");
    }
}

inline void validate(const HardwareConfig& hw) {
    if (hw.pf <= 0 || hw.pc <= 0 || hw.s_bits <= 0 || hw.dw_bits <= 0) {
        throw DataError("hardware pf, pc, s_bits and dw_bits must be positive integers");
    }
    if (!(hw.m_clk_mhz > 0.0) || !(hw.l_clk_mhz > 0.0)) {
        throw DataError("hardware clocks must be positive");
    }
    if (!(hw.m_eff > 0.0 && hw.m_eff <= 1.0)) {
        throw DataError("hardware memory efficiency must lie in (0, 1]");
    }
}

inline std::string_view to_string(LayerPosition p) {
    switch (p) {
        case LayerPosition::First: return "first";
        case LayerPosition::Middle: return "middle";
        case LayerPosition::Last: return "last";
        case LayerPosition::Single: return "single";
    }
    return "middle";
}

inline LayerPosition parse_position(std::string_view s) {
    if (s == "first") return LayerPosition::First;
    if (s == "middle") return LayerPosition::Middle;
    if (s == "last") return LayerPosition::Last;
    if (s == "single") return LayerPosition::Single;
    throw DataError("unknown layer position '" + std::string(s) + "'");
}

/// Position of layer `index` in a network of `count` layers.
inline LayerPosition position_in_network(std::size_t index, std::size_t count) {
    if (count == 1) return LayerPosition::Single;
    if (index == 0) return LayerPosition::First;
    if (index + 1 == count) return LayerPosition::Last;
    return LayerPosition::Middle;
}

inline ConvCounts compute_counts(const LayerConfig& l) {
    return {.ops = l.f * l.c * l.h * l.w * l.k * l.k,
            .input_size = l.h * l.w * l.c,
            .weights_size = l.f * l.c * l.k * l.k,
            .output_size = l.h_o * l.w_o * l.f};
}

/// Generic max-of-three estimate: the slowest of load, compute and store.
/// Sizes are in elements, bandwidth in elements/s, clock in Hz.
inline double generic_layer_latency(double input_size, double output_size, double ops,
                                    double memory_bandwidth, double clock, double parallelism) {
    const double t_load = input_size / memory_bandwidth;
    const double t_compute = ops / (clock * parallelism);
    const double t_store = output_size / memory_bandwidth;
    return std::max({t_load, t_compute, t_store}) * 1e3;
}

inline LatencyBreakdown layer_breakdown(const LayerConfig& layer, const HardwareConfig& hw,
                                        LayerPosition position) {
    constexpr double kMHz = 1e6;
    constexpr double kMs = 1e3;
    const ConvCounts n = compute_counts(layer);
    const auto dw = static_cast<double>(hw.dw_bits);
    // bits per second moved by the memory system across the PF lanes
    const double mem_rate =
        static_cast<double>(hw.pf) * (hw.m_clk_mhz * kMHz) * static_cast<double>(hw.s_bits) * hw.m_eff;
    const double mac_rate =
        static_cast<double>(hw.pf) * static_cast<double>(hw.pc) * (hw.l_clk_mhz * kMHz);

    LatencyBreakdown b;
    b.t_weights = static_cast<double>(n.weights_size) * dw / mem_rate * kMs;
    b.t_data = static_cast<double>(n.input_size) * dw / mem_rate * kMs;
    b.t_load = b.t_weights + b.t_data;
    b.t_compute = static_cast<double>(n.ops) / mac_rate * kMs;
    b.t_store = static_cast<double>(n.output_size) * dw / mem_rate * kMs;

    switch (position) {
        case LayerPosition::First:
            b.t_layer = b.t_load + b.t_compute;
            break;
        case LayerPosition::Middle:
            b.t_layer = std::max(b.t_weights, b.t_compute);
            break;
        case LayerPosition::Last:
            b.t_layer = std::max(b.t_weights, b.t_compute) + b.t_store;
            break;
        case LayerPosition::Single:
            b.t_layer = b.t_load + b.t_compute + b.t_store;
            break;
    }
    return b;
}

/// Per-layer breakdowns with positions assigned by index, and their sum.
inline NetworkEstimate network_latency(std::span<const LayerConfig> layers, const HardwareConfig& hw) {
    if (layers.empty()) throw DataError("empty network");
    validate(hw);
    NetworkEstimate est;
    est.per_layer.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        validate(layers[i]);
        est.per_layer.push_back(layer_breakdown(layers[i], hw, position_in_network(i, layers.size())));
        est.total += est.per_layer.back().t_layer;
    }
    return est;
}

}  // namespace latgp
