#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

#include "rowsim/hw_config.hpp"
#include "rowsim/layer.hpp"
#include "rowsim/stats.hpp"

// On-chip buffer partitioning and off-chip traffic model. Off-chip memory is
// ideal by default (the design is compute bound); a bytes-per-cycle cap can
// be applied at report time for sensitivity studies.
namespace rowsim {

struct BufferPartition {
    std::int64_t input_bytes = 56 * 1024;
    std::int64_t weight_bytes = 72 * 1024;
    std::int64_t output_bytes = 21 * 1024;

    std::int64_t total() const { return input_bytes + weight_bytes + output_bytes; }
};

struct PartitionCheck {
    bool ok = true;
    std::string detail;
};

inline PartitionCheck check_partition(const BufferPartition& p, const HwConfig& cfg) {
    PartitionCheck c;
    if (p.input_bytes < 0 || p.weight_bytes < 0 || p.output_bytes < 0) {
        c.ok = false;
        c.detail = "negative buffer size";
        return c;
    }
    if (p.total() > cfg.sram_budget_bytes) {
        c.ok = false;
        c.detail = "partition " + std::to_string(p.total()) + " B exceeds SRAM budget " +
                   std::to_string(cfg.sram_budget_bytes) + " B";
    }
    return c;
}

// Running totals of memory activity for one simulation. SRAM counts come
// straight from the engine; DRAM bytes from the residency plans.
struct TrafficLedger {
    std::int64_t sram_weight_reads = 0;
    std::int64_t sram_input_reads = 0;
    std::int64_t sram_output_writes = 0;
    std::int64_t dram_bytes_in = 0;
    std::int64_t dram_bytes_out = 0;

    void add_sram(const SimStats& s) {
        sram_weight_reads += s.sram_weight_reads;
        sram_input_reads += s.sram_input_reads;
        sram_output_writes += s.sram_output_writes;
    }
    std::int64_t dram_total() const { return dram_bytes_in + dram_bytes_out; }
};

class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Which tensor bytes sit in which buffer over the layer's run, and the
// off-chip traffic that movement implies. Weights stream in output-channel
// chunks sized to the weight buffer (each weight byte loaded exactly once);
// inputs stay resident when they fit and are otherwise re-streamed once per
// weight chunk. Outputs leave the chip once. Double buffering hides the
// transfers, so the plan adds no cycles.
struct ResidencyPlan {
    std::int64_t weight_chunk_loads = 1; // ceil(weight_bytes / weight buffer)
    std::int64_t input_passes = 1;
    bool input_resident = true;
    std::int64_t largest_weight_tile = 0; // bytes resident at once
    std::int64_t largest_input_tile = 0;
    std::int64_t dram_bytes_in = 0;
    std::int64_t dram_bytes_out = 0;

    std::int64_t dram_total() const { return dram_bytes_in + dram_bytes_out; }
};

namespace detail {
inline std::int64_t ceil_div_pos(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

struct LayerFootprint {
    std::int64_t input_bytes = 0;
    std::int64_t weight_bytes = 0;
    std::int64_t output_bytes = 0;     // int8 results leaving the chip
    std::int64_t min_weight_tile = 0;  // smallest indivisible weight unit
    std::int64_t min_input_tile = 0;   // one row-group of inputs
};

inline LayerFootprint footprint(const LayerDescriptor& d, const HwConfig& cfg) {
    LayerFootprint f;
    if (auto* c = std::get_if<Conv4x4Spec>(&d.op)) {
        f.input_bytes = c->h_in * c->w_in * c->c_in;
        f.weight_bytes = c->c_out * c->patch_size();
        f.output_bytes = c->positions() * c->c_out;
        f.min_weight_tile = c->patch_size(); // one output channel's kernel
        f.min_input_tile = std::min<std::int64_t>(
            f.input_bytes, cfg.rows_per_block * 4 * c->w_in * c->c_in);
    } else if (auto* fc = std::get_if<FullyConnectedSpec>(&d.op)) {
        f.input_bytes = fc->tokens * fc->c_in;
        f.weight_bytes = fc->c_out * fc->c_in;
        f.output_bytes = fc->tokens * fc->c_out;
        f.min_weight_tile = fc->c_in; // one output channel's filter row
        f.min_input_tile =
            std::min<std::int64_t>(f.input_bytes, cfg.rows_per_block * fc->c_in);
    } else {
        auto& w = std::get<WindowAttentionSpec>(d.op);
        const std::int64_t wh = w.num_windows * w.num_heads;
        const std::int64_t t = w.tokens_per_window, hd = w.head_dim();
        f.input_bytes = 3 * wh * t * hd;   // Q, K and V arrive from off chip
        f.weight_bytes = 0;                // no resident parameters
        f.output_bytes = wh * t * hd;
        f.min_weight_tile = 2 * t * hd;    // one window-head's Q (or V) panel
        f.min_input_tile = t * hd + t * t; // K panel plus the probability rows
    }
    return f;
}
} // namespace detail

inline ResidencyPlan residency_plan(const LayerDescriptor& desc, const BufferPartition& p,
                                    const HwConfig& cfg = HwConfig{}) {
    desc.validate();
    const auto f = detail::footprint(desc, cfg);
    ResidencyPlan plan;
    if (layer_macs(desc) == 0) {
        plan.weight_chunk_loads = 0;
        plan.input_passes = 0;
        return plan; // layer does no work, nothing moves
    }
    if (f.min_weight_tile > p.weight_bytes)
        throw CapacityError("weight buffer too small: tile of " +
                            std::to_string(f.min_weight_tile) + " B exceeds " +
                            std::to_string(p.weight_bytes) + " B");
    if (f.min_input_tile > p.input_bytes)
        throw CapacityError("input buffer too small: tile of " +
                            std::to_string(f.min_input_tile) + " B exceeds " +
                            std::to_string(p.input_bytes) + " B");

    plan.weight_chunk_loads =
        f.weight_bytes == 0 ? 1 : detail::ceil_div_pos(f.weight_bytes, p.weight_bytes);
    plan.input_resident = f.input_bytes <= p.input_bytes;
    plan.input_passes = plan.input_resident ? 1 : plan.weight_chunk_loads;
    plan.largest_weight_tile = std::min(f.weight_bytes, p.weight_bytes);
    plan.largest_input_tile = std::min(f.input_bytes, p.input_bytes);
    plan.dram_bytes_in = f.weight_bytes + f.input_bytes * plan.input_passes;
    plan.dram_bytes_out = f.output_bytes;
    return plan;
}

} // namespace rowsim
