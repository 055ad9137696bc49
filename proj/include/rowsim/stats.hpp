#pragma once

#include <cstdint>

#include "rowsim/hw_config.hpp"

namespace rowsim {

// Cycle and access totals of one simulated schedule (or a sum of them).
// mac_ops counts issued multiply-accumulates: every lane of an active row is
// issued work even when the lane carries tile padding.
struct SimStats {
    std::int64_t cycles = 0;
    std::int64_t mac_ops = 0;
    std::int64_t sram_weight_reads = 0;
    std::int64_t sram_input_reads = 0;
    std::int64_t sram_output_writes = 0;
    std::int64_t dram_bytes = 0;

    SimStats& operator+=(const SimStats& o) {
        cycles += o.cycles;
        mac_ops += o.mac_ops;
        sram_weight_reads += o.sram_weight_reads;
        sram_input_reads += o.sram_input_reads;
        sram_output_writes += o.sram_output_writes;
        dram_bytes += o.dram_bytes;
        return *this;
    }

    double utilization(const HwConfig& cfg) const {
        if (cycles == 0) return 0.0;
        return static_cast<double>(mac_ops) /
               (static_cast<double>(cfg.total_macs()) * static_cast<double>(cycles));
    }

    // Achieved throughput at the configured clock, one MAC = 2 ops.
    double gops(const HwConfig& cfg) const {
        if (cycles == 0) return 0.0;
        const double seconds = static_cast<double>(cycles) / cfg.clock_hz();
        return static_cast<double>(mac_ops) * 2.0 / seconds / 1e9;
    }

    double images_per_s(const HwConfig& cfg) const {
        if (cycles == 0) return 0.0;
        return cfg.clock_hz() / static_cast<double>(cycles);
    }

    bool operator==(const SimStats&) const = default;
};

} // namespace rowsim
