#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rowsim {

// Geometry and budget of the PE array. The default instance is the design
// point used throughout: 12 blocks of 7 rows with 4 MAC lanes each, a 600 MHz
// clock and a 149 KiB on-chip buffer.
struct HwConfig {
    int num_blocks = 12;
    int rows_per_block = 7;
    int macs_per_row = 4;
    int clock_mhz = 600;
    std::int64_t sram_budget_bytes = 149 * 1024;
    int accumulator_bits = 32;

    constexpr std::int64_t total_macs() const {
        return static_cast<std::int64_t>(num_blocks) * rows_per_block * macs_per_row;
    }

    // Element lanes consumed per cycle when every block is active.
    constexpr int reduction_lanes() const { return num_blocks * macs_per_row; }

    constexpr double clock_hz() const { return clock_mhz * 1e6; }

    void validate() const {
        if (num_blocks < 1 || rows_per_block < 1 || macs_per_row < 1)
            throw std::invalid_argument("HwConfig: all PE counts must be >= 1");
        if (clock_mhz <= 0)
            throw std::invalid_argument("HwConfig: clock_mhz must be > 0");
        if (sram_budget_bytes <= 0)
            throw std::invalid_argument("HwConfig: sram_budget_bytes must be > 0");
        if (accumulator_bits < 8 || accumulator_bits > 32)
            throw std::invalid_argument("HwConfig: accumulator_bits out of range");
    }
};

// Peak throughput in GOPS, counting each MAC as two operations. Evaluated as
// an exact integer op rate divided by 1000 so the default config reproduces
// 403.2 to the last bit of the double.
inline double peak_gops(const HwConfig& cfg) {
    cfg.validate();
    const std::int64_t mops = cfg.total_macs() * 2 * cfg.clock_mhz;
    return static_cast<double>(mops) / 1000.0;
}

} // namespace rowsim
