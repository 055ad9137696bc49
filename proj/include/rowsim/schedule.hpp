#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowsim/hw_config.hpp"

namespace rowsim {

// Engine-side caps; HwConfig instances driven through the engine are
// validated against these.
inline constexpr int kMaxBlocks = 32;
inline constexpr int kMaxRows = 16;
inline constexpr int kMaxMacs = 8;

inline void validate_engine_config(const HwConfig& cfg) {
    cfg.validate();
    if (cfg.num_blocks > kMaxBlocks || cfg.rows_per_block > kMaxRows ||
        cfg.macs_per_row > kMaxMacs)
        throw std::invalid_argument("HwConfig exceeds engine geometry caps");
}

// One cycle of work for the whole array.
//
// Addressing is affine: block b lane m of the weight vector reads
//   weights[weight_base + wblock_off[b] + m * wstride]
// and row r of block b reads
//   inputs[row_input_base[r] + iblock_off[b] + m * istride].
// The offset tables and strides are constant across a phase; the bases, lane
// counts and accumulate targets change cycle by cycle. Lanes beyond
// block_lanes[b] are tile padding and contribute exact zeros.
struct CycleOp {
    // per-cycle fields
    std::int64_t weight_base = -1; // < 0: no weight latch this cycle
    std::array<std::int64_t, kMaxRows> row_input_base{};
    std::array<std::int32_t, kMaxRows> acc_entry{};    // < 0: row idle
    std::array<std::int64_t, kMaxRows> output_index{}; // >= 0: drain after this cycle
    std::array<std::uint8_t, kMaxBlocks> block_lanes{};
    bool flush = true; // route row sums through the adder tree into the bank

    // per-phase constants
    std::array<std::int64_t, kMaxBlocks> wblock_off{};
    std::array<std::int64_t, kMaxBlocks> iblock_off{};
    std::int64_t wstride = 1;
    std::int64_t istride = 1;
    int blocks = 0;
    int rows = 0;
    int macs = 0;

    void reset_rows() {
        row_input_base.fill(-1);
        acc_entry.fill(-1);
        output_index.fill(-1);
    }
};

enum class PhaseKind { Conv4x4, FcTile, AttnScore, AttnAggregate };

// A dense loop nest over the array, expanded one CycleOp at a time. Keeping
// schedules in this compact form instead of materialized op lists is what
// makes whole-model runs (tens of millions of cycles) tractable.
struct Phase {
    PhaseKind kind = PhaseKind::FcTile;

    // geometry the phase was planned for
    int blocks = 0;
    int rows = 0;
    int macs = 0;

    // problem extents; meaning depends on kind (see emit()).
    std::int64_t tokens = 0;   // fc/attention token count; conv positions
    std::int64_t c_in = 0;     // fc reduction width
    std::int64_t c_out = 0;    // fc/conv output channels
    std::int64_t head_dim = 0; // attention head width
    std::int64_t out_w = 0;    // conv output columns
    std::int64_t in_w = 0;     // conv input row pitch (w * c_in)
    std::int64_t conv_cin = 0; // conv input channels

    // flat offsets of this phase's tensors inside the bound buffers
    std::int64_t weight_off = 0;
    std::int64_t input_off = 0;
    std::int64_t output_off = 0;

    std::int64_t spatial_groups() const {
        return tokens == 0 ? 0 : (tokens + rows - 1) / rows;
    }
    std::int64_t reduction_tiles() const {
        const std::int64_t lanes = static_cast<std::int64_t>(blocks) * macs;
        const std::int64_t red = kind == PhaseKind::AttnAggregate ? tokens : c_in;
        return red == 0 ? 0 : (red + lanes - 1) / lanes;
    }

    std::int64_t cycles() const {
        switch (kind) {
        case PhaseKind::Conv4x4:
            return c_out * spatial_groups();
        case PhaseKind::FcTile:
            return c_out * spatial_groups() * reduction_tiles();
        case PhaseKind::AttnScore:
            return tokens * spatial_groups();
        case PhaseKind::AttnAggregate:
            return head_dim * spatial_groups() * reduction_tiles();
        }
        return 0;
    }

    // Issued MACs over the whole phase: four per active block-row per cycle.
    std::int64_t issued_macs() const {
        const std::int64_t lanes = static_cast<std::int64_t>(blocks) * macs;
        auto blocks_of_width = [&](std::int64_t width) {
            std::int64_t used = 0;
            for (std::int64_t t = 0; t < reduction_tiles(); ++t) {
                const std::int64_t w = std::min<std::int64_t>(lanes, width - t * lanes);
                used += (w + macs - 1) / macs;
            }
            return used;
        };
        switch (kind) {
        case PhaseKind::Conv4x4:
            return 4LL * blocks * tokens * c_out;
        case PhaseKind::FcTile:
            return 4LL * tokens * c_out * blocks_of_width(c_in);
        case PhaseKind::AttnScore: {
            const std::int64_t bu = (head_dim + macs - 1) / macs;
            return 4LL * bu * tokens * tokens;
        }
        case PhaseKind::AttnAggregate:
            return 4LL * head_dim * tokens * blocks_of_width(tokens);
        }
        return 0;
    }

    // Phase-constant CycleOp fields.
    void prepare(CycleOp& op) const {
        op.blocks = blocks;
        op.rows = rows;
        op.macs = macs;
        op.flush = true;
        op.wblock_off.fill(0);
        op.iblock_off.fill(0);
        switch (kind) {
        case PhaseKind::Conv4x4:
            // block b = ci * 4 + ky holds kernel row ky of input channel ci
            for (int b = 0; b < blocks; ++b) {
                const std::int64_t ci = b / 4, ky = b % 4;
                op.wblock_off[b] = ky * 4 * conv_cin + ci;
                op.iblock_off[b] = ky * in_w + ci;
            }
            op.wstride = conv_cin;
            op.istride = conv_cin;
            break;
        case PhaseKind::FcTile:
        case PhaseKind::AttnScore:
            for (int b = 0; b < blocks; ++b) {
                op.wblock_off[b] = static_cast<std::int64_t>(b) * macs;
                op.iblock_off[b] = static_cast<std::int64_t>(b) * macs;
            }
            op.wstride = 1;
            op.istride = 1;
            break;
        case PhaseKind::AttnAggregate:
            // weight lanes walk down V's rows: stride head_dim
            for (int b = 0; b < blocks; ++b) {
                op.wblock_off[b] = static_cast<std::int64_t>(b) * macs * head_dim;
                op.iblock_off[b] = static_cast<std::int64_t>(b) * macs;
            }
            op.wstride = head_dim;
            op.istride = 1;
            break;
        }
    }

    // Per-cycle CycleOp fields for local cycle index i in [0, cycles()).
    void emit(std::int64_t i, CycleOp& op) const {
        op.reset_rows();
        const std::int64_t lanes = static_cast<std::int64_t>(blocks) * macs;
        switch (kind) {
        case PhaseKind::Conv4x4: {
            const std::int64_t groups = spatial_groups();
            const std::int64_t o = i / groups;
            const std::int64_t g = i % groups;
            op.weight_base = weight_off + o * 16 * conv_cin;
            for (int b = 0; b < blocks; ++b) op.block_lanes[b] = 4;
            const std::int64_t first = g * rows;
            const int active = static_cast<int>(std::min<std::int64_t>(rows, tokens - first));
            for (int r = 0; r < active; ++r) {
                const std::int64_t p = first + r;
                const std::int64_t y = p / out_w, x = p % out_w;
                op.row_input_base[r] = input_off + 4 * y * in_w + 4 * x * conv_cin;
                op.acc_entry[r] = r;
                op.output_index[r] = output_off + p * c_out + o;
            }
            break;
        }
        case PhaseKind::FcTile: {
            const std::int64_t groups = spatial_groups();
            const std::int64_t tiles = reduction_tiles();
            const std::int64_t o = i / (groups * tiles);
            const std::int64_t g = (i / tiles) % groups;
            const std::int64_t t = i % tiles;
            const std::int64_t tile_base = t * lanes;
            op.weight_base = weight_off + o * c_in + tile_base;
            for (int b = 0; b < blocks; ++b) {
                const std::int64_t have = c_in - (tile_base + static_cast<std::int64_t>(b) * macs);
                op.block_lanes[b] =
                    static_cast<std::uint8_t>(std::clamp<std::int64_t>(have, 0, macs));
            }
            const std::int64_t first = g * rows;
            const int active = static_cast<int>(std::min<std::int64_t>(rows, tokens - first));
            const bool last_tile = (t == tiles - 1);
            for (int r = 0; r < active; ++r) {
                const std::int64_t tok = first + r;
                op.row_input_base[r] = input_off + tok * c_in + tile_base;
                op.acc_entry[r] = r;
                op.output_index[r] = last_tile ? output_off + tok * c_out + o : -1;
            }
            break;
        }
        case PhaseKind::AttnScore: {
            const std::int64_t groups = spatial_groups();
            const std::int64_t qi = i / groups;
            const std::int64_t g = i % groups;
            op.weight_base = weight_off + qi * head_dim;
            for (int b = 0; b < blocks; ++b) {
                const std::int64_t have = head_dim - static_cast<std::int64_t>(b) * macs;
                op.block_lanes[b] =
                    static_cast<std::uint8_t>(std::clamp<std::int64_t>(have, 0, macs));
            }
            const std::int64_t first = g * rows;
            const int active = static_cast<int>(std::min<std::int64_t>(rows, tokens - first));
            for (int r = 0; r < active; ++r) {
                const std::int64_t kj = first + r;
                op.row_input_base[r] = input_off + kj * head_dim;
                op.acc_entry[r] = r;
                op.output_index[r] = output_off + qi * tokens + kj;
            }
            break;
        }
        case PhaseKind::AttnAggregate: {
            const std::int64_t groups = spatial_groups();
            const std::int64_t tiles = reduction_tiles();
            const std::int64_t e = i / (groups * tiles);
            const std::int64_t g = (i / tiles) % groups;
            const std::int64_t t = i % tiles;
            const std::int64_t tile_base = t * lanes;
            op.weight_base = weight_off + tile_base * head_dim + e;
            for (int b = 0; b < blocks; ++b) {
                const std::int64_t have = tokens - (tile_base + static_cast<std::int64_t>(b) * macs);
                op.block_lanes[b] =
                    static_cast<std::uint8_t>(std::clamp<std::int64_t>(have, 0, macs));
            }
            const std::int64_t first = g * rows;
            const int active = static_cast<int>(std::min<std::int64_t>(rows, tokens - first));
            const bool last_tile = (t == tiles - 1);
            for (int r = 0; r < active; ++r) {
                const std::int64_t tok = first + r;
                op.row_input_base[r] = input_off + tok * tokens + tile_base;
                op.acc_entry[r] = r;
                op.output_index[r] = last_tile ? output_off + tok * head_dim + e : -1;
            }
            break;
        }
        }
    }
};

// A run of phases sharing one (weight, input) buffer binding and producing
// one accumulator tensor. Conv and FC layers are a single segment; window
// attention needs two, with the softmax post-processing between them.
struct Segment {
    std::vector<Phase> phases;
    std::int64_t output_size = 0; // accumulator entries this segment drains
    std::string weight_name = "weights";
    std::string input_name = "input";

    std::int64_t cycles() const {
        std::int64_t n = 0;
        for (const auto& p : phases) n += p.cycles();
        return n;
    }
    std::int64_t issued_macs() const {
        std::int64_t n = 0;
        for (const auto& p : phases) n += p.issued_macs();
        return n;
    }

    // Random access for tests and sweeps; the engine iterates phases directly.
    void op_at(std::int64_t cycle, CycleOp& op) const {
        for (const auto& p : phases) {
            const std::int64_t n = p.cycles();
            if (cycle < n) {
                p.prepare(op);
                p.emit(cycle, op);
                return;
            }
            cycle -= n;
        }
        throw std::out_of_range("op_at: cycle beyond schedule");
    }
};

struct TileSchedule {
    std::string label;
    std::vector<Segment> segments;

    std::int64_t total_cycles() const {
        std::int64_t n = 0;
        for (const auto& s : segments) n += s.cycles();
        return n;
    }
    std::int64_t total_issued_macs() const {
        std::int64_t n = 0;
        for (const auto& s : segments) n += s.issued_macs();
        return n;
    }
};

} // namespace rowsim
