#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowsim/hw_config.hpp"
#include "rowsim/schedule.hpp"
#include "rowsim/stats.hpp"

namespace rowsim {

// Per-block state: the latched broadcast weights and one 32-bit local
// accumulator per PE row. Row sums normally pass straight through the adder
// tree, but a no-flush cycle leaves them here for further accumulation.
struct PeBlockState {
    std::array<std::int8_t, kMaxMacs> broadcast_weights{};
    std::array<std::int32_t, kMaxRows> row_accumulators{};
};

class SchedulingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Cycle-accurate executor for the PE array, the adder tree and the
// accumulator bank. One instance owns one run; instances are independent.
class PeArraySim {
public:
    explicit PeArraySim(const HwConfig& cfg) : cfg_(cfg) {
        validate_engine_config(cfg);
        blocks_.assign(static_cast<std::size_t>(cfg.num_blocks), PeBlockState{});
        bank_.assign(static_cast<std::size_t>(cfg.num_blocks) * cfg.rows_per_block, 0);
    }

    void set_trace(std::ostream* os) { trace_ = os; }

    const std::vector<PeBlockState>& block_state() const { return blocks_; }
    const std::vector<std::int32_t>& accumulator_bank() const { return bank_; }
    const SimStats& stats() const { return stats_; }

    // Advance one cycle. Weight and input spans are the SRAM-resident
    // tensors the op's references point into; outputs receive drained
    // accumulator entries.
    void step_cycle(const CycleOp& op,
                    std::span<const std::int8_t> weights,
                    std::span<const std::int8_t> inputs,
                    std::vector<std::int32_t>& outputs,
                    std::vector<std::uint8_t>* written = nullptr) {
        if (op.blocks > cfg_.num_blocks || op.rows > cfg_.rows_per_block ||
            op.macs > cfg_.macs_per_row)
            throw SchedulingError("cycle op exceeds configured geometry");

        // Latch broadcast weights: one 4-wide vector per active block.
        std::array<std::array<std::int32_t, kMaxMacs>, kMaxBlocks> w{};
        int active_blocks = 0;
        for (int b = 0; b < op.blocks; ++b) {
            const int lanes = op.block_lanes[b];
            if (lanes == 0) continue;
            ++active_blocks;
            const std::int64_t base = op.weight_base + op.wblock_off[b];
            check_ref(base, op.wstride, lanes, weights.size(), "weight");
            auto& blk = blocks_[static_cast<std::size_t>(b)];
            blk.broadcast_weights.fill(0);
            for (int m = 0; m < lanes; ++m) {
                const std::int8_t value = weights[static_cast<std::size_t>(base + m * op.wstride)];
                blk.broadcast_weights[static_cast<std::size_t>(m)] = value;
                w[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)] = value;
            }
            stats_.sram_weight_reads += op.macs; // broadcast: one vector per block
        }

        // Dot products: rows gather their own inputs, products reduce
        // horizontally, block partials land in the local row buffers.
        for (int r = 0; r < op.rows; ++r) {
            if (op.row_input_base[r] < 0) continue;
            for (int b = 0; b < op.blocks; ++b) {
                const int lanes = op.block_lanes[b];
                if (lanes == 0) continue;
                const std::int64_t base = op.row_input_base[r] + op.iblock_off[b];
                check_ref(base, op.istride, lanes, inputs.size(), "input");
                std::int32_t dot = 0;
                const auto& wb = w[static_cast<std::size_t>(b)];
                for (int m = 0; m < lanes; ++m)
                    dot += wb[static_cast<std::size_t>(m)] *
                           static_cast<std::int32_t>(
                               inputs[static_cast<std::size_t>(base + m * op.istride)]);
                auto& local = blocks_[static_cast<std::size_t>(b)]
                                  .row_accumulators[static_cast<std::size_t>(r)];
                local = checked_add(local, dot);
                stats_.mac_ops += op.macs;
                stats_.sram_input_reads += op.macs;
            }
        }

        // Adder tree: per row, sum the block locals into the named bank
        // entry; drain finished entries to the output tensor.
        if (op.flush) {
            for (int r = 0; r < op.rows; ++r) {
                if (op.acc_entry[r] < 0) continue;
                const auto entry = static_cast<std::size_t>(op.acc_entry[r]);
                if (entry >= bank_.size())
                    throw SchedulingError("accumulator entry out of range");
                std::int64_t tree = 0;
                for (int b = 0; b < op.blocks; ++b) {
                    auto& local = blocks_[static_cast<std::size_t>(b)]
                                      .row_accumulators[static_cast<std::size_t>(r)];
                    tree += local;
                    local = 0;
                }
                bank_[entry] = checked_add(bank_[entry], tree);
                const std::int64_t out = op.output_index[r];
                if (out >= 0) {
                    if (out >= static_cast<std::int64_t>(outputs.size()))
                        throw SchedulingError("output coordinate out of range");
                    if (written) {
                        auto& flag = (*written)[static_cast<std::size_t>(out)];
                        if (flag) throw SchedulingError("output coordinate written twice");
                        flag = 1;
                    }
                    outputs[static_cast<std::size_t>(out)] = bank_[entry];
                    bank_[entry] = 0;
                    stats_.sram_output_writes += 1;
                }
            }
        }

        if (trace_) trace_cycle(op, active_blocks);
        stats_.cycles += 1;
    }

    // Execute one segment against bound buffers. Every output coordinate
    // must be drained exactly once.
    struct SegmentResult {
        std::vector<std::int32_t> outputs;
        SimStats stats;
    };

    SegmentResult run_segment(const Segment& seg,
                              std::span<const std::int8_t> weights,
                              std::span<const std::int8_t> inputs) {
        const SimStats before = stats_;
        std::vector<std::int32_t> outputs(static_cast<std::size_t>(seg.output_size), 0);
        std::vector<std::uint8_t> written(static_cast<std::size_t>(seg.output_size), 0);
        CycleOp op;
        for (const auto& phase : seg.phases) {
            phase.prepare(op);
            const std::int64_t n = phase.cycles();
            for (std::int64_t i = 0; i < n; ++i) {
                phase.emit(i, op);
                step_cycle(op, weights, inputs, outputs, &written);
            }
        }
        for (std::size_t i = 0; i < written.size(); ++i)
            if (!written[i])
                throw SchedulingError("output coordinate " + std::to_string(i) +
                                      " never written");
        SegmentResult r;
        r.outputs = std::move(outputs);
        r.stats = stats_;
        r.stats.cycles -= before.cycles;
        r.stats.mac_ops -= before.mac_ops;
        r.stats.sram_weight_reads -= before.sram_weight_reads;
        r.stats.sram_input_reads -= before.sram_input_reads;
        r.stats.sram_output_writes -= before.sram_output_writes;
        r.stats.dram_bytes -= before.dram_bytes;
        return r;
    }

private:
    static std::int32_t checked_add(std::int64_t a, std::int64_t b) {
        const std::int64_t v = a + b;
        if (v < std::numeric_limits<std::int32_t>::min() ||
            v > std::numeric_limits<std::int32_t>::max())
            throw std::overflow_error("32-bit accumulator overflow");
        return static_cast<std::int32_t>(v);
    }

    static void check_ref(std::int64_t base, std::int64_t stride, int lanes,
                          std::size_t size, const char* what) {
        const std::int64_t last = base + static_cast<std::int64_t>(lanes - 1) * stride;
        if (base < 0 || last < 0 || base >= static_cast<std::int64_t>(size) ||
            last >= static_cast<std::int64_t>(size))
            throw SchedulingError(std::string(what) + " reference outside resident buffer");
    }

    void trace_cycle(const CycleOp& op, int /*active_blocks*/) {
        int rows_active = 0;
        std::int32_t first_target = -1;
        for (int r = 0; r < op.rows; ++r) {
            if (op.row_input_base[r] >= 0) ++rows_active;
            if (first_target < 0 && op.acc_entry[r] >= 0) first_target = op.acc_entry[r];
        }
        for (int b = 0; b < op.blocks; ++b) {
            if (op.block_lanes[b] == 0) continue;
            *trace_ << stats_.cycles << ' ' << b << ' ' << rows_active << ' '
                    << (op.weight_base + op.wblock_off[b]) << ' ' << first_target << '\n';
        }
    }

    HwConfig cfg_;
    std::vector<PeBlockState> blocks_;
    std::vector<std::int32_t> bank_;
    SimStats stats_;
    std::ostream* trace_ = nullptr;
};

} // namespace rowsim
