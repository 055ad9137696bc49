#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "rowsim/memsys.hpp"
#include "rowsim/oracle.hpp"
#include "rowsim/report.hpp"
#include "rowsim/simulate.hpp"
#include "rowsim/workload.hpp"

namespace rowsim {

struct RunOptions {
    bool check = false;                         // verify against the oracle
    std::uint64_t seed = 1;                     // tensor generation
    std::int64_t bandwidth_bytes_per_cycle = 0; // 0 = ideal off-chip memory
    std::ostream* trace = nullptr;
};

namespace detail {

// splitmix64; decorrelates per-layer, per-role tensor streams from one seed
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t layer, std::uint64_t role) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (layer * 8 + role + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr double kInputScale = 0.04;
inline constexpr double kWeightScale = 0.03;
inline constexpr double kValueScale = 0.05;

struct CheckedLayer {
    LayerSimResult sim;
    bool checked = false;
    bool matched = true;
};

inline CheckedLayer run_layer(const LayerDescriptor& desc, const HwConfig& cfg,
                              const RunOptions& opt, std::size_t index) {
    CheckedLayer out;
    if (auto* c = std::get_if<Conv4x4Spec>(&desc.op)) {
        Int8Stream in_s(mix_seed(opt.seed, index, 0)), w_s(mix_seed(opt.seed, index, 1));
        const QTensor input = in_s.tensor({c->h_in, c->w_in, c->c_in}, kInputScale);
        const QTensor weights = w_s.tensor({c->c_out, 4, 4, c->c_in}, kWeightScale);
        out.sim = simulate_conv(*c, cfg, input, weights, std::nullopt, opt.trace);
        if (opt.check) {
            out.checked = true;
            const auto gold = oracle::oracle_conv4x4(input, weights);
            out.matched = out.sim.acc == gold.acc && out.sim.output.data == gold.tensor.data;
        }
    } else if (auto* f = std::get_if<FullyConnectedSpec>(&desc.op)) {
        Int8Stream in_s(mix_seed(opt.seed, index, 0)), w_s(mix_seed(opt.seed, index, 1));
        const QTensor input = in_s.tensor({f->tokens, f->c_in}, kInputScale);
        const QTensor weights = w_s.tensor({f->c_out, f->c_in}, kWeightScale);
        out.sim = simulate_fc(*f, cfg, input, weights, std::nullopt, opt.trace);
        if (f->activation == Activation::Gelu && out.sim.output.size() > 0) {
            const auto table =
                oracle::build_gelu_table(out.sim.output.scale, out.sim.output.scale);
            for (auto& v : out.sim.output.data) v = oracle::gelu_lut(v, table);
        }
        if (opt.check) {
            out.checked = true;
            const auto gold = oracle::oracle_fc(input, weights, f->activation);
            out.matched = out.sim.acc == gold.acc &&
                          (out.sim.output.size() == 0 || out.sim.output.data == gold.tensor.data);
        }
    } else {
        const auto& a = std::get<WindowAttentionSpec>(desc.op);
        const std::int64_t wh = a.num_windows * a.num_heads;
        const std::int64_t t = a.tokens_per_window, d = a.head_dim();
        Int8Stream q_s(mix_seed(opt.seed, index, 0)), k_s(mix_seed(opt.seed, index, 1)),
            v_s(mix_seed(opt.seed, index, 2));
        const QTensor q = q_s.tensor({wh, t, d}, kInputScale);
        const QTensor k = k_s.tensor({wh, t, d}, kInputScale);
        const QTensor v = v_s.tensor({wh, t, d}, kValueScale);
        out.sim = simulate_attention(a, cfg, q, k, v, std::nullopt, opt.trace);
        if (opt.check && wh * t * d > 0) {
            out.checked = true;
            out.matched = true;
            QTensor qi({t, d}, q.scale), ki({t, d}, k.scale), vi({t, d}, v.scale);
            for (std::int64_t i = 0; i < wh && out.matched; ++i) {
                std::copy(q.data.begin() + i * t * d, q.data.begin() + (i + 1) * t * d,
                          qi.data.begin());
                std::copy(k.data.begin() + i * t * d, k.data.begin() + (i + 1) * t * d,
                          ki.data.begin());
                std::copy(v.data.begin() + i * t * d, v.data.begin() + (i + 1) * t * d,
                          vi.data.begin());
                const auto gold = oracle::oracle_attention_window(qi, ki, vi);
                for (std::int64_t j = 0; j < t * t && out.matched; ++j)
                    out.matched = out.sim.score_acc[i * t * t + j] == gold.score_acc[j];
                for (std::int64_t j = 0; j < t * d && out.matched; ++j)
                    out.matched = out.sim.acc[i * t * d + j] == gold.output.acc[j];
            }
        } else if (opt.check) {
            out.checked = true;
        }
    }

    // post-ops on the requantized output: zero cycles, post-processing unit
    if (out.sim.output.size() > 0) {
        if (desc.post_norm) {
            // normalize along the tensor's innermost axis
            const std::int64_t channels = out.sim.output.dims.back();
            const std::int64_t rows = out.sim.output.size() / std::max<std::int64_t>(channels, 1);
            if (channels >= 2) {
                const std::vector<double> gamma(static_cast<std::size_t>(channels), 1.0);
                const std::vector<double> beta(static_cast<std::size_t>(channels), 0.0);
                std::vector<std::int8_t> row(static_cast<std::size_t>(channels));
                for (std::int64_t r = 0; r < rows; ++r) {
                    std::copy(out.sim.output.data.begin() + r * channels,
                              out.sim.output.data.begin() + (r + 1) * channels, row.begin());
                    const auto normed = oracle::layernorm_row(row, out.sim.output.scale, gamma,
                                                              beta, out.sim.output.scale);
                    std::copy(normed.begin(), normed.end(),
                              out.sim.output.data.begin() + r * channels);
                }
            }
        }
        if (desc.residual) {
            Int8Stream r_s(mix_seed(opt.seed, index, 3));
            const QTensor partner = r_s.tensor(out.sim.output.dims, out.sim.output.scale);
            out.sim.output = oracle::residual_add(out.sim.output, partner);
        }
    }
    return out;
}

} // namespace detail

// Schedule, simulate and (optionally) oracle-check every layer of a workload,
// then assemble the report. Mapping and capacity problems throw with the
// layer index named; an oracle mismatch marks the report failed instead.
inline Report run(const Workload& workload, const HwConfig& cfg, const BufferPartition& partition,
                  const RunOptions& opt = {}) {
    validate_engine_config(cfg);
    validate_chain(workload);

    Report report;
    report.workload = workload.name;
    report.cfg = cfg;
    report.partition = partition;
    report.check_enabled = opt.check;
    report.peak_gops_value = peak_gops(cfg);

    const PartitionCheck pc = check_partition(partition, cfg);
    if (!pc.ok) throw CapacityError("partition violation: " + pc.detail);

    TrafficLedger ledger;
    SimStats totals;
    std::int64_t stall_cycles = 0;

    for (std::size_t i = 0; i < workload.layers.size(); ++i) {
        const auto& desc = workload.layers[i];
        ResidencyPlan plan;
        try {
            plan = residency_plan(desc, partition, cfg);
        } catch (const CapacityError& e) {
            throw CapacityError("layer " + std::to_string(i) + " (" + layer_kind_name(desc) +
                                "): " + e.what());
        }
        detail::CheckedLayer layer;
        try {
            layer = detail::run_layer(desc, cfg, opt, i);
        } catch (const UnsupportedMappingError& e) {
            throw UnsupportedMappingError("layer " + std::to_string(i) + " (" +
                                          layer_kind_name(desc) + "): " + e.what());
        }

        LayerReport lr;
        lr.index = static_cast<int>(i);
        lr.type = layer_kind_name(desc);
        lr.stats = layer.sim.stats;
        lr.stats.dram_bytes = plan.dram_total();
        lr.utilization = layer.sim.stats.utilization(cfg);
        lr.check = layer.checked ? (layer.matched ? "ok" : "mismatch") : "skipped";
        if (layer.checked && !layer.matched) report.ok = false;

        ledger.add_sram(layer.sim.stats);
        ledger.dram_bytes_in += plan.dram_bytes_in;
        ledger.dram_bytes_out += plan.dram_bytes_out;
        totals += lr.stats;

        if (opt.bandwidth_bytes_per_cycle > 0) {
            const std::int64_t dram_cycles =
                (plan.dram_total() + opt.bandwidth_bytes_per_cycle - 1) /
                opt.bandwidth_bytes_per_cycle;
            stall_cycles += std::max<std::int64_t>(0, dram_cycles - layer.sim.stats.cycles);
        }

        if (std::holds_alternative<WindowAttentionSpec>(desc.op)) {
            const auto& plan2 = layer.sim.plan;
            const std::int64_t wh = std::get<WindowAttentionSpec>(desc.op).num_windows *
                                    std::get<WindowAttentionSpec>(desc.op).num_heads;
            report.attention_cycles += layer.sim.stats.cycles;
            report.attention_score_cycles += wh * plan2.score_cycles;
            report.attention_idle_cycles +=
                static_cast<double>(wh * plan2.score_cycles) *
                static_cast<double>(cfg.num_blocks - plan2.blocks_used) /
                static_cast<double>(cfg.num_blocks);
        }

        report.layers.push_back(std::move(lr));
    }

    report.totals = totals;
    report.total_utilization = totals.utilization(cfg);
    report.achieved_gops = totals.gops(cfg);
    report.images_per_s = totals.images_per_s(cfg);
    report.bandwidth_bytes_per_cycle = opt.bandwidth_bytes_per_cycle;
    report.stall_cycles = stall_cycles;
    report.effective_images_per_s =
        (totals.cycles + stall_cycles) > 0
            ? cfg.clock_hz() / static_cast<double>(totals.cycles + stall_cycles)
            : 0.0;

    if (!workload.layers.empty()) {
        const FlopsReport fr = flops_report(workload.layers);
        report.conv_flops_share = fr.conv.flops_share;
        report.fc_flops_share = fr.fc.flops_share;
        report.attn_flops_share = fr.attention.flops_share;
        report.conv_params_share = fr.conv.params_share;
        report.fc_params_share = fr.fc.params_share;
        report.attn_params_share = fr.attention.params_share;
    }

    // ledger totals must agree with the engine-side counters exactly
    if (ledger.sram_weight_reads != totals.sram_weight_reads ||
        ledger.sram_input_reads != totals.sram_input_reads ||
        ledger.sram_output_writes != totals.sram_output_writes ||
        ledger.dram_total() != totals.dram_bytes)
        throw std::logic_error("traffic ledger out of sync with engine counters");
    return report;
}

} // namespace rowsim
