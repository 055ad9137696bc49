#pragma once

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowsim/hw_config.hpp"
#include "rowsim/memsys.hpp"
#include "rowsim/scheduler.hpp"
#include "rowsim/stats.hpp"

namespace rowsim {

enum class ReportFormat { Table, Machine };

struct LayerReport {
    int index = 0;
    std::string type;      // conv4x4 | fc | wmsa
    SimStats stats;        // dram_bytes included
    double utilization = 0.0;
    std::string check = "skipped"; // ok | mismatch | skipped
};

struct Report {
    std::string workload;
    HwConfig cfg;
    BufferPartition partition;
    bool check_enabled = false;
    std::vector<LayerReport> layers;

    SimStats totals;
    double total_utilization = 0.0;
    double peak_gops_value = 0.0;
    double achieved_gops = 0.0;
    double images_per_s = 0.0;

    double conv_flops_share = 0.0, fc_flops_share = 0.0, attn_flops_share = 0.0;
    double conv_params_share = 0.0, fc_params_share = 0.0, attn_params_share = 0.0;

    std::int64_t attention_cycles = 0;        // all window-attention layer cycles
    std::int64_t attention_score_cycles = 0;  // score-phase share of the above
    // capacity lost to idle blocks in the score phase, in equivalent cycles
    double attention_idle_cycles = 0.0;

    std::int64_t bandwidth_bytes_per_cycle = 0; // 0 = ideal
    std::int64_t stall_cycles = 0;
    double effective_images_per_s = 0.0;

    bool ok = true;
};

namespace detail {
inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
} // namespace detail

// Machine form: line-oriented, whitespace-delimited, fixed six-decimal reals;
// byte-identical for identical runs. Grammar documented in the README.
inline std::string emit_report(const Report& r, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::Machine) {
        using detail::fixed6;
        out << "rowsim-report 1\n";
        out << "workload " << (r.workload.empty() ? "-" : r.workload) << '\n';
        out << "config " << r.cfg.num_blocks << ' ' << r.cfg.rows_per_block << ' '
            << r.cfg.macs_per_row << ' ' << r.cfg.clock_mhz << ' ' << r.cfg.sram_budget_bytes
            << '\n';
        out << "partition " << r.partition.input_bytes << ' ' << r.partition.weight_bytes << ' '
            << r.partition.output_bytes << '\n';
        out << "peak_gops " << fixed6(r.peak_gops_value) << '\n';
        out << "check " << (r.check_enabled ? 1 : 0) << '\n';
        for (const auto& l : r.layers)
            out << "layer " << l.index << ' ' << l.type << ' ' << l.stats.cycles << ' '
                << l.stats.mac_ops << ' ' << fixed6(l.utilization) << ' '
                << l.stats.sram_weight_reads << ' ' << l.stats.sram_input_reads << ' '
                << l.stats.sram_output_writes << ' ' << l.stats.dram_bytes << ' ' << l.check
                << '\n';
        out << "flops " << fixed6(r.conv_flops_share) << ' ' << fixed6(r.fc_flops_share) << ' '
            << fixed6(r.attn_flops_share) << '\n';
        out << "params " << fixed6(r.conv_params_share) << ' ' << fixed6(r.fc_params_share) << ' '
            << fixed6(r.attn_params_share) << '\n';
        out << "attention " << r.attention_cycles << ' ' << r.attention_score_cycles << ' '
            << fixed6(r.attention_idle_cycles) << '\n';
        out << "bandwidth " << r.bandwidth_bytes_per_cycle << ' ' << r.stall_cycles << ' '
            << fixed6(r.effective_images_per_s) << '\n';
        out << "total " << r.totals.cycles << ' ' << r.totals.mac_ops << ' '
            << fixed6(r.total_utilization) << ' ' << r.totals.sram_weight_reads << ' '
            << r.totals.sram_input_reads << ' ' << r.totals.sram_output_writes << ' '
            << r.totals.dram_bytes << ' ' << fixed6(r.achieved_gops) << ' '
            << fixed6(r.images_per_s) << ' ' << (r.ok ? "ok" : "fail") << '\n';
        return out.str();
    }

    out << "workload: " << r.workload << "   peak " << detail::fixed6(r.peak_gops_value)
        << " GOPS @ " << r.cfg.clock_mhz << " MHz, " << r.cfg.total_macs() << " MACs\n";
    out << std::left << std::setw(5) << "idx" << std::setw(9) << "type" << std::right
        << std::setw(12) << "cycles" << std::setw(14) << "mac_ops" << std::setw(8) << "util"
        << std::setw(14) << "sram_reads" << std::setw(12) << "dram_B" << std::setw(10) << "check"
        << '\n';
    for (const auto& l : r.layers) {
        std::ostringstream util;
        util << std::fixed << std::setprecision(3) << l.utilization;
        out << std::left << std::setw(5) << l.index << std::setw(9) << l.type << std::right
            << std::setw(12) << l.stats.cycles << std::setw(14) << l.stats.mac_ops << std::setw(8)
            << util.str() << std::setw(14)
            << (l.stats.sram_weight_reads + l.stats.sram_input_reads) << std::setw(12)
            << l.stats.dram_bytes << std::setw(10) << l.check << '\n';
    }
    if (!r.layers.empty()) {
        out << "total: " << r.totals.cycles << " cycles, utilization "
            << detail::fixed6(r.total_utilization) << ", " << detail::fixed6(r.achieved_gops)
            << " GOPS, " << detail::fixed6(r.images_per_s) << " images/s\n";
        out << "flops share: conv " << detail::fixed6(r.conv_flops_share) << ", fc "
            << detail::fixed6(r.fc_flops_share) << ", attention "
            << detail::fixed6(r.attn_flops_share) << '\n';
        out << "params share: conv " << detail::fixed6(r.conv_params_share) << ", fc "
            << detail::fixed6(r.fc_params_share) << ", attention "
            << detail::fixed6(r.attn_params_share) << '\n';
        out << "attention: " << r.attention_cycles << " cycles ("
            << detail::fixed6(r.totals.cycles
                                  ? 100.0 * static_cast<double>(r.attention_cycles) /
                                        static_cast<double>(r.totals.cycles)
                                  : 0.0)
            << "% of total), score-phase idle cost "
            << detail::fixed6(r.totals.cycles ? 100.0 * r.attention_idle_cycles /
                                                    static_cast<double>(r.totals.cycles)
                                              : 0.0)
            << "% of total cycles\n";
        if (r.bandwidth_bytes_per_cycle > 0)
            out << "bandwidth " << r.bandwidth_bytes_per_cycle << " B/cycle: " << r.stall_cycles
                << " stall cycles, effective " << detail::fixed6(r.effective_images_per_s)
                << " images/s\n";
    }
    out << "status: " << (r.ok ? "ok" : "fail") << '\n';
    return out.str();
}

// Inverse of the machine form.
inline Report parse_report(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Report r;
    bool header = false;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        std::string key;
        if (!(f >> key)) continue;
        auto need = [&](bool cond) {
            if (!cond) throw std::invalid_argument("parse_report: malformed line: " + line);
        };
        if (key == "rowsim-report") {
            int version = 0;
            need(static_cast<bool>(f >> version) && version == 1);
            header = true;
        } else if (key == "workload") {
            need(static_cast<bool>(f >> r.workload));
            if (r.workload == "-") r.workload.clear();
        } else if (key == "config") {
            need(static_cast<bool>(f >> r.cfg.num_blocks >> r.cfg.rows_per_block >>
                                   r.cfg.macs_per_row >> r.cfg.clock_mhz >>
                                   r.cfg.sram_budget_bytes));
        } else if (key == "partition") {
            need(static_cast<bool>(f >> r.partition.input_bytes >> r.partition.weight_bytes >>
                                   r.partition.output_bytes));
        } else if (key == "peak_gops") {
            need(static_cast<bool>(f >> r.peak_gops_value));
        } else if (key == "check") {
            int v = 0;
            need(static_cast<bool>(f >> v));
            r.check_enabled = v != 0;
        } else if (key == "layer") {
            LayerReport l;
            need(static_cast<bool>(f >> l.index >> l.type >> l.stats.cycles >> l.stats.mac_ops >>
                                   l.utilization >> l.stats.sram_weight_reads >>
                                   l.stats.sram_input_reads >> l.stats.sram_output_writes >>
                                   l.stats.dram_bytes >> l.check));
            r.layers.push_back(std::move(l));
        } else if (key == "flops") {
            need(static_cast<bool>(f >> r.conv_flops_share >> r.fc_flops_share >>
                                   r.attn_flops_share));
        } else if (key == "params") {
            need(static_cast<bool>(f >> r.conv_params_share >> r.fc_params_share >>
                                   r.attn_params_share));
        } else if (key == "attention") {
            need(static_cast<bool>(f >> r.attention_cycles >> r.attention_score_cycles >>
                                   r.attention_idle_cycles));
        } else if (key == "bandwidth") {
            need(static_cast<bool>(f >> r.bandwidth_bytes_per_cycle >> r.stall_cycles >>
                                   r.effective_images_per_s));
        } else if (key == "total") {
            std::string status;
            need(static_cast<bool>(f >> r.totals.cycles >> r.totals.mac_ops >>
                                   r.total_utilization >> r.totals.sram_weight_reads >>
                                   r.totals.sram_input_reads >> r.totals.sram_output_writes >>
                                   r.totals.dram_bytes >> r.achieved_gops >> r.images_per_s >>
                                   status));
            r.ok = status == "ok";
        } else {
            throw std::invalid_argument("parse_report: unknown key '" + key + "'");
        }
    }
    if (!header) throw std::invalid_argument("parse_report: missing rowsim-report header");
    return r;
}

} // namespace rowsim
