// Command-line front end: build or load a workload, run it through the
// scheduler and cycle engine, optionally verify every layer against the
// reference numerics, and print a report.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "rowsim/rowsim.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rowsim: cycle-accurate model of a row-wise vision-transformer accelerator"};

    std::string workload_arg = "swin-t";
    int clock_mhz = 600;
    std::string partition_arg;
    bool check = false;
    std::string trace_path;
    std::string format = "table";
    std::uint64_t seed = 1;
    std::string bandwidth = "ideal";

    app.add_option("--workload", workload_arg,
                   "'swin-t' or a workload file (see README for the format)");
    app.add_option("--clock-mhz", clock_mhz, "clock frequency in MHz");
    app.add_option("--partition", partition_arg,
                   "SRAM split as <input,weight,output> bytes (default 57344,73728,21504)");
    app.add_flag("--check", check, "verify simulated accumulators against the reference model");
    app.add_option("--trace", trace_path, "write a per-cycle, per-block trace to this file");
    app.add_option("--format", format, "report format: table | machine")
        ->check(CLI::IsMember({"table", "machine"}));
    app.add_option("--seed", seed, "seed for generated tensors");
    app.add_option("--bandwidth", bandwidth,
                   "off-chip bytes per cycle, or 'ideal' (default) for no cap");
    CLI11_PARSE(app, argc, argv);

    try {
        rowsim::HwConfig cfg;
        cfg.clock_mhz = clock_mhz;
        cfg.validate();

        rowsim::BufferPartition partition;
        if (!partition_arg.empty()) {
            std::int64_t in_b = 0, w_b = 0, out_b = 0;
            char c1 = 0, c2 = 0;
            std::istringstream p(partition_arg);
            if (!(p >> in_b >> c1 >> w_b >> c2 >> out_b) || c1 != ',' || c2 != ',') {
                std::cerr << "bad --partition, expected <input,weight,output> bytes\n";
                return 2;
            }
            partition = rowsim::BufferPartition{in_b, w_b, out_b};
        }

        rowsim::Workload workload;
        if (workload_arg == "swin-t") {
            workload = rowsim::build_swin_t();
        } else {
            workload = rowsim::load_workload_file(workload_arg);
        }

        rowsim::RunOptions opt;
        opt.check = check;
        opt.seed = seed;
        if (bandwidth != "ideal") {
            opt.bandwidth_bytes_per_cycle = std::stoll(bandwidth);
            if (opt.bandwidth_bytes_per_cycle <= 0) {
                std::cerr << "bad --bandwidth, expected a positive byte count or 'ideal'\n";
                return 2;
            }
        }
        std::ofstream trace;
        if (!trace_path.empty()) {
            trace.open(trace_path);
            if (!trace) {
                std::cerr << "cannot open trace file: " << trace_path << '\n';
                return 2;
            }
            opt.trace = &trace;
        }

        const rowsim::Report report = rowsim::run(workload, cfg, partition, opt);
        std::cout << emit_report(report, format == "machine" ? rowsim::ReportFormat::Machine
                                                             : rowsim::ReportFormat::Table);
        return report.ok ? 0 : 1;
    } catch (const rowsim::CapacityError& e) {
        std::cerr << "capacity violation: " << e.what() << '\n';
        return 1;
    } catch (const rowsim::UnsupportedMappingError& e) {
        std::cerr << "unsupported mapping: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
