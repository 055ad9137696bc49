#include <catch2/catch_amalgamated.hpp>

#include "rowsim/memsys.hpp"
#include "rowsim/simulate.hpp"

using namespace rowsim;

TEST_CASE("check_partition") {
    HwConfig cfg; // 149 KiB budget
    SECTION("the default split fills the budget exactly") {
        BufferPartition p; // 56 + 72 + 21 KiB
        REQUIRE(p.total() == 149 * 1024);
        REQUIRE(check_partition(p, cfg).ok);
    }
    SECTION("empty partition fits") {
        REQUIRE(check_partition(BufferPartition{0, 0, 0}, cfg).ok);
    }
    SECTION("200 KiB does not fit") {
        const auto c = check_partition(BufferPartition{100 * 1024, 100 * 1024, 0}, cfg);
        REQUIRE_FALSE(c.ok);
        REQUIRE(c.detail.find("exceeds") != std::string::npos);
    }
    SECTION("negative sizes are a violation") {
        REQUIRE_FALSE(check_partition(BufferPartition{-1, 0, 0}, cfg).ok);
    }
}

TEST_CASE("residency_plan") {
    BufferPartition p;
    SECTION("small FC weights stay resident and load once") {
        const auto plan = residency_plan(make_fc(7, 96, 96), p);
        REQUIRE(plan.weight_chunk_loads == 1);
        REQUIRE(plan.input_resident);
        // 9216 weight bytes, 672 input bytes in; 672 output bytes out
        REQUIRE(plan.dram_bytes_in == 9216 + 672);
        REQUIRE(plan.dram_bytes_out == 672);
    }
    SECTION("zero-token layer has an empty plan") {
        const auto plan = residency_plan(make_fc(0, 96, 96), p);
        REQUIRE(plan.weight_chunk_loads == 0);
        REQUIRE(plan.dram_total() == 0);
    }
    SECTION("oversized weights stream in buffer-sized chunks") {
        // 589824 weight bytes over a 72 KiB buffer -> 8 chunk loads
        const auto plan = residency_plan(make_fc(3136, 768, 768), p);
        REQUIRE(plan.weight_chunk_loads == 8);
        REQUIRE_FALSE(plan.input_resident); // 2.4 MB of activations
        REQUIRE(plan.input_passes == 8);
        REQUIRE(plan.dram_bytes_in == 589824 + 8LL * 3136 * 768);
        REQUIRE(plan.dram_bytes_out == 3136LL * 768);
    }
    SECTION("a tile that cannot fit names the offending buffer") {
        BufferPartition tiny{64, 64, 64};
        REQUIRE_THROWS_MATCHES(
            residency_plan(make_fc(7, 768, 8), tiny), CapacityError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("weight buffer")));
        BufferPartition no_input{10 * 1024, 72 * 1024, 1024};
        // 90*32 + 90*90 = 10980 B of K plus probability rows > 10 KiB
        REQUIRE_THROWS_MATCHES(
            residency_plan(make_wmsa(1, 90, 32, 1), no_input), CapacityError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("input buffer")));
    }
    SECTION("attention windows are tiny and always resident") {
        const auto plan = residency_plan(make_wmsa(64, 49, 96, 3), p);
        REQUIRE(plan.weight_chunk_loads == 1);
        REQUIRE(plan.dram_bytes_in == 3LL * 64 * 3 * 49 * 32);
        REQUIRE(plan.dram_bytes_out == 64LL * 3 * 49 * 32);
    }
}

TEST_CASE("ledger totals equal engine-counted accesses") {
    HwConfig cfg;
    TrafficLedger ledger;
    Int8Stream stream(900);

    SimStats manual_total;
    for (int i = 0; i < 3; ++i) {
        const std::int64_t t = 7 * (i + 1), k = 48, n = 5;
        const QTensor in = stream.tensor({t, k}, 0.05);
        const QTensor w = stream.tensor({n, k}, 0.05);
        const auto sim = simulate_fc(FullyConnectedSpec{t, k, n}, cfg, in, w);
        ledger.add_sram(sim.stats);
        manual_total += sim.stats;
    }
    REQUIRE(ledger.sram_weight_reads == manual_total.sram_weight_reads);
    REQUIRE(ledger.sram_input_reads == manual_total.sram_input_reads);
    REQUIRE(ledger.sram_output_writes == manual_total.sram_output_writes);
}

TEST_CASE("broadcast reuse divides weight reads by the active rows") {
    HwConfig cfg;
    Int8Stream stream(901);
    // full 7-row activity: weight reads = mac_ops / 7
    const QTensor in = stream.tensor({21, 96}, 0.05);
    const QTensor w = stream.tensor({4, 96}, 0.05);
    const auto sim = simulate_fc(FullyConnectedSpec{21, 96, 4}, cfg, in, w);
    REQUIRE(sim.stats.sram_weight_reads * 7 == sim.stats.mac_ops);

    // one active row: no reuse, reads equal issued MACs
    const QTensor in1 = stream.tensor({1, 96}, 0.05);
    const auto sim1 = simulate_fc(FullyConnectedSpec{1, 96, 4}, cfg, in1, w);
    REQUIRE(sim1.stats.sram_weight_reads == sim1.stats.mac_ops);
}
