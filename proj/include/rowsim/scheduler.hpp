#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rowsim/hw_config.hpp"
#include "rowsim/layer.hpp"
#include "rowsim/schedule.hpp"

// Lowers layer descriptors onto the array. Every mapping decomposes its layer
// into 4-wide dot products, one per PE row per cycle, with weights broadcast
// down each block.
namespace rowsim {

class UnsupportedMappingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TileLoops {
    std::int64_t spatial_groups = 0;
    std::int64_t reduction_tiles = 0;
    std::int64_t output_channels = 0;
};

struct MappingPlan {
    std::string layer;
    TileLoops tiles;
    int blocks_used = 0; // score phase for attention (the occupancy that matters)
    std::int64_t analytic_cycles = 0;
    std::int64_t analytic_macs_issued = 0;
    double analytic_utilization = 0.0;

    // attention-only detail
    std::int64_t score_cycles = 0;     // per window-head
    std::int64_t aggregate_cycles = 0; // per window-head
    int aggregate_blocks_used = 0;
};

struct LayerSchedule {
    MappingPlan plan;
    TileSchedule schedule;
};

namespace detail {
inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

inline void finish_plan(MappingPlan& plan, const HwConfig& cfg, const TileSchedule& sched) {
    plan.analytic_macs_issued = sched.total_issued_macs();
    if (plan.analytic_cycles > 0)
        plan.analytic_utilization =
            static_cast<double>(plan.analytic_macs_issued) /
            (static_cast<double>(cfg.total_macs()) * static_cast<double>(plan.analytic_cycles));
}
} // namespace detail

// Patch-embedding convolution. Each input channel's kernel rows occupy four
// blocks (lane = kx), so the mapping needs exactly 4 * c_in blocks of 4 MACs;
// at the default geometry that is the RGB first layer and nothing else.
inline LayerSchedule schedule_conv(const Conv4x4Spec& conv, const HwConfig& cfg) {
    validate_engine_config(cfg);
    if (conv.h_in % 4 != 0 || conv.w_in % 4 != 0)
        throw UnsupportedMappingError("conv4x4: input extent not divisible by 4");
    if (cfg.macs_per_row != 4 ||
        conv.c_in * 4 != static_cast<std::int64_t>(cfg.num_blocks))
        throw UnsupportedMappingError(
            "conv4x4: mapping requires 4*c_in blocks of 4 MACs (c_in=3 at the default "
            "geometry); got c_in=" + std::to_string(conv.c_in));

    Phase phase;
    phase.kind = PhaseKind::Conv4x4;
    phase.blocks = cfg.num_blocks;
    phase.rows = cfg.rows_per_block;
    phase.macs = cfg.macs_per_row;
    phase.tokens = conv.positions();
    phase.c_out = conv.c_out;
    phase.out_w = conv.out_w();
    phase.in_w = conv.w_in * conv.c_in;
    phase.conv_cin = conv.c_in;

    LayerSchedule ls;
    ls.schedule.label = "conv4x4";
    Segment seg;
    seg.output_size = phase.cycles() > 0 ? conv.positions() * conv.c_out : 0;
    if (phase.cycles() > 0) seg.phases.push_back(phase);
    ls.schedule.segments.push_back(std::move(seg));

    ls.plan.layer = "conv4x4";
    ls.plan.tiles = {phase.spatial_groups(), 1, conv.c_out};
    ls.plan.blocks_used = cfg.num_blocks;
    ls.plan.analytic_cycles = conv.c_out * detail::ceil_div(conv.positions(), cfg.rows_per_block);
    if (conv.positions() == 0) ls.plan.analytic_cycles = 0;
    detail::finish_plan(ls.plan, cfg, ls.schedule);
    return ls;
}

// Fully connected layer: input channels tile across all blocks (48 lanes at
// the default geometry), tokens group over the rows, output channels iterate
// outermost. Ragged tiles are zero padded.
inline LayerSchedule schedule_fc(const FullyConnectedSpec& fc, const HwConfig& cfg) {
    validate_engine_config(cfg);
    const std::int64_t lanes = cfg.reduction_lanes();

    Phase phase;
    phase.kind = PhaseKind::FcTile;
    phase.blocks = cfg.num_blocks;
    phase.rows = cfg.rows_per_block;
    phase.macs = cfg.macs_per_row;
    phase.tokens = fc.tokens;
    phase.c_in = fc.c_in;
    phase.c_out = fc.c_out;

    const bool empty = fc.tokens == 0 || fc.c_in == 0 || fc.c_out == 0;
    LayerSchedule ls;
    ls.schedule.label = "fc";
    Segment seg;
    seg.output_size = empty ? 0 : fc.tokens * fc.c_out;
    if (phase.cycles() > 0) seg.phases.push_back(phase);
    ls.schedule.segments.push_back(std::move(seg));

    ls.plan.layer = "fc";
    ls.plan.tiles = {empty ? 0 : detail::ceil_div(fc.tokens, cfg.rows_per_block),
                     empty ? 0 : detail::ceil_div(fc.c_in, lanes), fc.c_out};
    ls.plan.blocks_used = empty ? 0
                                : static_cast<int>(std::min<std::int64_t>(
                                      cfg.num_blocks, detail::ceil_div(fc.c_in, cfg.macs_per_row)));
    ls.plan.analytic_cycles = empty ? 0
                                    : detail::ceil_div(fc.tokens, cfg.rows_per_block) *
                                          detail::ceil_div(fc.c_in, lanes) * fc.c_out;
    detail::finish_plan(ls.plan, cfg, ls.schedule);
    return ls;
}

// Window attention, per head per window. The score phase treats each Q row
// as the broadcast weight and streams K rows seven at a time, so one Q row of
// a 49-token window costs exactly seven cycles on ceil(d/4) blocks. The
// aggregation phase mirrors it with V columns as the broadcast weights and
// the probability rows as inputs; its reduction runs over tokens and tiles
// across all blocks like an FC layer.
inline constexpr int kAttentionScoreBlockCap = 8;

inline LayerSchedule schedule_attention(const WindowAttentionSpec& att, const HwConfig& cfg) {
    validate_engine_config(cfg);
    if (att.num_heads < 1 || att.embed_dim % att.num_heads != 0)
        throw std::invalid_argument("attention: embed_dim must divide into num_heads");
    const std::int64_t d = att.embed_dim / att.num_heads;
    const std::int64_t t = att.tokens_per_window;
    const int cap = std::min(cfg.num_blocks, kAttentionScoreBlockCap);
    const std::int64_t score_blocks = detail::ceil_div(d, cfg.macs_per_row);
    if (d > static_cast<std::int64_t>(cap) * cfg.macs_per_row)
        throw UnsupportedMappingError(
            "attention: head_dim " + std::to_string(d) + " exceeds " + std::to_string(cap) +
            " blocks of " + std::to_string(cfg.macs_per_row) + " MACs");

    LayerSchedule ls;
    ls.schedule.label = "wmsa";
    Segment score, agg;
    score.weight_name = "q";
    score.input_name = "k";
    agg.weight_name = "v";
    agg.input_name = "probs";
    const std::int64_t wh = att.num_windows * att.num_heads;
    const bool empty = wh == 0 || t == 0 || d == 0;
    score.output_size = empty ? 0 : wh * t * t;
    agg.output_size = empty ? 0 : wh * t * d;

    if (t > 0 && d > 0) {
        for (std::int64_t i = 0; i < wh; ++i) {
            Phase sp;
            sp.kind = PhaseKind::AttnScore;
            sp.blocks = static_cast<int>(score_blocks);
            sp.rows = cfg.rows_per_block;
            sp.macs = cfg.macs_per_row;
            sp.tokens = t;
            sp.head_dim = d;
            sp.weight_off = i * t * d;  // Q
            sp.input_off = i * t * d;   // K
            sp.output_off = i * t * t;  // scores
            score.phases.push_back(sp);

            Phase ap;
            ap.kind = PhaseKind::AttnAggregate;
            ap.blocks = cfg.num_blocks;
            ap.rows = cfg.rows_per_block;
            ap.macs = cfg.macs_per_row;
            ap.tokens = t;
            ap.head_dim = d;
            ap.weight_off = i * t * d;  // V
            ap.input_off = i * t * t;   // probabilities
            ap.output_off = i * t * d;  // aggregated head output
            agg.phases.push_back(ap);
        }
    }

    const std::int64_t score_cycles = t * detail::ceil_div(t, cfg.rows_per_block);
    const std::int64_t agg_cycles = d * detail::ceil_div(t, cfg.rows_per_block) *
                                    detail::ceil_div(t, cfg.reduction_lanes());
    ls.schedule.segments.push_back(std::move(score));
    ls.schedule.segments.push_back(std::move(agg));

    ls.plan.layer = "wmsa";
    ls.plan.tiles = {detail::ceil_div(t, cfg.rows_per_block),
                     detail::ceil_div(t, cfg.reduction_lanes()), d};
    ls.plan.blocks_used = (t > 0 && d > 0) ? static_cast<int>(score_blocks) : 0;
    ls.plan.score_cycles = (t > 0 && d > 0) ? score_cycles : 0;
    ls.plan.aggregate_cycles = (t > 0 && d > 0) ? agg_cycles : 0;
    ls.plan.aggregate_blocks_used =
        (t > 0 && d > 0) ? static_cast<int>(std::min<std::int64_t>(
                               cfg.num_blocks, detail::ceil_div(t, cfg.macs_per_row)))
                         : 0;
    ls.plan.analytic_cycles = wh * (ls.plan.score_cycles + ls.plan.aggregate_cycles);
    detail::finish_plan(ls.plan, cfg, ls.schedule);
    return ls;
}

inline LayerSchedule schedule_layer(const LayerDescriptor& desc, const HwConfig& cfg) {
    desc.validate();
    if (auto* c = std::get_if<Conv4x4Spec>(&desc.op)) return schedule_conv(*c, cfg);
    if (auto* f = std::get_if<FullyConnectedSpec>(&desc.op)) return schedule_fc(*f, cfg);
    return schedule_attention(std::get<WindowAttentionSpec>(desc.op), cfg);
}

// Closed-form cycle count; always equals the generated schedule's length.
inline std::int64_t analytic_cycles(const LayerDescriptor& desc, const HwConfig& cfg) {
    desc.validate();
    validate_engine_config(cfg);
    using detail::ceil_div;
    if (auto* c = std::get_if<Conv4x4Spec>(&desc.op)) {
        if (cfg.macs_per_row != 4 || c->c_in * 4 != static_cast<std::int64_t>(cfg.num_blocks))
            throw UnsupportedMappingError("conv4x4: unsupported mapping");
        if (c->positions() == 0 || c->c_out == 0) return 0;
        return c->c_out * ceil_div(c->positions(), cfg.rows_per_block);
    }
    if (auto* f = std::get_if<FullyConnectedSpec>(&desc.op)) {
        if (f->tokens == 0 || f->c_in == 0 || f->c_out == 0) return 0;
        return ceil_div(f->tokens, cfg.rows_per_block) * ceil_div(f->c_in, cfg.reduction_lanes()) *
               f->c_out;
    }
    const auto& w = std::get<WindowAttentionSpec>(desc.op);
    const std::int64_t d = w.embed_dim / w.num_heads;
    const std::int64_t t = w.tokens_per_window;
    const int cap = std::min(cfg.num_blocks, kAttentionScoreBlockCap);
    if (d > static_cast<std::int64_t>(cap) * cfg.macs_per_row)
        throw UnsupportedMappingError("attention: head_dim exceeds the score-phase block cap");
    if (w.num_windows == 0 || t == 0 || d == 0) return 0;
    const std::int64_t score = t * ceil_div(t, cfg.rows_per_block);
    const std::int64_t agg =
        d * ceil_div(t, cfg.rows_per_block) * ceil_div(t, cfg.reduction_lanes());
    return w.num_windows * w.num_heads * (score + agg);
}

// Workload analytics: FLOPs (2 per MAC) and parameter distribution across the
// three layer families.
struct FlopsShare {
    std::int64_t flops = 0;
    std::int64_t params = 0;
    double flops_share = 0.0;
    double params_share = 0.0;
};

struct FlopsReport {
    FlopsShare conv, fc, attention;
    std::int64_t total_flops = 0;
    std::int64_t total_params = 0;
};

inline FlopsReport flops_report(const std::vector<LayerDescriptor>& model) {
    if (model.empty()) throw std::invalid_argument("flops_report: empty model");
    FlopsReport r;
    for (const auto& d : model) {
        const std::int64_t flops = 2 * layer_macs(d);
        const std::int64_t params = layer_params(d);
        FlopsShare& s = std::holds_alternative<Conv4x4Spec>(d.op) ? r.conv
                        : std::holds_alternative<FullyConnectedSpec>(d.op) ? r.fc
                                                                           : r.attention;
        s.flops += flops;
        s.params += params;
        r.total_flops += flops;
        r.total_params += params;
    }
    for (FlopsShare* s : {&r.conv, &r.fc, &r.attention}) {
        if (r.total_flops > 0)
            s->flops_share = static_cast<double>(s->flops) / static_cast<double>(r.total_flops);
        if (r.total_params > 0)
            s->params_share = static_cast<double>(s->params) / static_cast<double>(r.total_params);
    }
    return r;
}

} // namespace rowsim
