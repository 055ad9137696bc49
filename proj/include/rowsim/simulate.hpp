#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "rowsim/hw_config.hpp"
#include "rowsim/layer.hpp"
#include "rowsim/oracle.hpp"
#include "rowsim/pe_array.hpp"
#include "rowsim/qtensor.hpp"
#include "rowsim/scheduler.hpp"

// Runs planned schedules against real tensors on the cycle engine and
// requantizes the drained accumulators exactly like the oracle does.
namespace rowsim {

struct LayerSimResult {
    MappingPlan plan;
    SimStats stats;
    std::vector<std::int32_t> acc; // layer accumulators (aggregation phase for attention)
    double acc_scale = 1.0;
    QTensor output;                // requantized accumulators

    // attention only
    std::vector<std::int32_t> score_acc;
    QTensor probs;                 // quantized softmax rows, concatenated per window-head
};

inline LayerSimResult simulate_conv(const Conv4x4Spec& conv, const HwConfig& cfg,
                                    const QTensor& input, const QTensor& weights,
                                    std::optional<double> out_scale = std::nullopt,
                                    std::ostream* trace = nullptr) {
    LayerSchedule ls = schedule_conv(conv, cfg);
    PeArraySim sim(cfg);
    sim.set_trace(trace);
    auto r = sim.run_segment(ls.schedule.segments.at(0), weights.data, input.data);
    LayerSimResult out;
    out.plan = ls.plan;
    out.stats = r.stats;
    out.acc = std::move(r.outputs);
    out.acc_scale = input.scale * weights.scale;
    const double s = out_scale ? *out_scale : calibrate_scale(out.acc, out.acc_scale);
    out.output = requantize(out.acc, {conv.out_h(), conv.out_w(), conv.c_out}, out.acc_scale, s);
    return out;
}

inline LayerSimResult simulate_fc(const FullyConnectedSpec& fc, const HwConfig& cfg,
                                  const QTensor& input, const QTensor& weights,
                                  std::optional<double> out_scale = std::nullopt,
                                  std::ostream* trace = nullptr) {
    LayerSchedule ls = schedule_fc(fc, cfg);
    PeArraySim sim(cfg);
    sim.set_trace(trace);
    auto r = sim.run_segment(ls.schedule.segments.at(0), weights.data, input.data);
    LayerSimResult out;
    out.plan = ls.plan;
    out.stats = r.stats;
    out.acc = std::move(r.outputs);
    out.acc_scale = input.scale * weights.scale;
    const double s = out_scale ? *out_scale : calibrate_scale(out.acc, out.acc_scale);
    if (fc.tokens * fc.c_out > 0)
        out.output = requantize(out.acc, {fc.tokens, fc.c_out}, out.acc_scale, s);
    return out;
}

// q, k, v concatenated per window-head: dims [windows*heads, tokens, head_dim].
// The score phase runs first; its accumulators go through the softmax
// post-processing unit (real arithmetic, then int8 probabilities) and the
// aggregation phase consumes the produced probability tensor.
inline LayerSimResult simulate_attention(const WindowAttentionSpec& att, const HwConfig& cfg,
                                         const QTensor& q, const QTensor& k, const QTensor& v,
                                         std::optional<double> out_scale = std::nullopt,
                                         std::ostream* trace = nullptr) {
    const std::int64_t wh = att.num_windows * att.num_heads;
    const std::int64_t t = att.tokens_per_window;
    const std::int64_t d = att.head_dim();
    const std::vector<std::int64_t> want{wh, t, d};
    if (q.dims != want || k.dims != want || v.dims != want)
        throw std::invalid_argument("simulate_attention: q/k/v must be [windows*heads, tokens, d]");

    LayerSchedule ls = schedule_attention(att, cfg);
    PeArraySim sim(cfg);
    sim.set_trace(trace);

    LayerSimResult out;
    out.plan = ls.plan;
    auto score = sim.run_segment(ls.schedule.segments.at(0), q.data, k.data);
    out.score_acc = std::move(score.outputs);

    // softmax per window-head on the simulated score accumulators
    if (wh * t > 0 && d > 0) {
        out.probs = QTensor({wh, t, t}, oracle::kAttentionProbScale);
        std::vector<std::int32_t> window(static_cast<std::size_t>(t * t));
        for (std::int64_t i = 0; i < wh; ++i) {
            std::copy(out.score_acc.begin() + i * t * t, out.score_acc.begin() + (i + 1) * t * t,
                      window.begin());
            const QTensor p =
                oracle::attention_probs_from_scores(window, t, q.scale * k.scale, d);
            std::copy(p.data.begin(), p.data.end(), out.probs.data.begin() + i * t * t);
        }
    }

    auto agg = sim.run_segment(ls.schedule.segments.at(1), v.data, out.probs.data);
    out.acc = std::move(agg.outputs);
    out.acc_scale = oracle::kAttentionProbScale * v.scale;
    out.stats = sim.stats();
    const double s = out_scale ? *out_scale : calibrate_scale(out.acc, out.acc_scale);
    if (wh * t * d > 0) out.output = requantize(out.acc, {wh, t, d}, out.acc_scale, s);
    return out;
}

inline LayerSimResult simulate_layer(const LayerDescriptor& desc, const HwConfig& cfg,
                                     const QTensor& a, const QTensor& b, const QTensor& c,
                                     std::optional<double> out_scale = std::nullopt,
                                     std::ostream* trace = nullptr) {
    if (auto* conv = std::get_if<Conv4x4Spec>(&desc.op))
        return simulate_conv(*conv, cfg, a, b, out_scale, trace);
    if (auto* fc = std::get_if<FullyConnectedSpec>(&desc.op))
        return simulate_fc(*fc, cfg, a, b, out_scale, trace);
    return simulate_attention(std::get<WindowAttentionSpec>(desc.op), cfg, a, b, c, out_scale,
                              trace);
}

} // namespace rowsim
