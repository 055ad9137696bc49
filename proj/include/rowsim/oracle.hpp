#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rowsim/layer.hpp"
#include "rowsim/qtensor.hpp"

// Schedule-free reference numerics for every layer family. The cycle engine
// must reproduce these accumulators bit for bit: integer sums are order
// independent, so any disagreement is a real dataflow bug, not noise.
namespace rowsim::oracle {

// Pre-requantization partial sums plus the requantized int8 view.
struct OracleOutput {
    std::vector<std::int64_t> dims;   // of the accumulator tensor
    std::vector<std::int32_t> acc;    // row-major 32-bit sums
    double acc_scale = 1.0;           // real value of one accumulator LSB
    QTensor tensor;                   // requantize(acc) at tensor.scale
};

inline void requantize_into(OracleOutput& out, std::optional<double> out_scale) {
    const double s = out_scale ? *out_scale : calibrate_scale(out.acc, out.acc_scale);
    out.tensor = requantize(out.acc, out.dims, out.acc_scale, s);
}

// ---------------------------------------------------------------------------
// Row softmax, numerically stabilized by max subtraction.
inline std::vector<double> softmax_row(const std::vector<double>& s) {
    if (s.empty()) throw std::invalid_argument("softmax_row: empty row");
    double m = s[0];
    for (double v : s) {
        if (!std::isfinite(v)) throw std::invalid_argument("softmax_row: non-finite entry");
        m = std::max(m, v);
    }
    std::vector<double> out(s.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = std::exp(s[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

// ---------------------------------------------------------------------------
// GELU in its exact erf form, realized for int8 as a 256-entry table.
inline double gelu_ref(double x) {
    return x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
}

using GeluTable = std::array<std::int8_t, 256>;

inline GeluTable build_gelu_table(double scale_in, double scale_out) {
    if (!(scale_in > 0.0) || !(scale_out > 0.0))
        throw std::invalid_argument("build_gelu_table: scales must be positive");
    GeluTable table{};
    for (int i = -128; i <= 127; ++i)
        table[static_cast<std::size_t>(i + 128)] =
            saturate_round_int8(gelu_ref(i * scale_in) / scale_out);
    return table;
}

inline std::int8_t gelu_lut(std::int8_t x, const GeluTable& table) {
    return table[static_cast<std::size_t>(static_cast<int>(x) + 128)];
}

// ---------------------------------------------------------------------------
// Layer norm over one quantized row: dequantize, normalize with population
// variance, apply the affine transform, requantize.
inline constexpr double kLayerNormEps = 1e-5;

inline std::vector<std::int8_t> layernorm_row(const std::vector<std::int8_t>& x,
                                              double scale_in,
                                              const std::vector<double>& gamma,
                                              const std::vector<double>& beta,
                                              double scale_out,
                                              double eps = kLayerNormEps) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("layernorm_row: row length must be >= 2");
    if (gamma.size() != n || beta.size() != n)
        throw std::invalid_argument("layernorm_row: gamma/beta length mismatch");
    double mean = 0.0;
    for (auto v : x) mean += v * scale_in;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (auto v : x) {
        const double d = v * scale_in - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    std::vector<std::int8_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = (x[i] * scale_in - mean) * inv * gamma[i] + beta[i];
        out[i] = saturate_round_int8(y / scale_out);
    }
    return out;
}

// Pre-requantization values, for properties about the normalized row itself.
inline std::vector<double> layernorm_row_real(const std::vector<std::int8_t>& x,
                                              double scale_in,
                                              const std::vector<double>& gamma,
                                              const std::vector<double>& beta,
                                              double eps = kLayerNormEps) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("layernorm_row: row length must be >= 2");
    double mean = 0.0;
    for (auto v : x) mean += v * scale_in;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (auto v : x) {
        const double d = v * scale_in - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (x[i] * scale_in - mean) * inv * gamma[i] + beta[i];
    return out;
}

// ---------------------------------------------------------------------------
// Residual add: dequantize both operands, add, requantize. Defaults the
// output scale to the coarser input scale so x + 0 reproduces x exactly.
inline QTensor residual_add(const QTensor& a, const QTensor& b,
                            std::optional<double> out_scale = std::nullopt) {
    if (a.dims != b.dims) throw std::invalid_argument("residual_add: dims mismatch");
    const double s = out_scale ? *out_scale : std::max(a.scale, b.scale);
    QTensor out(a.dims, s);
    for (std::int64_t i = 0; i < a.size(); ++i)
        out.data[static_cast<std::size_t>(i)] =
            saturate_round_int8((a.dequant(i) + b.dequant(i)) / s);
    return out;
}

// ---------------------------------------------------------------------------
// 4x4 stride-4 convolution. input dims [h, w, c_in], weights
// [c_out, 4, 4, c_in], output accumulators [h/4, w/4, c_out].
inline OracleOutput oracle_conv4x4(const QTensor& input, const QTensor& weights,
                                   std::optional<double> out_scale = std::nullopt) {
    if (input.dims.size() != 3) throw std::invalid_argument("oracle_conv4x4: input must be [h,w,c]");
    if (weights.dims.size() != 4 || weights.dims[1] != 4 || weights.dims[2] != 4)
        throw std::invalid_argument("oracle_conv4x4: weights must be [c_out,4,4,c]");
    const std::int64_t h = input.dims[0], w = input.dims[1], c = input.dims[2];
    if (weights.dims[3] != c) throw std::invalid_argument("oracle_conv4x4: channel mismatch");
    if (h % 4 != 0 || w % 4 != 0)
        throw std::invalid_argument("oracle_conv4x4: h and w must be divisible by 4");
    const std::int64_t oh = h / 4, ow = w / 4, co = weights.dims[0];

    OracleOutput out;
    out.dims = {oh, ow, co};
    out.acc.assign(static_cast<std::size_t>(oh * ow * co), 0);
    out.acc_scale = input.scale * weights.scale;
    for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t x = 0; x < ow; ++x)
            for (std::int64_t o = 0; o < co; ++o) {
                std::int32_t acc = 0;
                for (std::int64_t ky = 0; ky < 4; ++ky)
                    for (std::int64_t kx = 0; kx < 4; ++kx)
                        for (std::int64_t ci = 0; ci < c; ++ci) {
                            const std::int64_t ii = ((4 * y + ky) * w + (4 * x + kx)) * c + ci;
                            const std::int64_t wi = ((o * 4 + ky) * 4 + kx) * c + ci;
                            acc += static_cast<std::int32_t>(input.data[ii]) *
                                   static_cast<std::int32_t>(weights.data[wi]);
                        }
                out.acc[static_cast<std::size_t>((y * ow + x) * co + o)] = acc;
            }
    requantize_into(out, out_scale);
    return out;
}

// ---------------------------------------------------------------------------
// Fully connected layer: input [tokens, c_in], weights [c_out, c_in],
// accumulators [tokens, c_out]. GELU, when requested, applies to the
// requantized output through the int8 table.
inline OracleOutput oracle_fc(const QTensor& input, const QTensor& weights,
                              Activation act = Activation::None,
                              std::optional<double> out_scale = std::nullopt) {
    if (input.dims.size() != 2 || weights.dims.size() != 2)
        throw std::invalid_argument("oracle_fc: input [tokens,c_in], weights [c_out,c_in]");
    const std::int64_t tokens = input.dims[0], cin = input.dims[1], cout = weights.dims[0];
    if (weights.dims[1] != cin) throw std::invalid_argument("oracle_fc: inner dims mismatch");

    OracleOutput out;
    out.dims = {tokens, cout};
    out.acc.assign(static_cast<std::size_t>(tokens * cout), 0);
    out.acc_scale = input.scale * weights.scale;
    for (std::int64_t t = 0; t < tokens; ++t)
        for (std::int64_t o = 0; o < cout; ++o) {
            std::int32_t acc = 0;
            for (std::int64_t k = 0; k < cin; ++k)
                acc += static_cast<std::int32_t>(input.data[t * cin + k]) *
                       static_cast<std::int32_t>(weights.data[o * cin + k]);
            out.acc[static_cast<std::size_t>(t * cout + o)] = acc;
        }
    requantize_into(out, out_scale);
    if (act == Activation::Gelu) {
        const GeluTable table = build_gelu_table(out.tensor.scale, out.tensor.scale);
        for (auto& v : out.tensor.data) v = gelu_lut(v, table);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single-head window attention. Scores and aggregation are integer matmuls;
// scaling by 1/sqrt(d) and the softmax run in real arithmetic between them,
// with the probability matrix requantized to int8 (scale 1/127, probabilities
// live in [0, 1]) before it re-enters the integer domain.
inline constexpr double kAttentionProbScale = 1.0 / 127.0;

struct AttentionOracle {
    std::vector<std::int32_t> score_acc;  // [tokens, tokens], Q·K^T sums
    std::vector<double> probs;            // row softmax of scaled scores
    QTensor probs_q;                      // probs quantized at 1/127
    OracleOutput output;                  // aggregation (A·V) accumulators + tensor
};

// Softmax + requantization of a finished score accumulator tensor. Shared by
// the oracle and by the simulated pipeline, which hands over its own
// (bit-identical) score accumulators.
inline QTensor attention_probs_from_scores(const std::vector<std::int32_t>& score_acc,
                                           std::int64_t tokens,
                                           double score_acc_scale,
                                           std::int64_t head_dim) {
    if (head_dim < 1) throw std::invalid_argument("attention: head_dim must be >= 1");
    const double scale = score_acc_scale / std::sqrt(static_cast<double>(head_dim));
    QTensor probs_q({tokens, tokens}, kAttentionProbScale);
    std::vector<double> row(static_cast<std::size_t>(tokens));
    for (std::int64_t i = 0; i < tokens; ++i) {
        for (std::int64_t j = 0; j < tokens; ++j)
            row[static_cast<std::size_t>(j)] =
                static_cast<double>(score_acc[static_cast<std::size_t>(i * tokens + j)]) * scale;
        const std::vector<double> p = softmax_row(row);
        for (std::int64_t j = 0; j < tokens; ++j)
            probs_q.data[static_cast<std::size_t>(i * tokens + j)] =
                saturate_round_int8(p[static_cast<std::size_t>(j)] / kAttentionProbScale);
    }
    return probs_q;
}

inline AttentionOracle oracle_attention_window(const QTensor& q, const QTensor& k,
                                               const QTensor& v,
                                               std::optional<double> out_scale = std::nullopt) {
    if (q.dims.size() != 2 || q.dims != k.dims || q.dims != v.dims)
        throw std::invalid_argument("oracle_attention_window: q,k,v must share dims [tokens,d]");
    const std::int64_t tokens = q.dims[0], d = q.dims[1];
    if (tokens < 1) throw std::invalid_argument("oracle_attention_window: tokens must be >= 1");
    if (d < 1) throw std::invalid_argument("oracle_attention_window: d must be >= 1");

    AttentionOracle r;
    r.score_acc.assign(static_cast<std::size_t>(tokens * tokens), 0);
    for (std::int64_t i = 0; i < tokens; ++i)
        for (std::int64_t j = 0; j < tokens; ++j) {
            std::int32_t acc = 0;
            for (std::int64_t e = 0; e < d; ++e)
                acc += static_cast<std::int32_t>(q.data[i * d + e]) *
                       static_cast<std::int32_t>(k.data[j * d + e]);
            r.score_acc[static_cast<std::size_t>(i * tokens + j)] = acc;
        }

    const double score_scale = q.scale * k.scale / std::sqrt(static_cast<double>(d));
    r.probs.assign(static_cast<std::size_t>(tokens * tokens), 0.0);
    std::vector<double> row(static_cast<std::size_t>(tokens));
    for (std::int64_t i = 0; i < tokens; ++i) {
        for (std::int64_t j = 0; j < tokens; ++j)
            row[static_cast<std::size_t>(j)] =
                static_cast<double>(r.score_acc[static_cast<std::size_t>(i * tokens + j)]) *
                score_scale;
        const std::vector<double> p = softmax_row(row);
        for (std::int64_t j = 0; j < tokens; ++j)
            r.probs[static_cast<std::size_t>(i * tokens + j)] = p[static_cast<std::size_t>(j)];
    }
    r.probs_q = attention_probs_from_scores(r.score_acc, tokens, q.scale * k.scale, d);

    r.output.dims = {tokens, d};
    r.output.acc.assign(static_cast<std::size_t>(tokens * d), 0);
    r.output.acc_scale = r.probs_q.scale * v.scale;
    for (std::int64_t i = 0; i < tokens; ++i)
        for (std::int64_t e = 0; e < d; ++e) {
            std::int32_t acc = 0;
            for (std::int64_t j = 0; j < tokens; ++j)
                acc += static_cast<std::int32_t>(r.probs_q.data[i * tokens + j]) *
                       static_cast<std::int32_t>(v.data[j * d + e]);
            r.output.acc[static_cast<std::size_t>(i * d + e)] = acc;
        }
    requantize_into(r.output, out_scale);
    return r;
}

// im2col unrolling of 4x4 stride-4 patches: [positions, 48*...] rows that let
// the convolution run through oracle_fc for the cross-check property.
inline QTensor im2col_patches(const QTensor& input) {
    if (input.dims.size() != 3) throw std::invalid_argument("im2col_patches: input must be [h,w,c]");
    const std::int64_t h = input.dims[0], w = input.dims[1], c = input.dims[2];
    const std::int64_t oh = h / 4, ow = w / 4, patch = 16 * c;
    QTensor out({oh * ow, patch}, input.scale);
    std::int64_t row = 0;
    for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t x = 0; x < ow; ++x, ++row) {
            std::int64_t col = 0;
            for (std::int64_t ky = 0; ky < 4; ++ky)
                for (std::int64_t kx = 0; kx < 4; ++kx)
                    for (std::int64_t ci = 0; ci < c; ++ci, ++col)
                        out.data[static_cast<std::size_t>(row * patch + col)] =
                            input.data[static_cast<std::size_t>(
                                ((4 * y + ky) * w + (4 * x + kx)) * c + ci)];
        }
    return out;
}

} // namespace rowsim::oracle
