#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rowsim {

// Patch-embedding convolution: kernel and stride fixed at 4.
struct Conv4x4Spec {
    std::int64_t h_in = 0;
    std::int64_t w_in = 0;
    std::int64_t c_in = 0;
    std::int64_t c_out = 0;

    std::int64_t out_h() const { return h_in / 4; }
    std::int64_t out_w() const { return w_in / 4; }
    std::int64_t positions() const { return out_h() * out_w(); }
    // Reduction length of one output element.
    std::int64_t patch_size() const { return 4 * 4 * c_in; }
};

enum class Activation { None, Gelu };

struct FullyConnectedSpec {
    std::int64_t tokens = 0;
    std::int64_t c_in = 0;
    std::int64_t c_out = 0;
    Activation activation = Activation::None;
};

// Window multi-head self-attention over fixed-size token windows.
struct WindowAttentionSpec {
    std::int64_t num_windows = 0;
    std::int64_t tokens_per_window = 0;
    std::int64_t embed_dim = 0;
    std::int64_t num_heads = 0;

    std::int64_t head_dim() const { return embed_dim / num_heads; }
};

struct LayerDescriptor {
    std::variant<Conv4x4Spec, FullyConnectedSpec, WindowAttentionSpec> op;
    bool post_norm = false;
    bool residual = false;

    void validate() const {
        if (auto* c = std::get_if<Conv4x4Spec>(&op)) {
            if (c->h_in < 0 || c->w_in < 0 || c->c_in < 0 || c->c_out < 0)
                throw std::invalid_argument("Conv4x4: negative extent");
            if (c->h_in % 4 != 0 || c->w_in % 4 != 0)
                throw std::invalid_argument("Conv4x4: h_in and w_in must be divisible by 4");
        } else if (auto* f = std::get_if<FullyConnectedSpec>(&op)) {
            if (f->tokens < 0 || f->c_in < 0 || f->c_out < 0)
                throw std::invalid_argument("FullyConnected: negative extent");
        } else if (auto* w = std::get_if<WindowAttentionSpec>(&op)) {
            if (w->num_windows < 0 || w->tokens_per_window < 0 || w->embed_dim < 0)
                throw std::invalid_argument("WindowAttention: negative extent");
            if (w->num_heads < 1)
                throw std::invalid_argument("WindowAttention: num_heads must be >= 1");
            if (w->embed_dim % w->num_heads != 0)
                throw std::invalid_argument("WindowAttention: embed_dim not divisible by num_heads");
        }
    }
};

inline LayerDescriptor make_conv4x4(std::int64_t h, std::int64_t w, std::int64_t cin,
                                    std::int64_t cout, bool norm = false, bool residual = false) {
    LayerDescriptor d{Conv4x4Spec{h, w, cin, cout}, norm, residual};
    d.validate();
    return d;
}

inline LayerDescriptor make_fc(std::int64_t tokens, std::int64_t cin, std::int64_t cout,
                               Activation act = Activation::None, bool norm = false,
                               bool residual = false) {
    LayerDescriptor d{FullyConnectedSpec{tokens, cin, cout, act}, norm, residual};
    d.validate();
    return d;
}

inline LayerDescriptor make_wmsa(std::int64_t windows, std::int64_t tokens, std::int64_t dim,
                                 std::int64_t heads, bool norm = false, bool residual = false) {
    LayerDescriptor d{WindowAttentionSpec{windows, tokens, dim, heads}, norm, residual};
    d.validate();
    return d;
}

inline const char* layer_kind_name(const LayerDescriptor& d) {
    if (std::holds_alternative<Conv4x4Spec>(d.op)) return "conv4x4";
    if (std::holds_alternative<FullyConnectedSpec>(d.op)) return "fc";
    return "wmsa";
}

// Multiply-accumulate count of the layer's arithmetic (no padding, no
// scheduling artifacts). Attention counts both the score and the
// aggregation matmul per head per window.
inline std::int64_t layer_macs(const LayerDescriptor& d) {
    if (auto* c = std::get_if<Conv4x4Spec>(&d.op))
        return c->positions() * c->c_out * c->patch_size();
    if (auto* f = std::get_if<FullyConnectedSpec>(&d.op))
        return f->tokens * f->c_in * f->c_out;
    auto& w = std::get<WindowAttentionSpec>(d.op);
    const std::int64_t t = w.tokens_per_window;
    return w.num_windows * w.num_heads * 2 * t * t * w.head_dim();
}

inline std::int64_t layer_params(const LayerDescriptor& d) {
    if (auto* c = std::get_if<Conv4x4Spec>(&d.op)) return c->c_out * c->patch_size();
    if (auto* f = std::get_if<FullyConnectedSpec>(&d.op)) return f->c_in * f->c_out;
    return 0; // attention itself carries no weights; projections are FC layers
}

// Output activation extent as [tokens, channels] (conv flattened to tokens).
inline std::pair<std::int64_t, std::int64_t> layer_output_shape(const LayerDescriptor& d) {
    if (auto* c = std::get_if<Conv4x4Spec>(&d.op)) return {c->positions(), c->c_out};
    if (auto* f = std::get_if<FullyConnectedSpec>(&d.op)) return {f->tokens, f->c_out};
    auto& w = std::get<WindowAttentionSpec>(d.op);
    return {w.num_windows * w.tokens_per_window, w.embed_dim};
}

inline std::pair<std::int64_t, std::int64_t> layer_input_shape(const LayerDescriptor& d) {
    if (auto* c = std::get_if<Conv4x4Spec>(&d.op)) return {c->h_in * c->w_in, c->c_in};
    if (auto* f = std::get_if<FullyConnectedSpec>(&d.op)) return {f->tokens, f->c_in};
    auto& w = std::get<WindowAttentionSpec>(d.op);
    return {w.num_windows * w.tokens_per_window, w.embed_dim};
}

} // namespace rowsim
