#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rowsim/layer.hpp"

namespace rowsim {

// An ordered, shape-consistent chain of layers plus the image geometry it
// starts from.
struct Workload {
    std::string name;
    std::int64_t input_h = 0;
    std::int64_t input_w = 0;
    std::int64_t input_c = 0;
    std::vector<LayerDescriptor> layers;
};

inline bool operator==(const Conv4x4Spec& a, const Conv4x4Spec& b) {
    return a.h_in == b.h_in && a.w_in == b.w_in && a.c_in == b.c_in && a.c_out == b.c_out;
}
inline bool operator==(const FullyConnectedSpec& a, const FullyConnectedSpec& b) {
    return a.tokens == b.tokens && a.c_in == b.c_in && a.c_out == b.c_out &&
           a.activation == b.activation;
}
inline bool operator==(const WindowAttentionSpec& a, const WindowAttentionSpec& b) {
    return a.num_windows == b.num_windows && a.tokens_per_window == b.tokens_per_window &&
           a.embed_dim == b.embed_dim && a.num_heads == b.num_heads;
}
inline bool operator==(const LayerDescriptor& a, const LayerDescriptor& b) {
    return a.op == b.op && a.post_norm == b.post_norm && a.residual == b.residual;
}

// Swin-T reconstructed from its published configuration: patch embedding into
// 96 channels, stages of depth 2/2/6/2 at resolutions 56/28/14/7 with heads
// 3/6/12/24, 7x7 attention windows, 4x MLPs, patch-merging reductions between
// stages and a 1000-way classifier head after global pooling.
inline Workload build_swin_t() {
    Workload w;
    w.name = "swin-t";
    w.input_h = 224;
    w.input_w = 224;
    w.input_c = 3;
    w.layers.push_back(make_conv4x4(224, 224, 3, 96, /*norm=*/true));

    struct Stage {
        std::int64_t depth, dim, heads, res;
    };
    const Stage stages[] = {{2, 96, 3, 56}, {2, 192, 6, 28}, {6, 384, 12, 14}, {2, 768, 24, 7}};
    for (std::size_t s = 0; s < 4; ++s) {
        const auto& st = stages[s];
        const std::int64_t tokens = st.res * st.res;
        const std::int64_t windows = (st.res / 7) * (st.res / 7);
        for (std::int64_t b = 0; b < st.depth; ++b) {
            w.layers.push_back(make_fc(tokens, st.dim, 3 * st.dim));
            w.layers.push_back(make_wmsa(windows, 49, st.dim, st.heads));
            w.layers.push_back(make_fc(tokens, st.dim, st.dim, Activation::None,
                                       /*norm=*/true, /*residual=*/true));
            w.layers.push_back(make_fc(tokens, st.dim, 4 * st.dim, Activation::Gelu));
            w.layers.push_back(make_fc(tokens, 4 * st.dim, st.dim, Activation::None,
                                       /*norm=*/true, /*residual=*/true));
        }
        if (s + 1 < 4) {
            // patch merging: 2x2 token fold, then 4C -> 2C reduction
            const std::int64_t half = st.res / 2;
            w.layers.push_back(make_fc(half * half, 4 * st.dim, 2 * st.dim, Activation::None,
                                       /*norm=*/true));
        }
    }
    w.layers.push_back(make_fc(1, 768, 1000)); // classifier after global pooling
    return w;
}

// Shape consistency of the layer chain. Transitions allowed between an
// output of [t, c] and the next input of [t', c']:
//   exact     t' == t and c' == c
//   reshape   t' * c' == t * c            (patch-merge token fold)
//   qkv-split next is attention over c' with t' == t and c == 3 * c'
//   pool      t' == 1 and c' == c         (global average pool)
inline void validate_chain(const Workload& w) {
    if (w.layers.empty()) return;
    const auto first = layer_input_shape(w.layers.front());
    if (w.input_h > 0 && first.first != w.input_h * w.input_w)
        throw std::invalid_argument("workload: first layer does not match the input image");
    for (std::size_t i = 0; i + 1 < w.layers.size(); ++i) {
        const auto out = layer_output_shape(w.layers[i]);
        const auto in = layer_input_shape(w.layers[i + 1]);
        const bool exact = in == out;
        const bool reshape = in.first * in.second == out.first * out.second;
        const bool qkv_split = std::holds_alternative<WindowAttentionSpec>(w.layers[i + 1].op) &&
                               in.first == out.first && out.second == 3 * in.second;
        const bool pool = in.first == 1 && in.second == out.second;
        if (!(exact || reshape || qkv_split || pool))
            throw std::invalid_argument("workload: layer " + std::to_string(i + 1) +
                                        " input does not chain from layer " + std::to_string(i));
    }
}

// ---------------------------------------------------------------------------
// Line-oriented workload files. One record per layer:
//   conv4x4 <h> <w> <c_in> <c_out> [norm] [residual]
//   fc <tokens> <c_in> <c_out> [gelu] [norm] [residual]
//   wmsa <windows> <tokens> <dim> <heads> [norm] [residual]
// '#' starts a comment; blank lines are ignored.
inline Workload load_workload(std::istream& in, const std::string& name = "workload") {
    Workload w;
    w.name = name;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string kind;
        if (!(fields >> kind)) continue;

        auto fail = [&](const std::string& why) {
            throw std::invalid_argument("workload line " + std::to_string(lineno) + ": " + why);
        };
        auto read_flags = [&](bool& norm, bool& residual, bool& gelu, bool allow_gelu) {
            std::string tok;
            while (fields >> tok) {
                if (tok == "norm") norm = true;
                else if (tok == "residual") residual = true;
                else if (tok == "gelu" && allow_gelu) gelu = true;
                else fail("unknown token '" + tok + "'");
            }
        };

        bool norm = false, residual = false, gelu = false;
        if (kind == "conv4x4") {
            std::int64_t h, wd, ci, co;
            if (!(fields >> h >> wd >> ci >> co)) fail("expected: conv4x4 h w c_in c_out");
            read_flags(norm, residual, gelu, false);
            w.layers.push_back(make_conv4x4(h, wd, ci, co, norm, residual));
        } else if (kind == "fc") {
            std::int64_t t, ci, co;
            if (!(fields >> t >> ci >> co)) fail("expected: fc tokens c_in c_out");
            read_flags(norm, residual, gelu, true);
            w.layers.push_back(
                make_fc(t, ci, co, gelu ? Activation::Gelu : Activation::None, norm, residual));
        } else if (kind == "wmsa") {
            std::int64_t wnd, t, dim, heads;
            if (!(fields >> wnd >> t >> dim >> heads)) fail("expected: wmsa windows tokens dim heads");
            read_flags(norm, residual, gelu, false);
            w.layers.push_back(make_wmsa(wnd, t, dim, heads, norm, residual));
        } else {
            fail("unknown layer kind '" + kind + "'");
        }
    }
    if (!w.layers.empty()) {
        if (auto* c = std::get_if<Conv4x4Spec>(&w.layers.front().op)) {
            w.input_h = c->h_in;
            w.input_w = c->w_in;
            w.input_c = c->c_in;
        }
    }
    validate_chain(w);
    return w;
}

inline Workload load_workload_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open workload file: " + path);
    std::string name = path;
    const auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name.erase(0, slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name.erase(dot);
    return load_workload(in, name);
}

inline void save_workload(const Workload& w, std::ostream& out) {
    for (const auto& d : w.layers) {
        if (auto* c = std::get_if<Conv4x4Spec>(&d.op)) {
            out << "conv4x4 " << c->h_in << ' ' << c->w_in << ' ' << c->c_in << ' ' << c->c_out;
        } else if (auto* f = std::get_if<FullyConnectedSpec>(&d.op)) {
            out << "fc " << f->tokens << ' ' << f->c_in << ' ' << f->c_out;
            if (f->activation == Activation::Gelu) out << " gelu";
        } else {
            auto& a = std::get<WindowAttentionSpec>(d.op);
            out << "wmsa " << a.num_windows << ' ' << a.tokens_per_window << ' ' << a.embed_dim
                << ' ' << a.num_heads;
        }
        if (d.post_norm) out << " norm";
        if (d.residual) out << " residual";
        out << '\n';
    }
}

} // namespace rowsim
