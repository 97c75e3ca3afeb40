#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slotnet/common.hpp"

namespace slotnet {

/// Gated recurrent unit with an additional linear output gate.
///
///   z = sigmoid(W_z [h, x] + b_z)
///   r = sigmoid(W_r [h, x] + b_r)
///   g = tanh(W_g [r*h, x] + b_g)
///   h' = (1 - z) * h + z * g
///   o = W_o [h', x] + b_o
///
/// Gate matrices act on the concatenation [previous hidden, input] in that
/// order; the genome packer freezes the same ordering.
struct GruParams {
    std::size_t in = 0, hidden = 0, out = 0;
    Mat w_z, w_r, w_g;  // hidden x (hidden + in)
    Vec b_z, b_r, b_g;  // hidden
    Mat w_o;            // out x (hidden + in)
    Vec b_o;            // out

    GruParams() = default;
    GruParams(std::size_t in_, std::size_t hidden_, std::size_t out_)
        : in(in_), hidden(hidden_), out(out_),
          w_z(hidden_, hidden_ + in_), w_r(hidden_, hidden_ + in_), w_g(hidden_, hidden_ + in_),
          b_z(hidden_, 0.0), b_r(hidden_, 0.0), b_g(hidden_, 0.0),
          w_o(out_, hidden_ + in_), b_o(out_, 0.0) {
        require(in_ > 0 && hidden_ > 0 && out_ > 0, "GruParams: all dimensions must be positive");
    }
};

/// The three shared gates through which a feedback signal adjusts a unit's
/// hidden state. Same update as GruParams minus the output gate.
struct FeedbackParams {
    std::size_t in = 0, hidden = 0;
    Mat w_z, w_r, w_g;  // hidden x (hidden + in)
    Vec b_z, b_r, b_g;  // hidden

    FeedbackParams() = default;
    FeedbackParams(std::size_t in_, std::size_t hidden_)
        : in(in_), hidden(hidden_),
          w_z(hidden_, hidden_ + in_), w_r(hidden_, hidden_ + in_), w_g(hidden_, hidden_ + in_),
          b_z(hidden_, 0.0), b_r(hidden_, 0.0), b_g(hidden_, 0.0) {
        require(in_ > 0 && hidden_ > 0, "FeedbackParams: all dimensions must be positive");
    }
    bool present() const { return hidden > 0; }
};

struct GruState {
    Vec h;
};

struct MlpLayer {
    Mat w;        // out x in
    Vec b;        // empty when the layer has no bias
    bool tanh_activation = true;
};

struct MlpParams {
    std::vector<MlpLayer> layers;

    std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
    std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
};

namespace detail {

inline void check_gru_dims(const GruParams& p, const GruState& s, std::span<const double> x) {
    require(x.size() == p.in, "gru_step: input length does not match cell input size");
    require(s.h.size() == p.hidden, "gru_step: hidden state length does not match cell hidden size");
}

/// Shared z/r/g update (eqs of the gated cell without the output gate).
/// Writes the new hidden state into h_next; h_next must not alias h.
inline void gated_update(const Mat& w_z, const Vec& b_z, const Mat& w_r, const Vec& b_r,
                         const Mat& w_g, const Vec& b_g, std::span<const double> h,
                         std::span<const double> x, std::span<double> h_next) {
    const std::size_t hidden = h.size();
    thread_local Vec rh;  // r * h scratch, reused across calls
    rh.resize(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
        double r = sigmoid(dot_concat(w_r.row(i), h, x) + b_r[i]);
        rh[i] = r * h[i];
    }
    for (std::size_t i = 0; i < hidden; ++i) {
        double z = sigmoid(dot_concat(w_z.row(i), h, x) + b_z[i]);
        double g = std::tanh(dot_concat(w_g.row(i), {rh.data(), hidden}, x) + b_g[i]);
        h_next[i] = (1.0 - z) * h[i] + z * g;
    }
}

}  // namespace detail

/// One step of the gated cell. Pure: the input state is left untouched.
/// Returns the next hidden state and the output vector.
inline std::pair<GruState, Vec> gru_step(const GruParams& p, const GruState& s,
                                         std::span<const double> x) {
    detail::check_gru_dims(p, s, x);
    GruState next{Vec(p.hidden)};
    detail::gated_update(p.w_z, p.b_z, p.w_r, p.b_r, p.w_g, p.b_g, s.h, x, next.h);
    Vec out(p.out);
    for (std::size_t i = 0; i < p.out; ++i)
        out[i] = dot_concat(p.w_o.row(i), next.h, x) + p.b_o[i];
    return {std::move(next), std::move(out)};
}

/// Hidden-state adjustment from a feedback signal; no output is produced.
inline GruState feedback_step(const FeedbackParams& p, const GruState& s,
                              std::span<const double> f) {
    require(f.size() == p.in, "feedback_step: feedback length does not match gate input size");
    require(s.h.size() == p.hidden, "feedback_step: hidden state length mismatch");
    GruState next{Vec(p.hidden)};
    detail::gated_update(p.w_z, p.b_z, p.w_r, p.b_r, p.w_g, p.b_g, s.h, f, next.h);
    return next;
}

/// Sequential affine maps; layers flagged tanh apply the activation, others
/// stay linear.
inline Vec mlp_forward(const MlpParams& p, std::span<const double> x) {
    require(!p.layers.empty(), "mlp_forward: empty layer stack");
    require(x.size() == p.in_dim(), "mlp_forward: input length does not match first layer");
    Vec cur(x.begin(), x.end());
    Vec next;
    for (const MlpLayer& layer : p.layers) {
        require(layer.w.cols == cur.size(), "mlp_forward: layer dimensions do not chain");
        require(layer.b.empty() || layer.b.size() == layer.w.rows,
                "mlp_forward: bias length does not match layer output");
        next.assign(layer.w.rows, 0.0);
        for (std::size_t i = 0; i < layer.w.rows; ++i) {
            double acc = dot4(layer.w.row(i), cur.data(), cur.size());
            if (!layer.b.empty()) acc += layer.b[i];
            next[i] = layer.tanh_activation ? std::tanh(acc) : acc;
        }
        cur.swap(next);
    }
    return cur;
}

/// Parameter counts. Biases are included per the stated flags; an empty
/// input is a degenerate cell and is rejected.
inline std::size_t gru_param_count(std::size_t in, std::size_t hidden, std::size_t out) {
    require(in > 0 && hidden > 0 && out > 0, "gru_param_count: dimensions must be positive");
    return 3 * (hidden * (hidden + in) + hidden) + out * (hidden + in) + out;
}

inline std::size_t feedback_param_count(std::size_t in, std::size_t hidden) {
    require(in > 0 && hidden > 0, "feedback_param_count: dimensions must be positive");
    return 3 * (hidden * (hidden + in) + hidden);
}

inline std::size_t dense_param_count(std::size_t in, std::size_t out, bool with_bias) {
    require(in > 0 && out > 0, "dense_param_count: dimensions must be positive");
    return in * out + (with_bias ? out : 0);
}

inline std::size_t mlp_param_count(const MlpParams& p) {
    std::size_t total = 0;
    for (const MlpLayer& layer : p.layers) total += layer.w.size() + layer.b.size();
    return total;
}

}  // namespace slotnet
