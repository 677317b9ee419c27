// The network: two stacked LSTM layers feeding a single sigmoid output,
// with variational dropout applied at three placements (second-layer
// input, the hidden state carried between time steps of both layers, and
// the dense-layer input). Masks are drawn once per sequence and reused at
// every time step; the cell state is never masked.
//
// Gate order is fixed as [input i, forget f, cell g, output o]: row block
// k*H..(k+1)*H-1 of the stacked weight matrices belongs to gate k in that
// order. Exact gradients are computed by backpropagation through time with
// the masks treated as constants.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/numeric.hpp"
#include "prognos/rng.hpp"

namespace prognos {

struct Dims {
    std::size_t input = 24;
    std::size_t hidden1 = 100;
    std::size_t hidden2 = 50;

    bool operator==(const Dims&) const = default;
};

struct DropoutSpec {
    double layer2_input = 0.10;  // input of the second LSTM layer
    double recurrent = 0.10;     // hidden state between time steps, both layers
    double dense_input = 0.20;   // input of the final dense layer
};

struct LstmLayerParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    Matrix W;               // 4*hidden x input_dim
    Matrix U;               // 4*hidden x hidden
    std::vector<double> b;  // 4*hidden

    LstmLayerParams() = default;
    LstmLayerParams(std::size_t in, std::size_t h)
        : input_dim(in), hidden(h), W(4 * h, in), U(4 * h, h), b(4 * h, 0.0) {}
};

struct NetworkParams {
    Dims dims;
    LstmLayerParams layer1;
    LstmLayerParams layer2;
    std::vector<double> dense_w;  // 1 x hidden2
    double dense_b = 0.0;

    NetworkParams() = default;
    explicit NetworkParams(const Dims& d)
        : dims(d),
          layer1(d.input, d.hidden1),
          layer2(d.hidden1, d.hidden2),
          dense_w(d.hidden2, 0.0) {}
};

inline NetworkParams zeros_like(const NetworkParams& p) { return NetworkParams(p.dims); }

// Flat views over every trainable parameter, in a fixed documented order.
// Adam, serialization and the gradient checker all walk this order.
inline std::vector<std::span<double>> param_views(NetworkParams& p) {
    return {
        std::span<double>(p.layer1.W.values), std::span<double>(p.layer1.U.values),
        std::span<double>(p.layer1.b),        std::span<double>(p.layer2.W.values),
        std::span<double>(p.layer2.U.values), std::span<double>(p.layer2.b),
        std::span<double>(p.dense_w),         std::span<double>(&p.dense_b, 1),
    };
}

inline std::vector<std::span<const double>> param_views(const NetworkParams& p) {
    return {
        std::span<const double>(p.layer1.W.values), std::span<const double>(p.layer1.U.values),
        std::span<const double>(p.layer1.b),        std::span<const double>(p.layer2.W.values),
        std::span<const double>(p.layer2.U.values), std::span<const double>(p.layer2.b),
        std::span<const double>(p.dense_w),         std::span<const double>(&p.dense_b, 1),
    };
}

// One draw of the tied dropout masks. Draw order: layer2_input,
// recurrent layer 1, recurrent layer 2, dense_input.
struct MaskSet {
    std::vector<double> layer2_input;  // hidden1
    std::vector<double> recurrent1;    // hidden1
    std::vector<double> recurrent2;    // hidden2
    std::vector<double> dense_input;   // hidden2

    static MaskSet ones(const Dims& d) {
        MaskSet m;
        m.layer2_input.assign(d.hidden1, 1.0);
        m.recurrent1.assign(d.hidden1, 1.0);
        m.recurrent2.assign(d.hidden2, 1.0);
        m.dense_input.assign(d.hidden2, 1.0);
        return m;
    }
};

inline MaskSet sample_masks(Rng& rng, const DropoutSpec& spec, const Dims& d) {
    MaskSet m;
    m.layer2_input = sample_mask(rng, d.hidden1, spec.layer2_input);
    m.recurrent1 = sample_mask(rng, d.hidden1, spec.recurrent);
    m.recurrent2 = sample_mask(rng, d.hidden2, spec.recurrent);
    m.dense_input = sample_mask(rng, d.hidden2, spec.dense_input);
    return m;
}

// Glorot-uniform initialization, bound sqrt(6/(fan_in+fan_out)) taken from
// the full stacked matrix shape (fan_in = cols, fan_out = rows). Forget-gate
// bias starts at 1, all other biases at 0. Draw order: layer1.W, layer1.U,
// layer2.W, layer2.U, dense_w, each row-major.
inline NetworkParams init_params(Rng& rng, const Dims& dims) {
    NetworkParams p(dims);
    auto glorot = [&rng](Matrix& m) {
        const double bound = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
        for (auto& v : m.values) v = rng.next_uniform(-bound, bound);
    };
    glorot(p.layer1.W);
    glorot(p.layer1.U);
    glorot(p.layer2.W);
    glorot(p.layer2.U);
    {
        const double bound = std::sqrt(6.0 / static_cast<double>(1 + dims.hidden2));
        for (auto& v : p.dense_w) v = rng.next_uniform(-bound, bound);
    }
    for (std::size_t j = dims.hidden1; j < 2 * dims.hidden1; ++j) p.layer1.b[j] = 1.0;
    for (std::size_t j = dims.hidden2; j < 2 * dims.hidden2; ++j) p.layer2.b[j] = 1.0;
    return p;
}

namespace detail {

// z = W*x + U*h_tilde + b, then split into activated gates and advance the
// cell. All outputs are rows of the caller's per-step storage.
inline void lstm_step(const LstmLayerParams& p, const double* x, const double* h_tilde,
                      const double* c_prev, double* z_scratch, double* gi, double* gf, double* gg,
                      double* go, double* c, double* tanh_c, double* h) {
    const std::size_t H = p.hidden;
    matvec(p.W, x, z_scratch);
    for (std::size_t r = 0; r < 4 * H; ++r)
        z_scratch[r] += dot(p.U.row_ptr(r), h_tilde, H) + p.b[r];
    for (std::size_t j = 0; j < H; ++j) {
        gi[j] = sigmoid(z_scratch[j]);
        gf[j] = sigmoid(z_scratch[H + j]);
        gg[j] = std::tanh(z_scratch[2 * H + j]);
        go[j] = sigmoid(z_scratch[3 * H + j]);
        c[j] = gf[j] * (c_prev ? c_prev[j] : 0.0) + gi[j] * gg[j];
        tanh_c[j] = std::tanh(c[j]);
        h[j] = go[j] * tanh_c[j];
    }
}

}  // namespace detail

struct LstmGates {
    std::vector<double> i, f, g, o;
};

// Single-cell convenience form of the step above (used directly by tests;
// the sequence forward keeps its own storage). h_prev is masked by
// recurrent_mask before entering the cell.
inline void lstm_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
                      const std::vector<double>& c_prev, const LstmLayerParams& p,
                      const std::vector<double>& recurrent_mask, std::vector<double>& h_out,
                      std::vector<double>& c_out, LstmGates& gates) {
    const std::size_t H = p.hidden;
    if (x.size() != p.input_dim || h_prev.size() != H || c_prev.size() != H ||
        recurrent_mask.size() != H)
        throw std::invalid_argument("lstm_cell: dimension mismatch");
    std::vector<double> h_tilde(H), z(4 * H);
    for (std::size_t j = 0; j < H; ++j) h_tilde[j] = h_prev[j] * recurrent_mask[j];
    gates.i.resize(H);
    gates.f.resize(H);
    gates.g.resize(H);
    gates.o.resize(H);
    h_out.resize(H);
    c_out.resize(H);
    std::vector<double> tanh_c(H);
    detail::lstm_step(p, x.data(), h_tilde.data(), c_prev.data(), z.data(), gates.i.data(),
                      gates.f.data(), gates.g.data(), gates.o.data(), c_out.data(), tanh_c.data(),
                      h_out.data());
}

// Everything backward() needs to reproduce the forward pass exactly:
// per-step gate values, cell and hidden states, the masked inputs that
// actually entered each layer, and the MaskSet that was applied.
struct ForwardCache {
    std::size_t T = 0;
    Dims dims;
    MaskSet masks;
    Matrix input;  // T x input (copy of the sequence)

    struct Layer {
        Matrix h_tilde, gi, gf, gg, go, c, tanh_c, h;  // each T x hidden
        std::vector<double> z;                         // scratch, 4*hidden

        void resize(std::size_t T, std::size_t H) {
            for (Matrix* m : {&h_tilde, &gi, &gf, &gg, &go, &c, &tanh_c, &h})
                if (m->rows != T || m->cols != H) *m = Matrix(T, H);
            z.assign(4 * H, 0.0);
        }
    };
    Layer l1, l2;
    Matrix x2;                     // T x hidden1, masked layer-2 inputs
    std::vector<double> dense_in;  // hidden2, masked dense input
    double p = 0.0;

    void resize(const Dims& d, std::size_t steps) {
        T = steps;
        dims = d;
        l1.resize(steps, d.hidden1);
        l2.resize(steps, d.hidden2);
        if (x2.rows != steps || x2.cols != d.hidden1) x2 = Matrix(steps, d.hidden1);
        dense_in.assign(d.hidden2, 0.0);
    }
};

// Runs the full stacked pass over a T x input sequence and returns the
// failure probability from the final time step. masks == nullptr means
// all-ones masks (the deterministic pass used for validation and the
// standard-RNN baseline).
inline double forward(const NetworkParams& params, const Matrix& seq, const MaskSet* masks,
                      ForwardCache& cache) {
    const Dims& d = params.dims;
    if (seq.cols != d.input)
        throw std::invalid_argument("forward: sequence has " + std::to_string(seq.cols) +
                                    " features, params expect " + std::to_string(d.input));
    if (seq.rows == 0) throw std::invalid_argument("forward: empty sequence");
    const std::size_t T = seq.rows;
    cache.resize(d, T);
    cache.masks = masks ? *masks : MaskSet::ones(d);
    cache.input = seq;
    const MaskSet& m = cache.masks;
    if (m.layer2_input.size() != d.hidden1 || m.recurrent1.size() != d.hidden1 ||
        m.recurrent2.size() != d.hidden2 || m.dense_input.size() != d.hidden2)
        throw std::invalid_argument("forward: mask sizes do not match dims");

    for (std::size_t t = 0; t < T; ++t) {
        // layer 1: raw features in, tied recurrent mask on h_{t-1}
        ForwardCache::Layer& L1 = cache.l1;
        const double* h_prev = t > 0 ? L1.h.row_ptr(t - 1) : nullptr;
        double* h_tilde = L1.h_tilde.row_ptr(t);
        for (std::size_t j = 0; j < d.hidden1; ++j)
            h_tilde[j] = h_prev ? h_prev[j] * m.recurrent1[j] : 0.0;
        detail::lstm_step(params.layer1, seq.row_ptr(t), h_tilde,
                          t > 0 ? L1.c.row_ptr(t - 1) : nullptr, L1.z.data(), L1.gi.row_ptr(t),
                          L1.gf.row_ptr(t), L1.gg.row_ptr(t), L1.go.row_ptr(t), L1.c.row_ptr(t),
                          L1.tanh_c.row_ptr(t), L1.h.row_ptr(t));

        // layer 2: masked layer-1 output in
        double* x2 = cache.x2.row_ptr(t);
        const double* h1 = L1.h.row_ptr(t);
        for (std::size_t j = 0; j < d.hidden1; ++j) x2[j] = h1[j] * m.layer2_input[j];
        ForwardCache::Layer& L2 = cache.l2;
        const double* h2_prev = t > 0 ? L2.h.row_ptr(t - 1) : nullptr;
        double* h_tilde2 = L2.h_tilde.row_ptr(t);
        for (std::size_t j = 0; j < d.hidden2; ++j)
            h_tilde2[j] = h2_prev ? h2_prev[j] * m.recurrent2[j] : 0.0;
        detail::lstm_step(params.layer2, x2, h_tilde2, t > 0 ? L2.c.row_ptr(t - 1) : nullptr,
                          L2.z.data(), L2.gi.row_ptr(t), L2.gf.row_ptr(t), L2.gg.row_ptr(t),
                          L2.go.row_ptr(t), L2.c.row_ptr(t), L2.tanh_c.row_ptr(t),
                          L2.h.row_ptr(t));
    }

    const double* h2_last = cache.l2.h.row_ptr(T - 1);
    for (std::size_t j = 0; j < d.hidden2; ++j)
        cache.dense_in[j] = h2_last[j] * m.dense_input[j];
    const double a = dot(params.dense_w.data(), cache.dense_in.data(), d.hidden2) + params.dense_b;
    cache.p = sigmoid(a);
    return cache.p;
}

inline double forward(const NetworkParams& params, const Matrix& seq,
                      const MaskSet* masks = nullptr) {
    ForwardCache cache;
    return forward(params, seq, masks, cache);
}

// Binary cross-entropy; p is clamped to [1e-12, 1-1e-12] before the logs.
inline double bce_loss(double p, double y) {
    const double c = std::min(1.0 - 1e-12, std::max(1e-12, p));
    return -(y * std::log(c) + (1.0 - y) * std::log(1.0 - c));
}

namespace detail {

// BPTT through one LSTM layer. dh_seq holds dL/dh_t on entry (accumulated
// from whatever consumed this layer's outputs) and is consumed in place.
// dx_seq, when non-null, receives dL/d(input_t). Gradients accumulate into
// grads.
inline void lstm_backward_layer(const LstmLayerParams& p, const Matrix& x_seq,
                                const ForwardCache::Layer& L, const std::vector<double>& rec_mask,
                                Matrix& dh_seq, Matrix* dx_seq, LstmLayerParams& grads) {
    const std::size_t H = p.hidden;
    const std::size_t T = L.h.rows;
    std::vector<double> dc(H, 0.0), dz(4 * H), dh_tilde(H);
    for (std::size_t ti = T; ti-- > 0;) {
        const double* gi = L.gi.row_ptr(ti);
        const double* gf = L.gf.row_ptr(ti);
        const double* gg = L.gg.row_ptr(ti);
        const double* go = L.go.row_ptr(ti);
        const double* tc = L.tanh_c.row_ptr(ti);
        const double* c_prev = ti > 0 ? L.c.row_ptr(ti - 1) : nullptr;
        const double* dh = dh_seq.row_ptr(ti);
        for (std::size_t j = 0; j < H; ++j) {
            const double dcj = dc[j] + dh[j] * go[j] * (1.0 - tc[j] * tc[j]);
            const double d_o = dh[j] * tc[j];
            const double d_f = dcj * (c_prev ? c_prev[j] : 0.0);
            const double d_i = dcj * gg[j];
            const double d_g = dcj * gi[j];
            dz[j] = d_i * gi[j] * (1.0 - gi[j]);
            dz[H + j] = d_f * gf[j] * (1.0 - gf[j]);
            dz[2 * H + j] = d_g * (1.0 - gg[j] * gg[j]);
            dz[3 * H + j] = d_o * go[j] * (1.0 - go[j]);
            dc[j] = dcj * gf[j];
        }
        // parameter gradients: dW += dz (x) x_t, dU += dz (x) h_tilde_t
        const double* x = x_seq.row_ptr(ti);
        const double* h_tilde = L.h_tilde.row_ptr(ti);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            if (dz[r] != 0.0) {
                axpy(dz[r], x, grads.W.row_ptr(r), p.input_dim);
                axpy(dz[r], h_tilde, grads.U.row_ptr(r), H);
            }
            grads.b[r] += dz[r];
        }
        // dL/d(h_tilde) = U^T dz, carried to h_{t-1} through the tied mask
        if (ti > 0) {
            std::fill(dh_tilde.begin(), dh_tilde.end(), 0.0);
            for (std::size_t r = 0; r < 4 * H; ++r)
                if (dz[r] != 0.0) axpy(dz[r], p.U.row_ptr(r), dh_tilde.data(), H);
            double* dh_prev = dh_seq.row_ptr(ti - 1);
            for (std::size_t j = 0; j < H; ++j) dh_prev[j] += dh_tilde[j] * rec_mask[j];
        }
        // dL/d(x_t) = W^T dz
        if (dx_seq) {
            double* dx = dx_seq->row_ptr(ti);
            for (std::size_t r = 0; r < 4 * H; ++r)
                if (dz[r] != 0.0) axpy(dz[r], p.W.row_ptr(r), dx, p.input_dim);
        }
    }
}

}  // namespace detail

// Exact gradients of bce_loss(forward(...), y) with respect to every
// parameter, masks treated as constants. Accumulates into grads so a batch
// can sum in a fixed order.
inline void backward(const ForwardCache& cache, const NetworkParams& params, double y,
                     NetworkParams& grads) {
    const Dims& d = params.dims;
    if (!(grads.dims == d) || !(cache.dims == d))
        throw std::invalid_argument("backward: cache/params dimension mismatch");
    const std::size_t T = cache.T;
    const MaskSet& m = cache.masks;

    // sigmoid + BCE: dL/da = p - y at the dense pre-activation
    const double da = cache.p - y;
    axpy(da, cache.dense_in.data(), grads.dense_w.data(), d.hidden2);
    grads.dense_b += da;

    Matrix dh2(T, d.hidden2);
    {
        double* last = dh2.row_ptr(T - 1);
        for (std::size_t j = 0; j < d.hidden2; ++j)
            last[j] = da * params.dense_w[j] * m.dense_input[j];
    }
    Matrix dx2(T, d.hidden1);
    detail::lstm_backward_layer(params.layer2, cache.x2, cache.l2, m.recurrent2, dh2, &dx2,
                                grads.layer2);

    Matrix dh1(T, d.hidden1);
    for (std::size_t t = 0; t < T; ++t) {
        const double* src = dx2.row_ptr(t);
        double* dst = dh1.row_ptr(t);
        for (std::size_t j = 0; j < d.hidden1; ++j) dst[j] = src[j] * m.layer2_input[j];
    }
    detail::lstm_backward_layer(params.layer1, cache.input, cache.l1, m.recurrent1, dh1, nullptr,
                                grads.layer1);
}

inline NetworkParams backward(const ForwardCache& cache, const NetworkParams& params, double y) {
    NetworkParams grads = zeros_like(params);
    backward(cache, params, y, grads);
    return grads;
}

// Central finite-difference check of backward() on one (sequence, label)
// pair. Returns the maximum relative error over all parameters, with
// rel = |analytic - numeric| / max(|analytic| + |numeric|, 1e-8).
inline double grad_check(const NetworkParams& params, const Matrix& seq, double y,
                         const MaskSet* masks, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be positive");
    ForwardCache cache;
    forward(params, seq, masks, cache);
    NetworkParams analytic = backward(cache, params, y);

    NetworkParams probe = params;
    auto views = param_views(probe);
    auto grad_views = param_views(analytic);
    double max_rel = 0.0;
    ForwardCache scratch;
    for (std::size_t v = 0; v < views.size(); ++v) {
        for (std::size_t k = 0; k < views[v].size(); ++k) {
            double& theta = views[v][k];
            const double saved = theta;
            theta = saved + epsilon;
            const double lp = bce_loss(forward(probe, seq, masks, scratch), y);
            theta = saved - epsilon;
            const double lm = bce_loss(forward(probe, seq, masks, scratch), y);
            theta = saved;
            const double numeric = (lp - lm) / (2.0 * epsilon);
            const double analytic_v = grad_views[v][k];
            const double rel = std::abs(analytic_v - numeric) /
                               std::max(std::abs(analytic_v) + std::abs(numeric), 1e-8);
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace prognos
