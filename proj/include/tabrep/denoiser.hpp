#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tabrep/rng.hpp"

namespace tabrep {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TimeEmbedding {
    int dim = 1024;
    double base = 10000.0;
    // normalized time in [0,1] is stretched by this factor so that discrete
    // DDPM steps (T=1000) and continuous flow time share one embedding range
    double scale = 1000.0;
};

template <typename S>
inline void time_embed_row(const TimeEmbedding& emb, double tau, S* out) {
    if (emb.dim % 2 != 0) throw std::invalid_argument("time_embed: dim must be even");
    const double u = emb.scale * tau;
    const int half = emb.dim / 2;
    for (int i = 0; i < half; ++i) {
        const double omega = std::pow(emb.base, -2.0 * static_cast<double>(i) /
                                                    static_cast<double>(emb.dim));
        out[2 * i] = static_cast<S>(std::sin(u * omega));
        out[2 * i + 1] = static_cast<S>(std::cos(u * omega));
    }
}

template <typename S>
inline std::vector<S> time_embed(const TimeEmbedding& emb, double tau) {
    std::vector<S> out(static_cast<size_t>(emb.dim));
    time_embed_row(emb, tau, out.data());
    return out;
}

// Widths follow the fixed architecture: hidden layers [d_t, 2*d_t, 2*d_t, d_t]
// between an input projection d_in -> d_t and an output head back to d_in.
struct DenoiserDims {
    int d_in = 0;
    int d_t = 1024;

    std::array<int, 4> hidden() const { return {d_t, 2 * d_t, 2 * d_t, d_t}; }

    // layer l: out_dim x in_dim, l = 0 input projection, 1..4 hidden, 5 output
    std::array<std::pair<int, int>, 6> layer_shapes() const {
        const auto h = hidden();
        return {{{d_t, d_in}, {h[0], d_t}, {h[1], h[0]}, {h[2], h[1]}, {h[3], h[2]}, {d_in, h[3]}}};
    }
};

template <typename S>
struct Linear {
    MatX<S> w;  // out x in
    MatX<S> b;  // 1 x out
};

template <typename S>
struct DenoiserParams {
    DenoiserDims dims;
    std::array<Linear<S>, 6> layers;

    static DenoiserParams zeros(const DenoiserDims& dims) {
        DenoiserParams p;
        p.dims = dims;
        const auto shapes = dims.layer_shapes();
        for (size_t l = 0; l < 6; ++l) {
            p.layers[l].w = MatX<S>::Zero(shapes[l].first, shapes[l].second);
            p.layers[l].b = MatX<S>::Zero(1, shapes[l].first);
        }
        return p;
    }

    // Kaiming-uniform fan-in on the ReLU hidden layers, gain-1 uniform on the
    // input projection and output head, zero biases.
    static DenoiserParams init(const DenoiserDims& dims, uint64_t seed) {
        DenoiserParams p = zeros(dims);
        for (size_t l = 0; l < 6; ++l) {
            auto& w = p.layers[l].w;
            const double fan_in = static_cast<double>(w.cols());
            const bool relu_layer = l >= 1 && l <= 4;
            const double bound = std::sqrt((relu_layer ? 6.0 : 3.0) / fan_in);
            CounterRng g(seed, /*stream=*/100 + l);
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index j = 0; j < w.cols(); ++j)
                    w(i, j) = static_cast<S>((2.0 * g.next_unit() - 1.0) * bound);
        }
        return p;
    }

    template <typename Fn>
    void visit(Fn&& fn) {
        for (size_t l = 0; l < 6; ++l) {
            fn(layers[l].w);
            fn(layers[l].b);
        }
    }
    template <typename Fn>
    void visit(Fn&& fn) const {
        for (size_t l = 0; l < 6; ++l) {
            fn(layers[l].w);
            fn(layers[l].b);
        }
    }

    bool all_finite() const {
        bool ok = true;
        visit([&](const MatX<S>& t) { ok = ok && t.allFinite(); });
        return ok;
    }

    int64_t parameter_count() const {
        int64_t n = 0;
        visit([&](const MatX<S>& t) { n += t.size(); });
        return n;
    }
};

template <typename S>
struct ForwardCache {
    MatX<S> z;                    // input batch
    std::array<MatX<S>, 5> acts;  // h_in and the four post-ReLU activations
    bool valid = false;
};

// h_in = FC(z) + t_emb; four FC+ReLU hidden layers; linear head back to d_in.
// `taus` holds the normalized time per row.
template <typename S>
MatX<S> denoiser_forward(const DenoiserParams<S>& params, const TimeEmbedding& emb,
                         const MatX<S>& z, const std::vector<double>& taus,
                         ForwardCache<S>* cache = nullptr) {
    const auto& d = params.dims;
    if (z.cols() != d.d_in) throw std::invalid_argument("denoiser: input width mismatch");
    if (taus.size() != static_cast<size_t>(z.rows()))
        throw std::invalid_argument("denoiser: one time value per row required");
    if (emb.dim != d.d_t) throw std::invalid_argument("denoiser: embedding dim mismatch");

    MatX<S> temb(z.rows(), d.d_t);
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        time_embed_row(emb, taus[static_cast<size_t>(r)], temb.row(r).data());

    MatX<S> h = z * params.layers[0].w.transpose();
    h.rowwise() += params.layers[0].b.row(0);
    h += temb;

    if (cache) {
        cache->z = z;
        cache->acts[0] = h;
    }
    for (size_t l = 1; l <= 4; ++l) {
        MatX<S> a = h * params.layers[l].w.transpose();
        a.rowwise() += params.layers[l].b.row(0);
        h = a.cwiseMax(S(0));  // dropout rate is 0: identity
        if (cache) cache->acts[l] = h;
    }
    MatX<S> y = h * params.layers[5].w.transpose();
    y.rowwise() += params.layers[5].b.row(0);
    if (cache) cache->valid = true;
    return y;
}

// Exact gradients of the forward map; ReLU subgradient at 0 is 0. Returns
// parameter gradients in a shape-congruent DenoiserParams; optionally also
// the gradient with respect to the input batch.
template <typename S>
DenoiserParams<S> denoiser_backward(const DenoiserParams<S>& params, const ForwardCache<S>& cache,
                                    const MatX<S>& upstream, MatX<S>* input_grad = nullptr) {
    if (!cache.valid) throw std::invalid_argument("denoiser: backward without forward cache");
    DenoiserParams<S> g = DenoiserParams<S>::zeros(params.dims);

    g.layers[5].w = upstream.transpose() * cache.acts[4];
    g.layers[5].b = upstream.colwise().sum();
    MatX<S> d = upstream * params.layers[5].w;

    for (size_t l = 4; l >= 1; --l) {
        // post-activation > 0 iff pre-activation > 0; ReLU'(0) := 0
        d.array() *= (cache.acts[l].array() > S(0)).template cast<S>();
        g.layers[l].w = d.transpose() * cache.acts[l - 1];
        g.layers[l].b = d.colwise().sum();
        d = d * params.layers[l].w;
    }
    g.layers[0].w = d.transpose() * cache.z;
    g.layers[0].b = d.colwise().sum();
    if (input_grad) *input_grad = d * params.layers[0].w;
    return g;
}

template <typename S>
struct AdamState {
    int64_t step = 0;
    double lr = 1e-4;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t skipped = 0;
    DenoiserParams<S> m;
    DenoiserParams<S> v;

    static AdamState like(const DenoiserParams<S>& params, double lr_ = 1e-4,
                          double weight_decay_ = 5e-4) {
        AdamState s;
        s.lr = lr_;
        s.weight_decay = weight_decay_;
        s.m = DenoiserParams<S>::zeros(params.dims);
        s.v = DenoiserParams<S>::zeros(params.dims);
        return s;
    }
};

// Bias-corrected Adam with decoupled weight decay applied before the moment
// update. A non-finite gradient skips the step and bumps `skipped`.
template <typename S>
bool adam_step(DenoiserParams<S>& params, const DenoiserParams<S>& grads, AdamState<S>& state) {
    if (!grads.all_finite()) {
        ++state.skipped;
        return false;
    }
    const S decay = static_cast<S>(1.0 - state.lr * state.weight_decay);
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const S b1 = static_cast<S>(state.beta1), b2 = static_cast<S>(state.beta2);
    const S lr = static_cast<S>(state.lr), eps = static_cast<S>(state.eps);
    const S ic1 = static_cast<S>(1.0 / c1), ic2 = static_cast<S>(1.0 / c2);

    for (size_t l = 0; l < 6; ++l) {
        for (auto [p, gm, mm, vm] :
             {std::tuple{&params.layers[l].w, &grads.layers[l].w, &state.m.layers[l].w,
                         &state.v.layers[l].w},
              std::tuple{&params.layers[l].b, &grads.layers[l].b, &state.m.layers[l].b,
                         &state.v.layers[l].b}}) {
            p->array() *= decay;
            mm->array() = b1 * mm->array() + (S(1) - b1) * gm->array();
            vm->array() = b2 * vm->array() + (S(1) - b2) * gm->array().square();
            p->array() -=
                lr * (mm->array() * ic1) / ((vm->array() * ic2).sqrt() + eps);
        }
    }
    return true;
}

using DenoiserParamsF = DenoiserParams<float>;
using DenoiserParamsD = DenoiserParams<double>;

}  // namespace tabrep
