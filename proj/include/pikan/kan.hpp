#pragma once

// Kolmogorov-Arnold network: every edge carries a learnable activation
//   phi(x) = w * (silu(x) + sum_s c_s B_s(x))
// and each node sums the phi values of its incoming edges. Forward evaluation
// runs in plain doubles or in Jet2 (second-order jets in t); the backward pass
// is a hand-written reverse sweep over the jet-valued forward, so one call
// yields d(loss)/d(param) for losses built from output values, first and
// second time derivatives.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pikan/common.hpp"
#include "pikan/jet.hpp"
#include "pikan/spline.hpp"

namespace pikan {

// One learnable edge function; a borrowed view into the owning layer.
struct EdgeActivation {
    double w = 0.0;
    std::span<const double> coeffs;
};

struct KanLayer {
    int n_in = 0;
    int n_out = 0;
    std::vector<double> w;     // [n_out * n_in], row-major by output index
    std::vector<double> coef;  // [n_out * n_in * num_basis]
};

// Scratch space for forward_jets/backward; reusable across evaluation points.
struct KanCache {
    struct Layer {
        std::vector<Jet2> in;        // activations entering the layer (post input affine)
        std::vector<int> win;        // basis window start per input
        std::vector<double> basis;   // per input: 4 rows (deriv 0..3) x (order+1)
        std::vector<double> act;     // per input: silu derivs 0..3
        std::vector<double> fsum;    // per edge: F0..F3 = silu + spline deriv sums
    };
    std::vector<Layer> layers;
    std::vector<Jet2> out;
};

class KanNetwork {
public:
    using Cache = KanCache;

    KanNetwork(std::vector<int> shape, SplineSpec spec)
        : shape_(std::move(shape)), spec_(std::move(spec)) {
        if (shape_.size() < 2) throw std::invalid_argument("KanNetwork: shape needs >= 2 widths");
        for (int wds : shape_)
            if (wds < 1) throw std::invalid_argument("KanNetwork: every width must be >= 1");
        const int nb = spec_.num_basis();
        layers_.resize(shape_.size() - 1);
        for (size_t l = 0; l < layers_.size(); ++l) {
            auto& layer = layers_[l];
            layer.n_in = shape_[l];
            layer.n_out = shape_[l + 1];
            layer.w.assign(static_cast<size_t>(layer.n_in) * layer.n_out, 0.0);
            layer.coef.assign(static_cast<size_t>(layer.n_in) * layer.n_out * nb, 0.0);
        }
        input_affine = AffineMap::identity(shape_.front());
        output_affine = AffineMap::identity(shape_.back());
    }

    // c_s ~ N(0, 0.1^2); w ~ Xavier-uniform over [-sqrt(6/(n_in+n_out)), +...].
    // Draw order is flatten order, so a seed pins the parameter vector.
    static KanNetwork init(std::vector<int> shape, SplineSpec spec, std::uint64_t seed) {
        KanNetwork net(std::move(shape), std::move(spec));
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> coef_dist(0.0, 0.1);
        for (auto& layer : net.layers_) {
            const double bound = std::sqrt(6.0 / (layer.n_in + layer.n_out));
            std::uniform_real_distribution<double> w_dist(-bound, bound);
            const int nb = net.spec_.num_basis();
            for (int j = 0; j < layer.n_out; ++j) {
                for (int i = 0; i < layer.n_in; ++i) {
                    const size_t e = static_cast<size_t>(j) * layer.n_in + i;
                    layer.w[e] = w_dist(rng);
                    for (int s = 0; s < nb; ++s) layer.coef[e * nb + s] = coef_dist(rng);
                }
            }
        }
        net.init_seed = seed;
        return net;
    }

    const std::vector<int>& shape() const { return shape_; }
    const SplineSpec& spec() const { return spec_; }
    const std::vector<KanLayer>& layers() const { return layers_; }
    int n_inputs() const { return shape_.front(); }
    int n_outputs() const { return shape_.back(); }

    int num_edges() const {
        int e = 0;
        for (const auto& layer : layers_) e += layer.n_in * layer.n_out;
        return e;
    }

    // Parameter count in the reporting convention: edges * (G + k_b). The w
    // scale factors stay trainable but are counted separately (see
    // trainable_count), matching how configurations are usually quoted.
    int param_count() const { return num_edges() * spec_.num_basis(); }

    // Length of the flat parameter vector: each edge carries w plus its
    // spline coefficients.
    int trainable_count() const { return num_edges() * (spec_.num_basis() + 1); }

    EdgeActivation edge(int layer, int j, int i) const {
        const auto& lay = layers_.at(static_cast<size_t>(layer));
        const int nb = spec_.num_basis();
        const size_t e = static_cast<size_t>(j) * lay.n_in + i;
        return {lay.w[e], {lay.coef.data() + e * nb, static_cast<size_t>(nb)}};
    }

    // --- parameter vector ---------------------------------------------------
    // Flatten order: layer-major, then output index j, then input index i;
    // per edge w first, then the spline coefficients.

    ParamVector flatten() const {
        ParamVector p(static_cast<size_t>(trainable_count()));
        flatten(p);
        return p;
    }

    void flatten(std::span<double> out) const {
        if (static_cast<int>(out.size()) != trainable_count())
            throw std::invalid_argument("KanNetwork::flatten: bad output length");
        const int nb = spec_.num_basis();
        size_t pos = 0;
        for (const auto& layer : layers_) {
            for (size_t e = 0; e < layer.w.size(); ++e) {
                out[pos++] = layer.w[e];
                for (int s = 0; s < nb; ++s) out[pos++] = layer.coef[e * nb + s];
            }
        }
    }

    void unflatten(std::span<const double> p) {
        if (static_cast<int>(p.size()) != trainable_count())
            throw std::invalid_argument("KanNetwork::unflatten: expected " +
                                        std::to_string(trainable_count()) + " values, got " +
                                        std::to_string(p.size()));
        const int nb = spec_.num_basis();
        size_t pos = 0;
        for (auto& layer : layers_) {
            for (size_t e = 0; e < layer.w.size(); ++e) {
                layer.w[e] = p[pos++];
                for (int s = 0; s < nb; ++s) layer.coef[e * nb + s] = p[pos++];
            }
        }
    }

    // --- evaluation ----------------------------------------------------------

    std::vector<double> forward(std::span<const double> input) const {
        if (static_cast<int>(input.size()) != n_inputs())
            throw std::invalid_argument("KanNetwork::forward: input size mismatch");
        const int k1 = spec_.order() + 1;
        const int nb = spec_.num_basis();
        std::vector<double> cur(input.begin(), input.end());
        for (int i = 0; i < n_inputs(); ++i) cur[static_cast<size_t>(i)] = input_affine.apply(i, cur[static_cast<size_t>(i)]);
        std::vector<double> next;
        std::vector<double> b0(static_cast<size_t>(k1));
        std::vector<double> base(static_cast<size_t>(shape_.front()));
        std::vector<int> win(static_cast<size_t>(shape_.front()));
        for (const auto& layer : layers_) {
            win.resize(static_cast<size_t>(layer.n_in));
            base.resize(static_cast<size_t>(layer.n_in) * k1);
            std::vector<double> s0(static_cast<size_t>(layer.n_in));
            for (int i = 0; i < layer.n_in; ++i) {
                const double x = cur[static_cast<size_t>(i)];
                spec_.eval_window(x, 0, base.data() + static_cast<size_t>(i) * k1);
                win[static_cast<size_t>(i)] = spec_.window_begin(x);
                s0[static_cast<size_t>(i)] = silu(x);
            }
            next.assign(static_cast<size_t>(layer.n_out), 0.0);
            for (int j = 0; j < layer.n_out; ++j) {
                double acc = 0.0;
                for (int i = 0; i < layer.n_in; ++i) {
                    const size_t e = static_cast<size_t>(j) * layer.n_in + i;
                    const double* c = layer.coef.data() + e * nb + win[static_cast<size_t>(i)];
                    const double* b = base.data() + static_cast<size_t>(i) * k1;
                    double f = s0[static_cast<size_t>(i)];
                    for (int p = 0; p < k1; ++p) f += c[p] * b[p];
                    acc += layer.w[e] * f;
                }
                next[static_cast<size_t>(j)] = acc;
            }
            cur.swap(next);
        }
        for (int j = 0; j < n_outputs(); ++j) cur[static_cast<size_t>(j)] = output_affine.apply(j, cur[static_cast<size_t>(j)]);
        return cur;
    }

    std::vector<Jet2> forward(std::span<const Jet2> input) const {
        KanCache cache;
        std::vector<Jet2> out(static_cast<size_t>(n_outputs()));
        forward_jets(input, cache, out);
        return out;
    }

    // Jet-valued forward that records everything backward() needs.
    void forward_jets(std::span<const Jet2> input, KanCache& cache, std::span<Jet2> out) const {
        if (static_cast<int>(input.size()) != n_inputs())
            throw std::invalid_argument("KanNetwork::forward_jets: input size mismatch");
        if (static_cast<int>(out.size()) != n_outputs())
            throw std::invalid_argument("KanNetwork::forward_jets: output size mismatch");
        const int k1 = spec_.order() + 1;
        const int nb = spec_.num_basis();
        cache.layers.resize(layers_.size());

        std::vector<Jet2> cur(input.begin(), input.end());
        for (int i = 0; i < n_inputs(); ++i) cur[static_cast<size_t>(i)] = input_affine.apply(i, cur[static_cast<size_t>(i)]);

        for (size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            auto& cl = cache.layers[l];
            cl.in.assign(cur.begin(), cur.end());
            cl.win.resize(static_cast<size_t>(layer.n_in));
            cl.basis.resize(static_cast<size_t>(layer.n_in) * 4 * k1);
            cl.act.resize(static_cast<size_t>(layer.n_in) * 4);
            cl.fsum.resize(static_cast<size_t>(layer.n_in) * layer.n_out * 4);

            for (int i = 0; i < layer.n_in; ++i) {
                const double xv = cl.in[static_cast<size_t>(i)].v;
                spec_.eval_window(xv, 3, cl.basis.data() + static_cast<size_t>(i) * 4 * k1);
                cl.win[static_cast<size_t>(i)] = spec_.window_begin(xv);
                silu_derivs(xv, cl.act.data() + static_cast<size_t>(i) * 4);
            }

            std::vector<Jet2> next(static_cast<size_t>(layer.n_out));
            for (int j = 0; j < layer.n_out; ++j) {
                Jet2 acc{0.0, 0.0, 0.0};
                for (int i = 0; i < layer.n_in; ++i) {
                    const size_t e = static_cast<size_t>(j) * layer.n_in + i;
                    const double* c = layer.coef.data() + e * nb + cl.win[static_cast<size_t>(i)];
                    const double* b = cl.basis.data() + static_cast<size_t>(i) * 4 * k1;
                    const double* sd = cl.act.data() + static_cast<size_t>(i) * 4;
                    double* f = cl.fsum.data() + e * 4;
                    for (int m = 0; m < 4; ++m) {
                        double acc_m = sd[m];
                        const double* bm = b + static_cast<size_t>(m) * k1;
                        for (int p = 0; p < k1; ++p) acc_m += c[p] * bm[p];
                        f[m] = acc_m;
                    }
                    const Jet2& x = cl.in[static_cast<size_t>(i)];
                    const double wji = layer.w[e];
                    acc.v += wji * f[0];
                    acc.d1 += wji * (f[1] * x.d1);
                    acc.d2 += wji * (f[2] * x.d1 * x.d1 + f[1] * x.d2);
                }
                next[static_cast<size_t>(j)] = acc;
            }
            cur.swap(next);
        }

        cache.out.resize(static_cast<size_t>(n_outputs()));
        for (int j = 0; j < n_outputs(); ++j) {
            cache.out[static_cast<size_t>(j)] = output_affine.apply(j, cur[static_cast<size_t>(j)]);
            out[j] = cache.out[static_cast<size_t>(j)];
        }
    }

    // Reverse sweep. out_adj[j] holds dL/d(out_j.v), dL/d(out_j.d1),
    // dL/d(out_j.d2) packed in a Jet2; grad accumulates dL/d(param) in
    // flatten order (call with a zeroed span for a fresh gradient).
    void backward(const KanCache& cache, std::span<const Jet2> out_adj, std::span<double> grad) const {
        if (static_cast<int>(out_adj.size()) != n_outputs())
            throw std::invalid_argument("KanNetwork::backward: adjoint size mismatch");
        if (static_cast<int>(grad.size()) != trainable_count())
            throw std::invalid_argument("KanNetwork::backward: gradient size mismatch");
        const int k1 = spec_.order() + 1;
        const int nb = spec_.num_basis();
        const int edge_stride = nb + 1;

        std::vector<Jet2> adj(static_cast<size_t>(n_outputs()));
        for (int j = 0; j < n_outputs(); ++j) {
            const double s = output_affine.scale[static_cast<size_t>(j)];
            adj[static_cast<size_t>(j)] = {s * out_adj[j].v, s * out_adj[j].d1, s * out_adj[j].d2};
        }

        // Flat offset of the first edge of each layer.
        std::vector<size_t> layer_base(layers_.size());
        {
            size_t pos = 0;
            for (size_t l = 0; l < layers_.size(); ++l) {
                layer_base[l] = pos;
                pos += layers_[l].w.size() * static_cast<size_t>(edge_stride);
            }
        }

        std::vector<Jet2> prev_adj;
        for (size_t li = layers_.size(); li-- > 0;) {
            const auto& layer = layers_[li];
            const auto& cl = cache.layers[li];
            prev_adj.assign(static_cast<size_t>(layer.n_in), Jet2{0.0, 0.0, 0.0});
            for (int j = 0; j < layer.n_out; ++j) {
                const Jet2& zb = adj[static_cast<size_t>(j)];
                if (zb.v == 0.0 && zb.d1 == 0.0 && zb.d2 == 0.0) continue;
                for (int i = 0; i < layer.n_in; ++i) {
                    const size_t e = static_cast<size_t>(j) * layer.n_in + i;
                    const double* f = cl.fsum.data() + e * 4;
                    const Jet2& x = cl.in[static_cast<size_t>(i)];
                    const double wji = layer.w[e];
                    const double x1sq = x.d1 * x.d1;
                    double* g = grad.data() + layer_base[li] + e * static_cast<size_t>(edge_stride);

                    if (train_w)
                        g[0] += zb.v * f[0] + zb.d1 * (f[1] * x.d1) +
                                zb.d2 * (f[2] * x1sq + f[1] * x.d2);

                    const double uv = wji * zb.v;
                    const double u1 = wji * zb.d1;
                    const double u2 = wji * zb.d2;

                    const double* b0 = cl.basis.data() + static_cast<size_t>(i) * 4 * k1;
                    const double* b1 = b0 + k1;
                    const double* b2 = b1 + k1;
                    double* gc = g + 1 + cl.win[static_cast<size_t>(i)];
                    for (int p = 0; p < k1; ++p)
                        gc[p] += uv * b0[p] + u1 * (b1[p] * x.d1) + u2 * (b2[p] * x1sq + b1[p] * x.d2);

                    Jet2& xb = prev_adj[static_cast<size_t>(i)];
                    xb.v += uv * f[1] + u1 * (f[2] * x.d1) + u2 * (f[3] * x1sq + f[2] * x.d2);
                    xb.d1 += u1 * f[1] + u2 * (2.0 * f[2] * x.d1);
                    xb.d2 += u2 * f[1];
                }
            }
            adj.swap(prev_adj);
        }
    }

    AffineMap input_affine;
    AffineMap output_affine;
    bool train_w = true;  // Eq-style phi keeps w trainable; flip to freeze it
    std::uint64_t init_seed = 0;

private:
    std::vector<int> shape_;
    SplineSpec spec_;
    std::vector<KanLayer> layers_;
};

// Single edge activation phi(x) = w * (silu(x) + spline(x)).
inline double phi_eval(const SplineSpec& spec, double w, std::span<const double> coeffs, double x) {
    return w * (silu(x) + spec.eval(coeffs, x, 0));
}

inline Jet2 phi_eval(const SplineSpec& spec, double w, std::span<const double> coeffs, const Jet2& x) {
    if (static_cast<int>(coeffs.size()) != spec.num_basis())
        throw std::invalid_argument("phi_eval: coefficient count mismatch");
    const double f0 = spec.eval(coeffs, x.v, 0);
    const double f1 = spec.eval(coeffs, x.v, 1);
    const double f2 = spec.eval(coeffs, x.v, 2);
    double sd[4];
    silu_derivs(x.v, sd);
    return w * compose(f0 + sd[0], f1 + sd[1], f2 + sd[2], x);
}

}  // namespace pikan
