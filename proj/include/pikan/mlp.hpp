#pragma once

// Conventional MLP with tanh hidden activations and a linear output layer.
// Shares the evaluation contract of KanNetwork (plain or jet-valued forward,
// reverse sweep for parameter gradients) so the trainer can use either.
// tanh rather than ReLU: the physics residual needs a C^2 network output.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pikan/common.hpp"
#include "pikan/jet.hpp"

namespace pikan {

struct MlpTransition {
    int n_in = 0;
    int n_out = 0;
    std::vector<double> weight;  // [n_out * n_in], row-major by output
    std::vector<double> bias;    // [n_out]
};

struct MlpCache {
    struct Layer {
        std::vector<Jet2> in;    // activations entering the transition
        std::vector<Jet2> pre;   // pre-activation jets
        std::vector<double> th;  // tanh derivs 0..3 per unit (hidden only)
    };
    std::vector<Layer> layers;
    std::vector<Jet2> out;
};

class MlpNetwork {
public:
    using Cache = MlpCache;

    explicit MlpNetwork(std::vector<int> widths) : widths_(std::move(widths)) {
        if (widths_.size() < 2) throw std::invalid_argument("MlpNetwork: need >= 2 widths");
        for (int w : widths_)
            if (w < 1) throw std::invalid_argument("MlpNetwork: every width must be >= 1");
        trans_.resize(widths_.size() - 1);
        for (size_t l = 0; l < trans_.size(); ++l) {
            trans_[l].n_in = widths_[l];
            trans_[l].n_out = widths_[l + 1];
            trans_[l].weight.assign(static_cast<size_t>(widths_[l]) * widths_[l + 1], 0.0);
            trans_[l].bias.assign(static_cast<size_t>(widths_[l + 1]), 0.0);
        }
        input_affine = AffineMap::identity(widths_.front());
        output_affine = AffineMap::identity(widths_.back());
    }

    // Xavier-uniform weights, zero biases.
    static MlpNetwork init(std::vector<int> widths, std::uint64_t seed) {
        MlpNetwork net(std::move(widths));
        std::mt19937_64 rng(seed);
        for (auto& tr : net.trans_) {
            const double bound = std::sqrt(6.0 / (tr.n_in + tr.n_out));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (double& w : tr.weight) w = dist(rng);
        }
        net.init_seed = seed;
        return net;
    }

    const std::vector<int>& widths() const { return widths_; }
    const std::vector<MlpTransition>& transitions() const { return trans_; }
    int n_inputs() const { return widths_.front(); }
    int n_outputs() const { return widths_.back(); }

    int param_count() const {
        int n = 0;
        for (const auto& tr : trans_) n += tr.n_in * tr.n_out + tr.n_out;
        return n;
    }
    int trainable_count() const { return param_count(); }

    // Flatten order: transition-major; weights row-major, then biases.
    ParamVector flatten() const {
        ParamVector p(static_cast<size_t>(param_count()));
        flatten(p);
        return p;
    }

    void flatten(std::span<double> out) const {
        if (static_cast<int>(out.size()) != param_count())
            throw std::invalid_argument("MlpNetwork::flatten: bad output length");
        size_t pos = 0;
        for (const auto& tr : trans_) {
            for (double w : tr.weight) out[pos++] = w;
            for (double b : tr.bias) out[pos++] = b;
        }
    }

    void unflatten(std::span<const double> p) {
        if (static_cast<int>(p.size()) != param_count())
            throw std::invalid_argument("MlpNetwork::unflatten: expected " +
                                        std::to_string(param_count()) + " values, got " +
                                        std::to_string(p.size()));
        size_t pos = 0;
        for (auto& tr : trans_) {
            for (double& w : tr.weight) w = p[pos++];
            for (double& b : tr.bias) b = p[pos++];
        }
    }

    std::vector<double> forward(std::span<const double> input) const {
        if (static_cast<int>(input.size()) != n_inputs())
            throw std::invalid_argument("MlpNetwork::forward: input size mismatch");
        std::vector<double> cur(input.begin(), input.end());
        for (int i = 0; i < n_inputs(); ++i) cur[static_cast<size_t>(i)] = input_affine.apply(i, cur[static_cast<size_t>(i)]);
        std::vector<double> next;
        for (size_t l = 0; l < trans_.size(); ++l) {
            const auto& tr = trans_[l];
            next.assign(static_cast<size_t>(tr.n_out), 0.0);
            for (int j = 0; j < tr.n_out; ++j) {
                double acc = tr.bias[static_cast<size_t>(j)];
                const double* wrow = tr.weight.data() + static_cast<size_t>(j) * tr.n_in;
                for (int i = 0; i < tr.n_in; ++i) acc += wrow[i] * cur[static_cast<size_t>(i)];
                next[static_cast<size_t>(j)] = (l + 1 < trans_.size()) ? std::tanh(acc) : acc;
            }
            cur.swap(next);
        }
        for (int j = 0; j < n_outputs(); ++j) cur[static_cast<size_t>(j)] = output_affine.apply(j, cur[static_cast<size_t>(j)]);
        return cur;
    }

    std::vector<Jet2> forward(std::span<const Jet2> input) const {
        MlpCache cache;
        std::vector<Jet2> out(static_cast<size_t>(n_outputs()));
        forward_jets(input, cache, out);
        return out;
    }

    void forward_jets(std::span<const Jet2> input, MlpCache& cache, std::span<Jet2> out) const {
        if (static_cast<int>(input.size()) != n_inputs())
            throw std::invalid_argument("MlpNetwork::forward_jets: input size mismatch");
        if (static_cast<int>(out.size()) != n_outputs())
            throw std::invalid_argument("MlpNetwork::forward_jets: output size mismatch");
        cache.layers.resize(trans_.size());
        std::vector<Jet2> cur(input.begin(), input.end());
        for (int i = 0; i < n_inputs(); ++i) cur[static_cast<size_t>(i)] = input_affine.apply(i, cur[static_cast<size_t>(i)]);
        for (size_t l = 0; l < trans_.size(); ++l) {
            const auto& tr = trans_[l];
            auto& cl = cache.layers[l];
            const bool hidden = l + 1 < trans_.size();
            cl.in.assign(cur.begin(), cur.end());
            cl.pre.resize(static_cast<size_t>(tr.n_out));
            cl.th.resize(hidden ? static_cast<size_t>(tr.n_out) * 4 : 0);
            std::vector<Jet2> next(static_cast<size_t>(tr.n_out));
            for (int j = 0; j < tr.n_out; ++j) {
                Jet2 acc{tr.bias[static_cast<size_t>(j)], 0.0, 0.0};
                const double* wrow = tr.weight.data() + static_cast<size_t>(j) * tr.n_in;
                for (int i = 0; i < tr.n_in; ++i) {
                    const Jet2& x = cl.in[static_cast<size_t>(i)];
                    acc.v += wrow[i] * x.v;
                    acc.d1 += wrow[i] * x.d1;
                    acc.d2 += wrow[i] * x.d2;
                }
                cl.pre[static_cast<size_t>(j)] = acc;
                if (hidden) {
                    double* th = cl.th.data() + static_cast<size_t>(j) * 4;
                    tanh_derivs(acc.v, th);
                    next[static_cast<size_t>(j)] = compose(th[0], th[1], th[2], acc);
                } else {
                    next[static_cast<size_t>(j)] = acc;
                }
            }
            cur.swap(next);
        }
        cache.out.resize(static_cast<size_t>(n_outputs()));
        for (int j = 0; j < n_outputs(); ++j) {
            cache.out[static_cast<size_t>(j)] = output_affine.apply(j, cur[static_cast<size_t>(j)]);
            out[j] = cache.out[static_cast<size_t>(j)];
        }
    }

    // Reverse sweep matching forward_jets; grad accumulates in flatten order.
    void backward(const MlpCache& cache, std::span<const Jet2> out_adj, std::span<double> grad) const {
        if (static_cast<int>(out_adj.size()) != n_outputs())
            throw std::invalid_argument("MlpNetwork::backward: adjoint size mismatch");
        if (static_cast<int>(grad.size()) != param_count())
            throw std::invalid_argument("MlpNetwork::backward: gradient size mismatch");

        std::vector<size_t> base(trans_.size());
        {
            size_t pos = 0;
            for (size_t l = 0; l < trans_.size(); ++l) {
                base[l] = pos;
                pos += trans_[l].weight.size() + trans_[l].bias.size();
            }
        }

        std::vector<Jet2> adj(static_cast<size_t>(n_outputs()));
        for (int j = 0; j < n_outputs(); ++j) {
            const double s = output_affine.scale[static_cast<size_t>(j)];
            adj[static_cast<size_t>(j)] = {s * out_adj[j].v, s * out_adj[j].d1, s * out_adj[j].d2};
        }

        std::vector<Jet2> prev;
        for (size_t li = trans_.size(); li-- > 0;) {
            const auto& tr = trans_[li];
            const auto& cl = cache.layers[li];
            const bool hidden = li + 1 < trans_.size();

            // Through the activation: adj currently holds d/d(post-activation).
            std::vector<Jet2> zadj(static_cast<size_t>(tr.n_out));
            if (hidden) {
                for (int j = 0; j < tr.n_out; ++j) {
                    const Jet2& a = adj[static_cast<size_t>(j)];
                    const Jet2& z = cl.pre[static_cast<size_t>(j)];
                    const double* th = cl.th.data() + static_cast<size_t>(j) * 4;
                    Jet2 zb;
                    zb.v = a.v * th[1] + a.d1 * th[2] * z.d1 + a.d2 * (th[3] * z.d1 * z.d1 + th[2] * z.d2);
                    zb.d1 = a.d1 * th[1] + a.d2 * 2.0 * th[2] * z.d1;
                    zb.d2 = a.d2 * th[1];
                    zadj[static_cast<size_t>(j)] = zb;
                }
            } else {
                zadj.assign(adj.begin(), adj.end());
            }

            prev.assign(static_cast<size_t>(tr.n_in), Jet2{0.0, 0.0, 0.0});
            double* gw = grad.data() + base[li];
            double* gb = gw + tr.weight.size();
            for (int j = 0; j < tr.n_out; ++j) {
                const Jet2& zb = zadj[static_cast<size_t>(j)];
                const double* wrow = tr.weight.data() + static_cast<size_t>(j) * tr.n_in;
                double* gwrow = gw + static_cast<size_t>(j) * tr.n_in;
                gb[j] += zb.v;  // bias enters the value component only
                for (int i = 0; i < tr.n_in; ++i) {
                    const Jet2& x = cl.in[static_cast<size_t>(i)];
                    gwrow[i] += zb.v * x.v + zb.d1 * x.d1 + zb.d2 * x.d2;
                    Jet2& xb = prev[static_cast<size_t>(i)];
                    xb.v += wrow[i] * zb.v;
                    xb.d1 += wrow[i] * zb.d1;
                    xb.d2 += wrow[i] * zb.d2;
                }
            }
            adj.swap(prev);
        }
    }

    AffineMap input_affine;
    AffineMap output_affine;
    std::uint64_t init_seed = 0;

private:
    std::vector<int> widths_;
    std::vector<MlpTransition> trans_;
};

}  // namespace pikan
