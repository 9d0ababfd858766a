#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ra/nn.hpp"

namespace ra::mix {

// Parameter-free additive joint value: Q_tot = sum_n Q_n.
template <class S>
S vdn_mix(const nn::Vec<S>& per_agent_q) {
    return per_agent_q.sum();
}

template <class S>
S elu(S x) {
    return x > S(0) ? x : std::expm1(x);
}
template <class S>
S elu_grad(S x) {
    return x > S(0) ? S(1) : std::exp(x);
}

struct QmixConfig {
    int num_agents = 2;
    int state_width = 1;
    int embed = 32;
    int hyper_hidden = 32;

    bool operator==(const QmixConfig&) const = default;
};

// Monotonic mixing network. State-conditioned weights come out of a
// one-hidden-layer hypernetwork and pass through |.|, which enforces
// dQ_tot/dQ_a >= 0 for every reachable parameter setting:
//   t  = tanh(Ht s + hb)
//   W1 = |w1(t)| reshaped embed x N,  b1 = b1(t)
//   e  = elu(W1 q + b1)
//   W2 = |w2(t)|,                     b2 = b2(t)
//   Q_tot = W2 . e + b2
template <class S>
struct QmixMixer {
    QmixConfig cfg;
    nn::Linear<S> hyper_trunk; // state -> hyper_hidden, tanh
    nn::Linear<S> hyper_w1;    // -> embed * num_agents
    nn::Linear<S> hyper_b1;    // -> embed
    nn::Linear<S> hyper_w2;    // -> embed
    nn::Linear<S> hyper_b2;    // -> 1

    void init(const QmixConfig& c, Rng& rng) {
        cfg = c;
        hyper_trunk.init(c.hyper_hidden, c.state_width, rng);
        hyper_w1.init(c.embed * c.num_agents, c.hyper_hidden, rng);
        hyper_b1.init(c.embed, c.hyper_hidden, rng);
        hyper_w2.init(c.embed, c.hyper_hidden, rng);
        hyper_b2.init(1, c.hyper_hidden, rng);
    }

    void zero_like(const QmixMixer& o) {
        cfg = o.cfg;
        hyper_trunk.zero_like(o.hyper_trunk);
        hyper_w1.zero_like(o.hyper_w1);
        hyper_b1.zero_like(o.hyper_b1);
        hyper_w2.zero_like(o.hyper_w2);
        hyper_b2.zero_like(o.hyper_b2);
    }

    void set_zero() {
        for (auto& b : blocks()) {
            if (b.mat) b.mat->setZero();
            if (b.vec) b.vec->setZero();
        }
    }

    std::vector<nn::ParamBlock<S>> blocks() {
        return {
            {"mixer.trunk.W", &hyper_trunk.W, nullptr},
            {"mixer.trunk.b", nullptr, &hyper_trunk.b},
            {"mixer.w1.W", &hyper_w1.W, nullptr},
            {"mixer.w1.b", nullptr, &hyper_w1.b},
            {"mixer.b1.W", &hyper_b1.W, nullptr},
            {"mixer.b1.b", nullptr, &hyper_b1.b},
            {"mixer.w2.W", &hyper_w2.W, nullptr},
            {"mixer.w2.b", nullptr, &hyper_w2.b},
            {"mixer.b2.W", &hyper_b2.W, nullptr},
            {"mixer.b2.b", nullptr, &hyper_b2.b},
        };
    }

    void add(const QmixMixer& other) {
        auto a = blocks();
        auto b = const_cast<QmixMixer&>(other).blocks();
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i].mat)
                *a[i].mat += *b[i].mat;
            else
                *a[i].vec += *b[i].vec;
        }
    }

    struct Cache {
        nn::Vec<S> state, q, trunk;     // trunk = tanh activation
        nn::Vec<S> w1_raw, b1, w2_raw;  // pre-|.| weights
        nn::Vec<S> b2;
        nn::Vec<S> pre_e, e;            // mixing hidden layer
    };

    S mix(const nn::Vec<S>& q, const nn::Vec<S>& state, Cache* cache = nullptr) const {
        if (q.size() != cfg.num_agents) throw std::invalid_argument("qmix: bad q size");
        if (state.size() != cfg.state_width)
            throw std::invalid_argument("qmix: bad state width");
        nn::Vec<S> trunk = hyper_trunk.W * state + hyper_trunk.b;
        trunk = trunk.array().tanh().matrix();
        nn::Vec<S> w1_raw = hyper_w1.W * trunk + hyper_w1.b;
        nn::Vec<S> b1 = hyper_b1.W * trunk + hyper_b1.b;
        nn::Vec<S> w2_raw = hyper_w2.W * trunk + hyper_w2.b;
        nn::Vec<S> b2 = hyper_b2.W * trunk + hyper_b2.b;

        nn::Vec<S> pre_e = b1;
        for (int i = 0; i < cfg.embed; ++i) {
            S acc = S(0);
            for (int n = 0; n < cfg.num_agents; ++n)
                acc += std::abs(w1_raw[i * cfg.num_agents + n]) * q[n];
            pre_e[i] += acc;
        }
        nn::Vec<S> e(cfg.embed);
        for (int i = 0; i < cfg.embed; ++i) e[i] = elu(pre_e[i]);
        S qtot = b2[0];
        for (int i = 0; i < cfg.embed; ++i) qtot += std::abs(w2_raw[i]) * e[i];
        if (cache) {
            cache->state = state;
            cache->q = q;
            cache->trunk = trunk;
            cache->w1_raw = w1_raw;
            cache->b1 = b1;
            cache->w2_raw = w2_raw;
            cache->b2 = b2;
            cache->pre_e = pre_e;
            cache->e = e;
        }
        return qtot;
    }

    // Backward pass: given dL/dQ_tot, accumulates parameter gradients and
    // returns dL/dq (the per-agent value gradients that continue into the
    // shared network). sign(0) is taken as 0.
    void backward(const Cache& c, S dqtot, QmixMixer& grads, nn::Vec<S>& dq) const {
        const int N = cfg.num_agents;
        const int E = cfg.embed;
        auto sign = [](S v) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); };

        nn::Vec<S> de(E), dw2_raw(E), db2(1), dpre(E), db1(E), dw1_raw(E * N);
        db2[0] = dqtot;
        dq.setZero(N);
        for (int i = 0; i < E; ++i) {
            const S w2 = std::abs(c.w2_raw[i]);
            de[i] = dqtot * w2;
            dw2_raw[i] = dqtot * c.e[i] * sign(c.w2_raw[i]);
            dpre[i] = de[i] * elu_grad(c.pre_e[i]);
            db1[i] = dpre[i];
            for (int n = 0; n < N; ++n) {
                const S w1r = c.w1_raw[i * N + n];
                dw1_raw[i * N + n] = dpre[i] * c.q[n] * sign(w1r);
                dq[n] += dpre[i] * std::abs(w1r);
            }
        }

        // Through the hypernetwork heads into the shared trunk.
        nn::Vec<S> dtrunk = nn::Vec<S>::Zero(cfg.hyper_hidden);
        grads.hyper_w1.W.noalias() += dw1_raw * c.trunk.transpose();
        grads.hyper_w1.b += dw1_raw;
        dtrunk.noalias() += hyper_w1.W.transpose() * dw1_raw;
        grads.hyper_b1.W.noalias() += db1 * c.trunk.transpose();
        grads.hyper_b1.b += db1;
        dtrunk.noalias() += hyper_b1.W.transpose() * db1;
        grads.hyper_w2.W.noalias() += dw2_raw * c.trunk.transpose();
        grads.hyper_w2.b += dw2_raw;
        dtrunk.noalias() += hyper_w2.W.transpose() * dw2_raw;
        grads.hyper_b2.W.noalias() += db2 * c.trunk.transpose();
        grads.hyper_b2.b += db2;
        dtrunk.noalias() += hyper_b2.W.transpose() * db2;

        nn::Vec<S> dz = dtrunk.cwiseProduct(
            nn::Vec<S>::Ones(c.trunk.size()) - c.trunk.cwiseProduct(c.trunk));
        grads.hyper_trunk.W.noalias() += dz * c.state.transpose();
        grads.hyper_trunk.b += dz;
    }
};

} // namespace ra::mix
