#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ra/agents.hpp"
#include "ra/mixers.hpp"
#include "ra/nn.hpp"

namespace ra::learn {

enum class Algo { drqn, vdn, qmix };

enum class Exec { serial, openmp };

// Read-only inputs shared by every batch item of one learning step.
template <class S>
struct Context {
    Algo algo = Algo::vdn;
    const agents::ObsEncoder* encoder = nullptr;
    const agents::Replay* replay = nullptr;
    const nn::QNetwork<S>* online = nullptr;
    const nn::QNetwork<S>* target = nullptr;
    const mix::QmixMixer<S>* mixer = nullptr;        // qmix only
    const mix::QmixMixer<S>* mixer_target = nullptr; // qmix only
    double gamma = 0.99;
    int num_devices = 1;
    int bptt_chunk = 64; // recurrent networks only
};

// Per-item gradient accumulator plus reusable scratch. One of these per
// batch position lets items run in parallel and still reduce in a fixed
// order, so results are identical for any thread count.
template <class S>
struct ItemScratch {
    nn::QNetwork<S> grads;
    mix::QmixMixer<S> mixer_grads;
    double loss = 0.0;
    bool mixer_used = false;

    // feedforward scratch
    std::vector<nn::Vec<S>> obs, obs_next, q, q_next;
    std::vector<nn::ForwardCache<S>> caches;
    nn::Vec<S> state, state_next, qsel, qmax_next, dqsel, dq_out, hidden_unused;

    void init(const Context<S>& ctx) {
        grads.zero_like(*ctx.online);
        if (ctx.algo == Algo::qmix) {
            mixer_grads.zero_like(*ctx.mixer);
            mixer_used = true;
        }
        const int N = ctx.num_devices;
        obs.resize(N);
        obs_next.resize(N);
        q.resize(N);
        q_next.resize(N);
        caches.resize(N);
        hidden_unused = nn::zero_hidden(*ctx.online);
    }

    void reset() {
        grads.set_zero();
        if (mixer_used) mixer_grads.set_zero();
        loss = 0.0;
    }
};

namespace detail {

// max over the actions actually available in the successor state: an empty
// buffer pins the device to action 0.
template <class S>
double masked_max(const nn::Vec<S>& q, std::uint8_t buffer) {
    return buffer ? static_cast<double>(q.maxCoeff()) : static_cast<double>(q[0]);
}

template <class S>
void concat_obs(const std::vector<nn::Vec<S>>& obs, nn::Vec<S>& out) {
    const Eigen::Index w = obs[0].size();
    out.resize(w * static_cast<Eigen::Index>(obs.size()));
    for (size_t n = 0; n < obs.size(); ++n)
        out.segment(static_cast<Eigen::Index>(n) * w, w) = obs[n];
}

// One transition, feedforward network.
template <class S>
void item_feedforward(const Context<S>& ctx, agents::Replay::Ref ref,
                      ItemScratch<S>& ws) {
    const auto& trace = ctx.replay->episode(ref.episode);
    const int k = ref.slot;
    const int N = ctx.num_devices;
    const double r = trace[k].reward;

    for (int n = 0; n < N; ++n) {
        ctx.encoder->encode_from_trace(trace, k, n, ws.obs[n]);
        nn::forward(*ctx.online, ws.obs[n], ws.hidden_unused, ws.q[n], &ws.caches[n]);
    }
    if (!ref.terminal) {
        for (int n = 0; n < N; ++n) {
            ctx.encoder->encode_from_trace(trace, k + 1, n, ws.obs_next[n]);
            nn::forward(*ctx.target, ws.obs_next[n], ws.hidden_unused, ws.q_next[n]);
        }
    }

    ws.qsel.resize(N);
    ws.qmax_next.resize(N);
    for (int n = 0; n < N; ++n) {
        ws.qsel[n] = ws.q[n][trace[k].actions[n]];
        ws.qmax_next[n] = ref.terminal
                              ? S(0)
                              : static_cast<S>(masked_max(ws.q_next[n],
                                                          trace[k + 1].buffers[n]));
    }

    ws.dqsel.setZero(N);
    if (ctx.algo == Algo::drqn) {
        for (int n = 0; n < N; ++n) {
            const double y = ref.terminal
                                 ? r
                                 : r + ctx.gamma * static_cast<double>(ws.qmax_next[n]);
            const double delta = static_cast<double>(ws.qsel[n]) - y;
            ws.loss += delta * delta;
            ws.dqsel[n] = static_cast<S>(2.0 * delta);
        }
    } else if (ctx.algo == Algo::vdn) {
        const double qtot = static_cast<double>(mix::vdn_mix(ws.qsel));
        double y = r;
        if (!ref.terminal)
            y += ctx.gamma * static_cast<double>(ws.qmax_next.sum());
        const double delta = qtot - y;
        ws.loss += delta * delta;
        for (int n = 0; n < N; ++n) ws.dqsel[n] = static_cast<S>(2.0 * delta);
    } else {
        concat_obs(ws.obs, ws.state);
        typename mix::QmixMixer<S>::Cache mc;
        const double qtot =
            static_cast<double>(ctx.mixer->mix(ws.qsel, ws.state, &mc));
        double y = r;
        if (!ref.terminal) {
            concat_obs(ws.obs_next, ws.state_next);
            y += ctx.gamma * static_cast<double>(
                                 ctx.mixer_target->mix(ws.qmax_next, ws.state_next));
        }
        const double delta = qtot - y;
        ws.loss += delta * delta;
        ctx.mixer->backward(mc, static_cast<S>(2.0 * delta), ws.mixer_grads, ws.dqsel);
    }

    for (int n = 0; n < N; ++n) {
        if (ws.dqsel[n] == S(0)) continue;
        ws.dq_out.setZero(ctx.online->cfg.num_actions);
        ws.dq_out[trace[k].actions[n]] = ws.dqsel[n];
        nn::backward_step(*ctx.online, ws.caches[n], ws.dq_out, ws.grads);
    }
}

// One BPTT chunk, recurrent network. Hidden states start at zero at the
// chunk boundary; the target network is unrolled over the same window so its
// hidden state stays aligned with the online one.
template <class S>
void item_recurrent(const Context<S>& ctx, agents::Replay::Ref start,
                    ItemScratch<S>& ws) {
    const auto& trace = ctx.replay->episode(start.episode);
    const int len = static_cast<int>(trace.size());
    const bool finished = ctx.replay->episode_finished(start.episode);
    const int usable = finished ? len : len - 1; // last live slot lacks s'
    const int s0 = start.slot;
    const int T = std::min(ctx.bptt_chunk, usable - s0);
    if (T <= 0) return;
    const int N = ctx.num_devices;
    const int A = ctx.online->cfg.num_actions;

    // [t][n] storage
    std::vector<std::vector<nn::Vec<S>>> obs(T + 1, std::vector<nn::Vec<S>>(N));
    std::vector<std::vector<nn::Vec<S>>> q(T, std::vector<nn::Vec<S>>(N));
    std::vector<std::vector<nn::Vec<S>>> qt(T + 1, std::vector<nn::Vec<S>>(N));
    std::vector<std::vector<nn::ForwardCache<S>>> caches(
        T, std::vector<nn::ForwardCache<S>>(N));

    for (int t = 0; t <= T; ++t) {
        const int slot = s0 + t;
        if (slot >= len) break;
        for (int n = 0; n < N; ++n)
            ctx.encoder->encode_from_trace(trace, slot, n, obs[t][n]);
    }

    for (int n = 0; n < N; ++n) {
        nn::Vec<S> h = nn::zero_hidden(*ctx.online);
        for (int t = 0; t < T; ++t)
            nn::forward(*ctx.online, obs[t][n], h, q[t][n], &caches[t][n]);
        nn::Vec<S> ht = nn::zero_hidden(*ctx.target);
        for (int t = 0; t <= T && s0 + t < len; ++t)
            nn::forward(*ctx.target, obs[t][n], ht, qt[t][n]);
    }

    // Per-step TD errors and output gradients.
    std::vector<std::vector<nn::Vec<S>>> dq(T, std::vector<nn::Vec<S>>(N));
    nn::Vec<S> qsel(N), qmax(N), dqsel(N), state, state_next;
    for (int t = 0; t < T; ++t) {
        const int slot = s0 + t;
        const bool terminal = finished && (slot == len - 1);
        const double r = trace[slot].reward;
        for (int n = 0; n < N; ++n) {
            qsel[n] = q[t][n][trace[slot].actions[n]];
            qmax[n] = terminal ? S(0)
                               : static_cast<S>(masked_max(qt[t + 1][n],
                                                           trace[slot + 1].buffers[n]));
        }
        dqsel.setZero(N);
        if (ctx.algo == Algo::drqn) {
            for (int n = 0; n < N; ++n) {
                const double y =
                    terminal ? r : r + ctx.gamma * static_cast<double>(qmax[n]);
                const double delta = static_cast<double>(qsel[n]) - y;
                ws.loss += delta * delta;
                dqsel[n] = static_cast<S>(2.0 * delta);
            }
        } else if (ctx.algo == Algo::vdn) {
            const double qtot = static_cast<double>(mix::vdn_mix(qsel));
            double y = r;
            if (!terminal) y += ctx.gamma * static_cast<double>(qmax.sum());
            const double delta = qtot - y;
            ws.loss += delta * delta;
            for (int n = 0; n < N; ++n) dqsel[n] = static_cast<S>(2.0 * delta);
        } else {
            concat_obs(obs[t], state);
            typename mix::QmixMixer<S>::Cache mc;
            const double qtot = static_cast<double>(ctx.mixer->mix(qsel, state, &mc));
            double y = r;
            if (!terminal) {
                concat_obs(obs[t + 1], state_next);
                y += ctx.gamma *
                     static_cast<double>(ctx.mixer_target->mix(qmax, state_next));
            }
            const double delta = qtot - y;
            ws.loss += delta * delta;
            ctx.mixer->backward(mc, static_cast<S>(2.0 * delta), ws.mixer_grads, dqsel);
        }
        for (int n = 0; n < N; ++n) {
            dq[t][n].setZero(A);
            dq[t][n][trace[slot].actions[n]] = dqsel[n];
        }
    }

    // Backward through time, one agent chain at a time.
    for (int n = 0; n < N; ++n) {
        nn::Vec<S> dh = nn::zero_hidden(*ctx.online);
        for (int t = T - 1; t >= 0; --t)
            nn::backward_step_recurrent(*ctx.online, caches[t][n], dq[t][n], dh,
                                        ws.grads);
    }
}

} // namespace detail

template <class S>
void compute_item(const Context<S>& ctx, agents::Replay::Ref ref, ItemScratch<S>& ws) {
    ws.reset();
    if (ctx.online->cfg.recurrent)
        detail::item_recurrent(ctx, ref, ws);
    else
        detail::item_feedforward(ctx, ref, ws);
}

// One gradient step over a minibatch: per-item gradients (serial reference
// or OpenMP over items) followed by an ordered reduction, so both execution
// modes produce bit-identical sums. Returns the summed squared-error loss;
// gradients land in `grad_net` / `grad_mixer`.
template <class S>
double batch_gradients(const Context<S>& ctx,
                       const std::vector<agents::Replay::Ref>& batch,
                       std::vector<ItemScratch<S>>& scratch,
                       nn::QNetwork<S>& grad_net,
                       std::type_identity_t<mix::QmixMixer<S>>* grad_mixer,
                       Exec exec) {
    const int B = static_cast<int>(batch.size());
    if (static_cast<int>(scratch.size()) < B)
        throw std::invalid_argument("scratch pool smaller than batch");

    if (exec == Exec::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < B; ++i) compute_item(ctx, batch[i], scratch[i]);
#else
        for (int i = 0; i < B; ++i) compute_item(ctx, batch[i], scratch[i]);
#endif
    } else {
        for (int i = 0; i < B; ++i) compute_item(ctx, batch[i], scratch[i]);
    }

    grad_net.set_zero();
    if (grad_mixer) grad_mixer->set_zero();
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        grad_net.add(scratch[i].grads);
        if (grad_mixer) grad_mixer->add(scratch[i].mixer_grads);
        loss += scratch[i].loss;
    }
    return loss;
}

} // namespace ra::learn
