#pragma once

// Shared builders for learn-step tests: a scripted random episode inside a
// replay plus networks and contexts in either precision.

#include "ra/env.hpp"
#include "ra/learn.hpp"
#include "ra/traffic.hpp"

namespace ra::test {

template <class S>
struct LearnFixture {
    agents::ObsEncoder enc;
    nn::QNetwork<S> online, target;
    mix::QmixMixer<S> mixer, mixer_target;
    agents::Replay replay{16};
    learn::Context<S> ctx;

    LearnFixture(learn::Algo algo, int n_devices, int n_channels, int history,
                 bool recurrent, int episode_len, std::uint64_t seed,
                 int dense1 = 10, int hidden = 6) {
        enc.num_devices = n_devices;
        enc.num_channels = n_channels;
        enc.history_len = history;
        enc.use_agent_ids = false;

        Rng rng(seed);
        nn::QNetworkConfig qc;
        qc.input_width = enc.width();
        qc.num_actions = n_channels + 1;
        qc.recurrent = recurrent;
        qc.dense1_units = dense1;
        qc.hidden_units = hidden;
        online.init(qc, rng);
        target.init(qc, rng);

        env::Environment e(
            env::EnvConfig{n_devices, n_channels, history, false, episode_len});
        auto traffic = traffic::RegularTraffic::uniform(n_devices, 0.5);
        replay.begin_episode();
        e.apply_arrivals(traffic.sample(rng));
        for (int k = 0; k < episode_len; ++k) {
            std::vector<env::Action> actions(n_devices, 0);
            for (int n = 0; n < n_devices; ++n)
                if (e.buffers()[n] && rng.bernoulli(0.5))
                    actions[n] = 1 + static_cast<int>(rng.uniform_int(n_channels));
            auto res = e.step(actions, traffic.sample(rng));
            env::SlotRecord rec;
            rec.actions.assign(actions.begin(), actions.end());
            rec.feedback = res.feedback;
            rec.buffers = res.buffers_at_action;
            rec.reward = res.reward;
            replay.push_slot(std::move(rec));
        }
        replay.end_episode();

        ctx.algo = algo;
        ctx.encoder = &enc;
        ctx.replay = &replay;
        ctx.online = &online;
        ctx.target = &target;
        ctx.gamma = 0.9;
        ctx.num_devices = n_devices;
        ctx.bptt_chunk = 5;
        if (algo == learn::Algo::qmix) {
            mix::QmixConfig mc;
            mc.num_agents = n_devices;
            mc.state_width = enc.width() * n_devices;
            mc.embed = 6;
            mc.hyper_hidden = 5;
            mixer.init(mc, rng);
            mixer_target.init(mc, rng);
            ctx.mixer = &mixer;
            ctx.mixer_target = &mixer_target;
        }
    }
};

} // namespace ra::test
