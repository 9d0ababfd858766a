// Compares the serial reference learn-step kernel against the OpenMP one
// and reports steps/s plus a bit-exactness check between the two paths.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ra/config.hpp"
#include "ra/learn.hpp"
#include "ra/trainer.hpp"

using namespace ra;

namespace {

struct Fixture {
    train::TrainConfig cfg;
    agents::ObsEncoder enc;
    nn::QNetwork<train::real> online, target, grads;
    mix::QmixMixer<train::real> mixer, mixer_target, mixer_grads;
    agents::Replay replay{64};
    learn::Context<train::real> ctx;
    std::vector<learn::ItemScratch<train::real>> scratch;
    std::vector<agents::Replay::Ref> batch;
};

// Fills the replay with a scripted random episode so kernels have real data.
Fixture make_fixture(train::Algorithm algo, bool recurrent, int n_devices) {
    Fixture f;
    f.cfg.algorithm = algo;
    f.cfg.num_devices = n_devices;
    f.cfg.recurrent = recurrent;
    f.enc.num_devices = n_devices;
    f.enc.num_channels = f.cfg.num_channels;
    f.enc.history_len = f.cfg.history_len;
    f.enc.use_agent_ids = f.cfg.use_agent_ids;

    Rng rng(7);
    nn::QNetworkConfig qc;
    qc.input_width = f.enc.width();
    qc.num_actions = f.cfg.num_channels + 1;
    qc.recurrent = recurrent;
    f.online.init(qc, rng);
    f.target.init(qc, rng);
    f.grads.zero_like(f.online);

    env::Environment e(env::EnvConfig{n_devices, f.cfg.num_channels,
                                      f.cfg.history_len, f.cfg.use_agent_ids, 512});
    auto traffic = traffic::RegularTraffic::uniform(n_devices, 0.5);
    f.replay.begin_episode();
    e.apply_arrivals(traffic.sample(rng));
    for (int k = 0; k < 512; ++k) {
        std::vector<env::Action> actions(n_devices, 0);
        for (int n = 0; n < n_devices; ++n)
            if (e.buffers()[n] && rng.bernoulli(0.4))
                actions[n] = 1 + static_cast<int>(rng.uniform_int(f.cfg.num_channels));
        auto res = e.step(actions, traffic.sample(rng));
        env::SlotRecord rec;
        rec.actions.assign(actions.begin(), actions.end());
        rec.feedback = res.feedback;
        rec.buffers = res.buffers_at_action;
        rec.reward = res.reward;
        f.replay.push_slot(std::move(rec));
    }
    f.replay.end_episode();

    f.ctx.algo = algo == train::Algorithm::drqn  ? learn::Algo::drqn
                 : algo == train::Algorithm::vdn ? learn::Algo::vdn
                                                 : learn::Algo::qmix;
    f.ctx.encoder = &f.enc;
    f.ctx.replay = &f.replay;
    f.ctx.online = &f.online;
    f.ctx.target = &f.target;
    f.ctx.gamma = 0.95;
    f.ctx.num_devices = n_devices;
    f.ctx.bptt_chunk = 16;
    if (algo == train::Algorithm::qmix) {
        mix::QmixConfig mc;
        mc.num_agents = n_devices;
        mc.state_width = f.enc.width() * n_devices;
        f.mixer.init(mc, rng);
        f.mixer_target.init(mc, rng);
        f.mixer_grads.zero_like(f.mixer);
        f.ctx.mixer = &f.mixer;
        f.ctx.mixer_target = &f.mixer_target;
    }

    f.scratch.resize(32);
    for (auto& s : f.scratch) s.init(f.ctx);
    Rng srng(3);
    for (int i = 0; i < 32; ++i)
        f.batch.push_back(recurrent ? f.replay.sample_chunk_start(srng, 16)
                                    : f.replay.sample(srng));
    return f;
}

double time_steps(Fixture& f, learn::Exec exec, int iters) {
    mix::QmixMixer<train::real>* mg =
        f.ctx.mixer ? &f.mixer_grads : nullptr;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i)
        learn::batch_gradients(f.ctx, f.batch, f.scratch, f.grads, mg, exec);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / iters;
}

bool grads_equal(Fixture& f) {
    mix::QmixMixer<train::real>* mg = f.ctx.mixer ? &f.mixer_grads : nullptr;
    learn::batch_gradients(f.ctx, f.batch, f.scratch, f.grads, mg, learn::Exec::serial);
    nn::QNetwork<train::real> ref;
    ref.zero_like(f.online);
    ref.add(f.grads);
    learn::batch_gradients(f.ctx, f.batch, f.scratch, f.grads, mg, learn::Exec::openmp);
    auto a = ref.blocks();
    auto b = f.grads.blocks();
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(a[i].data(), b[i].data(), sizeof(train::real) * a[i].size()) != 0)
            return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    int iters = 50;
    if (argc > 1) iters = std::atoi(argv[1]);
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not available; both paths run serially\n");
#endif
    struct Case {
        const char* name;
        train::Algorithm algo;
        bool recurrent;
        int n;
    };
    const Case cases[] = {
        {"vdn  ff  N=8", train::Algorithm::vdn, false, 8},
        {"vdn  ff  N=20", train::Algorithm::vdn, false, 20},
        {"qmix ff  N=8", train::Algorithm::qmix, false, 8},
        {"vdn  gru N=8", train::Algorithm::vdn, true, 8},
    };
    for (const auto& c : cases) {
        Fixture f = make_fixture(c.algo, c.recurrent, c.n);
        const double ts = time_steps(f, learn::Exec::serial, c.recurrent ? iters / 10 + 1 : iters);
        const double tp = time_steps(f, learn::Exec::openmp, c.recurrent ? iters / 10 + 1 : iters);
        const bool ok = grads_equal(f);
        std::printf("%-14s serial %8.2f ms/step (%6.1f steps/s) | omp %8.2f ms/step "
                    "(%6.1f steps/s) | speedup %.2fx | bit-equal %s\n",
                    c.name, ts * 1e3, 1.0 / ts, tp * 1e3, 1.0 / tp, ts / tp,
                    ok ? "yes" : "NO");
    }
    return 0;
}
