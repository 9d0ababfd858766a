#include <doctest.h>

#include <cmath>

#include "ra/agents.hpp"
#include "ra/traffic.hpp"

using namespace ra;
using nn::Vec;

TEST_CASE("encoder width covers history, buffer and optional ids") {
    agents::ObsEncoder enc{8, 2, 5, false};
    CHECK(enc.width() == 5 * (3 + 2) + 1);
    agents::ObsEncoder with_ids{8, 2, 5, true};
    CHECK(with_ids.width() == 5 * (3 + 2) + 1 + 8);
}

TEST_CASE("live observation and trace reconstruction encode identically") {
    const int N = 3, M = 2, h = 3, K = 60;
    env::Environment e(env::EnvConfig{N, M, h, true, K});
    agents::ObsEncoder enc{N, M, h, true};
    auto traffic = traffic::RegularTraffic::uniform(N, 0.5);
    Rng rng(9);
    env::EpisodeTrace trace;
    e.apply_arrivals(traffic.sample(rng));
    for (int k = 0; k < K; ++k) {
        // Encode the live observation for every device at slot k.
        std::vector<Vec<float>> live(N);
        for (int n = 0; n < N; ++n) enc.encode<float>(e.observe(n), live[n]);

        std::vector<env::Action> a(N, 0);
        for (int n = 0; n < N; ++n)
            if (e.buffers()[n] && rng.bernoulli(0.5))
                a[n] = 1 + static_cast<env::Action>(rng.uniform_int(M));
        auto res = e.step(a, traffic.sample(rng));
        env::SlotRecord rec;
        rec.actions.assign(a.begin(), a.end());
        rec.feedback = res.feedback;
        rec.buffers = res.buffers_at_action;
        rec.reward = res.reward;
        trace.push_back(rec);

        Vec<float> rebuilt;
        for (int n = 0; n < N; ++n) {
            enc.encode_from_trace(trace, k, n, rebuilt);
            CHECK(rebuilt == live[n]);
        }
    }
}

TEST_CASE("boltzmann: symmetric values give the uniform distribution") {
    Vec<double> q = Vec<double>::Zero(3);
    for (double tau : {0.1, 1.0, 200.0}) {
        auto p = agents::boltzmann_probs(q, tau);
        for (double v : p) CHECK(v == doctest::Approx(1.0 / 3));
    }
}

TEST_CASE("boltzmann: direct evaluation at tau = 1") {
    Vec<double> q(2);
    q << 1.0, 0.0;
    auto p = agents::boltzmann_probs(q, 1.0);
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (e + 1)));
    CHECK(p[1] == doctest::Approx(1 / (e + 1)));
}

TEST_CASE("boltzmann: small temperatures approach the greedy policy") {
    Vec<double> q(3);
    q << 0.3, 1.1, -0.4;
    auto p = agents::boltzmann_probs(q, 1e-3);
    CHECK(p[1] > 0.999);
}

TEST_CASE("boltzmann probabilities form a distribution for extreme inputs") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        Vec<double> q(4);
        for (int a = 0; a < 4; ++a) q[a] = rng.uniform_range(-1e3, 1e3);
        const double tau = std::pow(10.0, rng.uniform_range(-3, 3));
        auto p = agents::boltzmann_probs(q, tau);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(std::isfinite(v));
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0));
    }
}

TEST_CASE("empty buffers force silence for every temperature and seed") {
    Rng rng(13);
    Vec<double> q(3);
    q << 10.0, 50.0, -3.0;
    for (int i = 0; i < 100; ++i)
        CHECK(agents::select_action(q, 0, 1.0, rng) == 0);
}

TEST_CASE("dqn target arithmetic") {
    Vec<double> qn(2);
    qn << 2.0, 1.0;
    CHECK(agents::dqn_target(1.0, 0.9, qn) == doctest::Approx(2.8));
    CHECK(agents::dqn_target(1.0, 0.0, qn) == doctest::Approx(1.0));
}

TEST_CASE("temperature schedule decays from start to floor") {
    agents::TauSchedule s;
    s.start = 200.0;
    s.floor_value = 0.1;
    s.total_slots = 60 * 100;
    s.k_beta = 100;
    CHECK(s.at_slot(0) == doctest::Approx(200.0));
    CHECK(s.at_slot(60 * 100 - 1) == doctest::Approx(0.1));
    double prev = 1e9;
    for (long long k = 0; k < s.total_slots; k += 100) {
        const double t = s.at_slot(k);
        CHECK(t <= prev + 1e-12);
        prev = t;
    }
}

TEST_CASE("replay keeps whole episodes FIFO and samples valid transitions") {
    agents::Replay rep(2);
    auto push_episode = [&](int len, float tag) {
        rep.begin_episode();
        for (int k = 0; k < len; ++k) {
            env::SlotRecord r;
            r.actions = {0};
            r.feedback = {0};
            r.buffers = {0};
            r.reward = tag;
            rep.push_slot(std::move(r));
        }
        rep.end_episode();
    };
    push_episode(5, 1.0f);
    push_episode(6, 2.0f);
    CHECK(rep.num_episodes() == 2);
    CHECK(rep.num_sampleable() == 11);
    push_episode(7, 3.0f); // evicts the first episode
    CHECK(rep.num_episodes() == 2);
    CHECK(rep.num_sampleable() == 13);
    CHECK(rep.episode(0)[0].reward == 2.0f);

    Rng rng(14);
    bool saw_terminal = false;
    for (int i = 0; i < 500; ++i) {
        auto ref = rep.sample(rng);
        CHECK(ref.episode >= 0);
        CHECK(ref.episode < 2);
        CHECK(ref.slot < static_cast<int>(rep.episode(ref.episode).size()));
        if (ref.terminal) {
            saw_terminal = true;
            CHECK(ref.slot + 1 == static_cast<int>(rep.episode(ref.episode).size()));
        }
    }
    CHECK(saw_terminal);
}

TEST_CASE("the newest slot of a live episode is not sampleable") {
    agents::Replay rep(4);
    rep.begin_episode();
    env::SlotRecord r;
    r.actions = {0};
    r.feedback = {0};
    r.buffers = {0};
    rep.push_slot(r);
    CHECK(rep.num_sampleable() == 0); // its successor state does not exist yet
    rep.push_slot(r);
    CHECK(rep.num_sampleable() == 1);
    Rng rng(15);
    for (int i = 0; i < 50; ++i) {
        auto ref = rep.sample(rng);
        CHECK(ref.slot == 0);
        CHECK(!ref.terminal);
    }
    rep.end_episode();
    CHECK(rep.num_sampleable() == 2);
}
