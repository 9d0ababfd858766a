#include <doctest.h>

#include "ra/env.hpp"
#include "ra/rng.hpp"
#include "ra/traffic.hpp"

using namespace ra;
using env::Action;

namespace {

env::Environment make_env(int n, int m, int h = 2, bool ids = false, int horizon = 100) {
    return env::Environment(env::EnvConfig{n, m, h, ids, horizon});
}

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
    return std::vector<std::uint8_t>(v.begin(), v.end());
}

} // namespace

TEST_CASE("two transmitters on one channel collide") {
    auto e = make_env(2, 1);
    e.apply_arrivals(bits({1, 1}));
    auto r = e.step({1, 1}, bits({0, 0}));
    CHECK(r.feedback == env::FeedbackVector{0});
    CHECK(r.events.G(0, 0) == 0);
    CHECK(r.events.G(1, 0) == 0);
    CHECK(r.events.C(0, 0) == 1);
    CHECK(r.events.C(1, 0) == 1);
    CHECK(r.reward == 0.0f);
}

TEST_CASE("a lone transmitter succeeds") {
    auto e = make_env(2, 2);
    e.apply_arrivals(bits({1, 0}));
    auto r = e.step({2, 0}, bits({0, 0}));
    CHECK(r.feedback == env::FeedbackVector{0, 1});
    CHECK(r.events.G(0, 1) == 1);
    CHECK(r.reward == 1.0f);
    CHECK(e.buffers()[0] == 0); // success cleared the buffer
}

TEST_CASE("three devices, two channels, mixed outcome") {
    auto e = make_env(3, 2);
    e.apply_arrivals(bits({1, 1, 1}));
    auto r = e.step({1, 1, 2}, bits({0, 0, 0}));
    CHECK(r.feedback == env::FeedbackVector{0, 1});
    CHECK(r.reward == 1.0f);
    CHECK(r.events.C(0, 0) == 1);
    CHECK(r.events.C(1, 0) == 1);
    CHECK(r.events.G(2, 1) == 1);
}

TEST_CASE("exhaustive feedback and event oracle for small systems") {
    // Brute force over every joint action for N <= 4, M <= 2; checks the
    // feedback definition, G/C membership, disjointness and the team reward.
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 2; ++m) {
            const int num_actions = m + 1;
            long long total = 1;
            for (int i = 0; i < n; ++i) total *= num_actions;
            for (long long code = 0; code < total; ++code) {
                std::vector<Action> actions(n);
                long long c = code;
                for (int i = 0; i < n; ++i) {
                    actions[i] = static_cast<Action>(c % num_actions);
                    c /= num_actions;
                }
                auto e = make_env(n, m, 1);
                e.apply_arrivals(std::vector<std::uint8_t>(n, 1));
                auto r = e.step(actions, std::vector<std::uint8_t>(n, 0));

                int reward = 0;
                for (int ch = 0; ch < m; ++ch) {
                    int tx = 0;
                    for (int i = 0; i < n; ++i)
                        if (actions[i] == ch + 1) ++tx;
                    CHECK(r.feedback[ch] == (tx == 1 ? 1 : 0));
                }
                for (int i = 0; i < n; ++i) {
                    int row_sum = 0;
                    for (int ch = 0; ch < m; ++ch) {
                        const bool chose = actions[i] == ch + 1;
                        CHECK(r.events.G(i, ch) == (chose && r.feedback[ch] ? 1 : 0));
                        CHECK(r.events.C(i, ch) == (chose && !r.feedback[ch] ? 1 : 0));
                        CHECK(r.events.G(i, ch) * r.events.C(i, ch) == 0);
                        row_sum += r.events.G(i, ch) + r.events.C(i, ch);
                        reward += r.events.G(i, ch);
                    }
                    CHECK(row_sum <= 1);
                }
                CHECK(r.reward == static_cast<float>(reward));
            }
        }
    }
}

TEST_CASE("transmit with an empty buffer is a contract violation") {
    auto e = make_env(2, 1);
    CHECK_THROWS_AS(e.step({1, 0}, bits({0, 0})), std::logic_error);
}

TEST_CASE("fresh episode observation is zero-filled with arrival buffer bit") {
    auto e = make_env(2, 2, 3);
    e.apply_arrivals(bits({1, 0}));
    auto h0 = e.observe(0);
    auto h1 = e.observe(1);
    CHECK(h0.buffer == 1);
    CHECK(h1.buffer == 0);
    for (int j = 0; j < 3; ++j) {
        CHECK(h0.past_actions[j] == 0);
        CHECK(h0.past_feedback[j] == env::FeedbackVector{0, 0});
    }
    CHECK(h0.agent_id == -1);
}

TEST_CASE("inactive devices do not record broadcast feedback") {
    auto e = make_env(2, 1, 2);
    e.apply_arrivals(bits({1, 0})); // device 1 stays inactive
    e.step({1, 0}, bits({0, 1}));   // device 0 transmits alone -> F = [1]
    auto active = e.observe(0);
    auto inactive = e.observe(1);
    CHECK(active.past_feedback[1] == env::FeedbackVector{1});
    CHECK(inactive.past_feedback[1] == env::FeedbackVector{0});
    CHECK(inactive.past_actions[1] == 0);
}

TEST_CASE("history keeps the last h slots, oldest first") {
    auto e = make_env(1, 2, 2);
    e.apply_arrivals(bits({1}));
    e.step({1}, bits({1})); // slot 0: tx on ch1, success
    e.step({2}, bits({0})); // slot 1: tx on ch2, success
    auto h = e.observe(0);
    CHECK(h.past_actions == std::vector<Action>{1, 2});
    CHECK(h.past_feedback[0] == env::FeedbackVector{1, 0});
    CHECK(h.past_feedback[1] == env::FeedbackVector{0, 1});
}

TEST_CASE("deterministic episodes under a scripted stochastic policy") {
    auto run = [](std::uint64_t seed) {
        auto e = make_env(3, 2, 2, false, 200);
        Rng rng(seed);
        auto traffic = traffic::RegularTraffic::uniform(3, 0.4);
        e.reset(seed);
        e.apply_arrivals(traffic.sample(rng));
        std::vector<float> rewards;
        for (int k = 0; k < 200; ++k) {
            std::vector<Action> a(3, 0);
            for (int n = 0; n < 3; ++n)
                if (e.buffers()[n] && rng.bernoulli(0.5))
                    a[n] = 1 + static_cast<Action>(rng.uniform_int(2));
            rewards.push_back(e.step(a, traffic.sample(rng)).reward);
        }
        return rewards;
    };
    CHECK(run(7) == run(7));
    CHECK(run(7) != run(8));
}

TEST_CASE("packet accounting reconciles at episode end") {
    auto e = make_env(4, 2, 2, false, 300);
    Rng rng(11);
    auto traffic = traffic::RegularTraffic::uniform(4, 0.5);
    e.apply_arrivals(traffic.sample(rng));
    for (int k = 0; k < 300; ++k) {
        std::vector<Action> a(4, 0);
        for (int n = 0; n < 4; ++n)
            if (e.buffers()[n] && rng.bernoulli(0.6))
                a[n] = 1 + static_cast<Action>(rng.uniform_int(2));
        e.step(a, traffic.sample(rng));
    }
    long long buffered = 0;
    for (auto b : e.buffers()) buffered += b;
    const auto& c = e.counters();
    CHECK(c.arrived == c.succeeded + c.discarded + buffered);
}

TEST_CASE("per-slot reward equals the success-event total") {
    auto e = make_env(3, 2, 1);
    Rng rng(5);
    auto traffic = traffic::RegularTraffic::uniform(3, 0.7);
    e.apply_arrivals(traffic.sample(rng));
    for (int k = 0; k < 100; ++k) {
        std::vector<Action> a(3, 0);
        for (int n = 0; n < 3; ++n)
            if (e.buffers()[n] && rng.bernoulli(0.5))
                a[n] = 1 + static_cast<Action>(rng.uniform_int(2));
        auto r = e.step(a, traffic.sample(rng));
        float g_sum = 0;
        for (auto g : r.events.g) g_sum += g;
        CHECK(r.reward == g_sum);
    }
}

TEST_CASE("trace export carries slot, actions, feedback and reward") {
    env::EpisodeTrace trace;
    env::SlotRecord rec;
    rec.actions = {1, 0};
    rec.feedback = {1};
    rec.buffers = {1, 0};
    rec.reward = 1.0f;
    trace.push_back(rec);
    const std::string csv = env::trace_to_csv(trace, 2, 1);
    CHECK(csv.find("# slot,a0,a1,f0,reward") != std::string::npos);
    CHECK(csv.find("0,1,0,1,1") != std::string::npos);
}
