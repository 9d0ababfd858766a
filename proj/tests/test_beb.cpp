#include <doctest.h>

#include <cmath>

#include "ra/beb.hpp"
#include "ra/env.hpp"

using namespace ra;

TEST_CASE("empty buffer never transmits and leaves the counter alone") {
    beb::BackoffState s;
    s.counter = 3;
    Rng rng(1);
    CHECK(beb::beb_act(s, 0, 2, rng) == 0);
    CHECK(s.counter == 3);
}

TEST_CASE("positive counter counts down silently") {
    beb::BackoffState s;
    s.counter = 3;
    Rng rng(1);
    CHECK(beb::beb_act(s, 1, 2, rng) == 0);
    CHECK(s.counter == 2);
}

TEST_CASE("expired counter transmits on a uniform channel") {
    beb::BackoffState s;
    Rng rng(2);
    int ch1 = 0, ch2 = 0;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) {
        s.counter = 0;
        const auto a = beb::beb_act(s, 1, 2, rng);
        REQUIRE(a >= 1);
        REQUIRE(a <= 2);
        (a == 1 ? ch1 : ch2)++;
    }
    const double f = static_cast<double>(ch1) / draws;
    CHECK(std::fabs(f - 0.5) < 3.0 * std::sqrt(0.25 / draws));
}

TEST_CASE("window doubles on collision and resets on success") {
    beb::BackoffParams p; // cw_min 2, cw_max 1024, factor 2
    beb::BackoffState s;
    Rng rng(3);
    for (int i = 0; i < 3; ++i) beb::beb_update(s, beb::Outcome::collision, p, rng);
    CHECK(s.contention_window == 16); // 2 * 2^3
    CHECK(s.collisions == 3);
    beb::beb_update(s, beb::Outcome::success, p, rng);
    CHECK(s.contention_window == 2);
    CHECK(s.counter == 0);
    CHECK(s.collisions == 0);
}

TEST_CASE("window stays inside [cw_min, cw_max] under any outcome sequence") {
    beb::BackoffParams p;
    beb::BackoffState s;
    Rng rng(4);
    for (int i = 0; i < 5000; ++i) {
        beb::beb_update(s, rng.bernoulli(0.7) ? beb::Outcome::collision
                                              : beb::Outcome::success,
                        p, rng);
        CHECK(s.contention_window >= p.cw_min);
        CHECK(s.contention_window <= p.cw_max);
        CHECK(s.counter >= 0);
        CHECK(s.counter < s.contention_window);
    }
}

TEST_CASE("a lone saturated device transmits every slot") {
    env::Environment e(env::EnvConfig{1, 1, 1, false, 200});
    beb::BebPolicy pol(1, beb::BackoffParams{});
    Rng rng(5);
    e.apply_arrivals({1});
    int successes = 0;
    for (int k = 0; k < 200; ++k) {
        auto a = pol.act(e.buffers(), 1, rng);
        CHECK(a[0] == 1); // never collides, so never backs off
        auto r = e.step(a, {1});
        pol.update(a, r.feedback, rng);
        successes += static_cast<int>(r.reward);
    }
    CHECK(successes == 200);
}

TEST_CASE("fixed-probability policy respects the buffer and probability") {
    beb::FixedProbPolicy pol{0.25};
    Rng rng(6);
    const std::vector<std::uint8_t> empty{0}, full{1};
    int tx = 0;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) {
        CHECK(pol.act(empty, 2, rng)[0] == 0);
        if (pol.act(full, 2, rng)[0] != 0) ++tx;
    }
    const double f = static_cast<double>(tx) / draws;
    CHECK(std::fabs(f - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / draws));
}
