#include <doctest.h>

#include "ra/mixers.hpp"
#include "support/fd.hpp"

using namespace ra;
using nn::Vec;

namespace {

mix::QmixMixer<double> random_mixer(int agents, int state, std::uint64_t seed) {
    Rng rng(seed);
    mix::QmixConfig mc;
    mc.num_agents = agents;
    mc.state_width = state;
    mc.embed = 6;
    mc.hyper_hidden = 5;
    mix::QmixMixer<double> m;
    m.init(mc, rng);
    return m;
}

Vec<double> rvec(int n, Rng& rng, double scale = 1.0) {
    Vec<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform_range(-scale, scale);
    return v;
}

} // namespace

TEST_CASE("vdn mix is the exact sum") {
    Vec<double> q(3);
    q << 1.0, 2.0, -0.5;
    CHECK(mix::vdn_mix(q) == doctest::Approx(2.5));
    Vec<double> zero = Vec<double>::Zero(4);
    CHECK(mix::vdn_mix(zero) == 0.0);
    Vec<double> one(1);
    one << 1.25;
    CHECK(mix::vdn_mix(one) == 1.25);
}

TEST_CASE("zeroed mixer maps everything to zero") {
    auto m = random_mixer(3, 4, 1);
    m.set_zero();
    Rng rng(2);
    for (int i = 0; i < 10; ++i) {
        auto q = rvec(3, rng);
        auto s = rvec(4, rng);
        CHECK(m.mix(q, s) == 0.0);
    }
}

TEST_CASE("raising any agent value never lowers the joint value") {
    Rng rng(3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto m = random_mixer(4, 6, 10 + seed);
        for (int probe = 0; probe < 50; ++probe) {
            auto q = rvec(4, rng, 2.0);
            auto s = rvec(6, rng, 2.0);
            const double base = m.mix(q, s);
            const int n = static_cast<int>(rng.uniform_int(4));
            q[n] += 0.25;
            CHECK(m.mix(q, s) >= base - 1e-12);
        }
    }
}

TEST_CASE("finite-difference joint-value sensitivity stays non-negative") {
    Rng rng(4);
    auto m = random_mixer(3, 5, 30);
    const double eps = 1e-6;
    for (int probe = 0; probe < 200; ++probe) {
        auto q = rvec(3, rng, 2.0);
        auto s = rvec(5, rng, 2.0);
        for (int n = 0; n < 3; ++n) {
            auto up = q, down = q;
            up[n] += eps;
            down[n] -= eps;
            const double d = (m.mix(up, s) - m.mix(down, s)) / (2 * eps);
            CHECK(d >= -1e-8);
        }
    }
}

TEST_CASE("mixer backward returns dQtot/dq and parameter gradients") {
    Rng rng(5);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto m = random_mixer(3, 4, 40 + seed);
        // keep hypernetwork outputs away from the |.| kink so central
        // differences stay valid
        auto q = rvec(3, rng, 1.5);
        auto s = rvec(4, rng, 1.5);

        typename mix::QmixMixer<double>::Cache cache;
        m.mix(q, s, &cache);
        mix::QmixMixer<double> grads;
        grads.zero_like(m);
        Vec<double> dq;
        m.backward(cache, 1.0, grads, dq);

        auto loss = [&]() { return m.mix(q, s); };
        auto rep = test::check_gradients(m.blocks(), grads.blocks(), loss);
        CHECK(rep.failures == 0);

        // dq against finite differences too
        const double eps = 1e-6;
        for (int n = 0; n < 3; ++n) {
            auto up = q, down = q;
            up[n] += eps;
            down[n] -= eps;
            const double numeric = (m.mix(up, s) - m.mix(down, s)) / (2 * eps);
            CHECK(test::grads_close(dq[n], numeric));
        }
    }
}
