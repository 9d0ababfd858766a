#include <doctest.h>

#include <filesystem>

#include "ra/trainer.hpp"

using namespace ra;

namespace {

train::TrainConfig tiny_config() {
    train::TrainConfig c;
    c.algorithm = train::Algorithm::vdn;
    c.num_devices = 3;
    c.num_channels = 2;
    c.history_len = 2;
    c.episodes = 3;
    c.slots_per_episode = 80;
    c.traffic.rate_per_device = 0.4;
    c.batch_size = 8;
    c.k_theta = 40;
    c.seed = 5;
    c.threads = 1;
    return c;
}

} // namespace

TEST_CASE("training is deterministic in its seed") {
    auto a = train::train(tiny_config());
    auto b = train::train(tiny_config());
    REQUIRE(a.episodes.size() == b.episodes.size());
    for (size_t i = 0; i < a.episodes.size(); ++i) {
        CHECK(a.episodes[i].throughput == b.episodes[i].throughput);
        CHECK(a.episodes[i].mean_loss == b.episodes[i].mean_loss);
    }
    auto cfg = tiny_config();
    cfg.seed = 6;
    auto c = train::train(cfg);
    bool any_diff = false;
    for (size_t i = 0; i < a.episodes.size(); ++i)
        any_diff |= a.episodes[i].throughput != c.episodes[i].throughput;
    CHECK(any_diff);
}

TEST_CASE("thread count does not change training results") {
    auto serial = tiny_config();
    serial.threads = 1;
    auto parallel = tiny_config();
    parallel.threads = 2;
    auto a = train::train(serial);
    auto b = train::train(parallel);
    for (size_t i = 0; i < a.episodes.size(); ++i) {
        CHECK(a.episodes[i].throughput == b.episodes[i].throughput);
        CHECK(a.episodes[i].mean_loss == b.episodes[i].mean_loss);
    }
}

TEST_CASE("vdn with one agent reproduces drqn step for step") {
    auto cfg = tiny_config();
    cfg.num_devices = 1;
    cfg.num_channels = 1;
    cfg.algorithm = train::Algorithm::vdn;
    auto a = train::train(cfg);
    cfg.algorithm = train::Algorithm::drqn;
    auto b = train::train(cfg);
    REQUIRE(a.episodes.size() == b.episodes.size());
    for (size_t i = 0; i < a.episodes.size(); ++i) {
        CHECK(a.episodes[i].throughput == b.episodes[i].throughput);
        CHECK(a.episodes[i].mean_loss == b.episodes[i].mean_loss);
    }
}

TEST_CASE("qmix smoke run stays finite and evaluates") {
    auto cfg = tiny_config();
    cfg.algorithm = train::Algorithm::qmix;
    auto r = train::train(cfg);
    for (const auto& e : r.episodes) CHECK(std::isfinite(e.mean_loss));
    train::EvalConfig ec;
    ec.num_devices = cfg.num_devices;
    ec.slots = 50;
    ec.episodes = 2;
    ec.dist_slots = 100;
    ec.traffic = cfg.traffic;
    auto ev = train::evaluate(r.policy, ec);
    CHECK(ev.throughput_mean >= 0.0);
    CHECK(ev.throughput_mean <= 1.0);
}

TEST_CASE("recurrent training smoke run") {
    auto cfg = tiny_config();
    cfg.recurrent = true;
    cfg.bptt_chunk = 8;
    cfg.slots_per_episode = 40;
    cfg.episodes = 2;
    auto r = train::train(cfg);
    for (const auto& e : r.episodes) CHECK(std::isfinite(e.mean_loss));
}

TEST_CASE("evaluation is reproducible and respects the id-width pin") {
    auto cfg = tiny_config();
    cfg.use_agent_ids = true;
    auto r = train::train(cfg);
    train::EvalConfig ec;
    ec.num_devices = cfg.num_devices;
    ec.slots = 60;
    ec.episodes = 3;
    ec.dist_slots = 120;
    ec.traffic = cfg.traffic;
    ec.seed = 17;
    auto e1 = train::evaluate(r.policy, ec);
    auto e2 = train::evaluate(r.policy, ec);
    CHECK(e1.per_episode_throughput == e2.per_episode_throughput);
    CHECK(e1.dist.per_device_successes == e2.dist.per_device_successes);

    ec.num_devices = cfg.num_devices + 1;
    CHECK_THROWS_AS(train::evaluate(r.policy, ec), train::ConfigError);
}

TEST_CASE("policies round-trip through the checkpoint container") {
    auto cfg = tiny_config();
    cfg.algorithm = train::Algorithm::qmix;
    auto r = train::train(cfg);
    const auto path = (std::filesystem::temp_directory_path() /
                       "ra_marl_policy_roundtrip.ckpt").string();
    train::save_policy(path, r.policy);
    auto loaded = train::load_policy(path);
    CHECK(loaded.cfg == r.policy.cfg);
    CHECK(loaded.has_mixer);

    train::EvalConfig ec;
    ec.num_devices = cfg.num_devices;
    ec.slots = 40;
    ec.episodes = 2;
    ec.dist_slots = 80;
    ec.traffic = cfg.traffic;
    auto e1 = train::evaluate(r.policy, ec);
    auto e2 = train::evaluate(loaded, ec);
    CHECK(e1.per_episode_throughput == e2.per_episode_throughput);
    std::filesystem::remove(path);
}

TEST_CASE("baseline evaluation produces sane metrics") {
    train::BaselineConfig pol;
    train::EvalConfig ec;
    ec.num_devices = 8;
    ec.slots = 200;
    ec.episodes = 3;
    ec.dist_slots = 400;
    ec.traffic.rate_per_device = 0.3;
    auto r = train::evaluate_baseline(pol, ec, 2);
    CHECK(r.throughput_mean > 0.05);
    CHECK(r.throughput_mean < 1.0);
    long long total = 0;
    for (auto s : r.dist.per_device_successes) total += s;
    CHECK(total > 0);
}

TEST_CASE("correlated training reuses one layout between train and eval") {
    auto cfg = tiny_config();
    cfg.num_devices = 6;
    cfg.traffic.kind = train::TrafficConfig::Kind::correlated;
    cfg.traffic.rate_per_device = 0.05;
    cfg.traffic.lambda_bar = 0.3;
    cfg.traffic.num_events = 2;
    cfg.traffic.layout_seed = 99;
    auto r = train::train(cfg);
    REQUIRE(r.layout.has_value());
    train::EvalConfig ec;
    ec.num_devices = 6;
    ec.slots = 50;
    ec.episodes = 2;
    ec.dist_slots = 100;
    ec.traffic = cfg.traffic;
    auto ev = train::evaluate(r.policy, ec);
    REQUIRE(ev.layout.has_value());
    CHECK(ev.layout->members == r.layout->members);
}

TEST_CASE("config json round-trips") {
    auto cfg = tiny_config();
    cfg.traffic.kind = train::TrafficConfig::Kind::correlated;
    cfg.traffic.lambda_bar = 0.05;
    auto text = train::config_to_json(cfg);
    auto back = train::config_from_json(text);
    CHECK(back == cfg);
}
