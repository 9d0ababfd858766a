#include <doctest.h>

#include <filesystem>

#include "ra/config.hpp"

using namespace ra;
namespace fs = std::filesystem;

TEST_CASE("an empty config file yields the documented defaults") {
    auto cfg = config::config_from_ini("");
    CHECK(cfg.algorithm == train::Algorithm::vdn);
    CHECK(cfg.episodes == 60);
    CHECK(cfg.history_len == 5);
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.learning_rate == doctest::Approx(1e-4));
    CHECK(cfg.tau_start == doctest::Approx(200.0));
    CHECK(cfg.tau_floor == doctest::Approx(0.1));
    CHECK(cfg.traffic.rate_per_device == doctest::Approx(0.3));
    CHECK(cfg.traffic.d_th == doctest::Approx(0.3));
}

TEST_CASE("ini serialization round-trips") {
    train::TrainConfig cfg;
    cfg.algorithm = train::Algorithm::qmix;
    cfg.use_agent_ids = true;
    cfg.num_devices = 20;
    cfg.traffic.kind = train::TrafficConfig::Kind::correlated;
    cfg.traffic.lambda_bar = 0.07;
    cfg.traffic.layout_seed = 42;
    cfg.gamma = 0.9;
    cfg.seed = 1234567;
    auto back = config::config_from_ini(config::config_to_ini(cfg));
    CHECK(back == cfg);
}

TEST_CASE("invalid settings are rejected with the offending key") {
    CHECK_THROWS_WITH_AS(config::config_from_ini("num-channels=0"),
                         doctest::Contains("num_channels"), train::ConfigError);
    CHECK_THROWS_AS(config::config_from_ini("gamma=1.5"), train::ConfigError);
    CHECK_THROWS_AS(config::config_from_ini("no-such-key=1"), train::ConfigError);
    CHECK_THROWS_AS(config::config_from_ini("gamma"), train::ConfigError);
}

TEST_CASE("presets pin the published run shapes") {
    const auto& p = config::find_preset("table3-n8");
    CHECK(p.cfg.num_devices == 8);
    CHECK(p.cfg.num_channels == 2);
    CHECK(p.cfg.slots_per_episode == 2000);
    CHECK(p.cfg.episodes == 60);
    CHECK(p.cfg.traffic.rate_per_device == doctest::Approx(0.3));

    const auto& corr = config::find_preset("corr-traffic");
    CHECK(corr.cfg.num_devices == 20);
    CHECK(corr.cfg.traffic.kind == train::TrafficConfig::Kind::correlated);
    CHECK(corr.cfg.traffic.num_events == 3);
    CHECK(corr.cfg.traffic.d_th == doctest::Approx(0.3));
    CHECK(corr.cfg.traffic.rate_per_device == doctest::Approx(0.015));

    CHECK_THROWS_WITH_AS(config::find_preset("nope"), doctest::Contains("table3-n8"),
                         train::ConfigError);
}

TEST_CASE("a run directory is self-describing and re-runnable") {
    train::TrainConfig cfg;
    cfg.num_devices = 2;
    cfg.num_channels = 1;
    cfg.history_len = 2;
    cfg.episodes = 2;
    cfg.slots_per_episode = 40;
    cfg.batch_size = 8;
    cfg.threads = 1;
    cfg.seed = 9;

    const std::string root = (fs::temp_directory_path() / "ra_marl_cfg_test").string();
    fs::remove_all(root);
    config::RunOptions opts;
    opts.eval = config::default_eval_for(cfg);
    opts.eval.slots = 30;
    opts.eval.episodes = 2;
    opts.eval.dist_slots = 60;
    opts.log_every = 0;

    const std::string dir1 = config::make_run_dir(root, "t");
    auto art1 = config::execute_train_run(cfg, dir1, opts);
    CHECK(fs::exists(dir1 + "/manifest.json"));
    CHECK(fs::exists(dir1 + "/config.ini"));
    CHECK(fs::exists(dir1 + "/train_log.csv"));
    CHECK(fs::exists(dir1 + "/eval.csv"));
    CHECK(fs::exists(dir1 + "/checkpoint_final.ckpt"));

    // Re-run from the stored config; every metric file must be identical.
    auto cfg2 = config::load_run_config(dir1);
    CHECK(cfg2 == cfg);
    const std::string dir2 = config::make_run_dir(root, "t");
    config::execute_train_run(cfg2, dir2, opts);
    for (const char* f : {"/train_log.csv", "/eval.csv", "/per_device.csv"})
        CHECK(config::read_text_file(dir1 + f) == config::read_text_file(dir2 + f));
    fs::remove_all(root);
}

TEST_CASE("unique run directories get numbered suffixes") {
    const std::string root = (fs::temp_directory_path() / "ra_marl_dir_test").string();
    fs::remove_all(root);
    const auto a = config::make_run_dir(root, "x");
    const auto b = config::make_run_dir(root, "x");
    CHECK(a != b);
    CHECK(fs::exists(a));
    CHECK(fs::exists(b));
    fs::remove_all(root);
}
