// Bundled experiment pipelines behind `ra-marl preset --name ...`.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "ra/config.hpp"
#include "ra/trainer.hpp"

namespace fs = std::filesystem;
using namespace ra;

namespace {

config::RunArtifacts train_variant(train::TrainConfig cfg, const std::string& dir,
                                   train::EvalConfig ec) {
    config::RunOptions opts;
    opts.eval = ec;
    opts.log_every = 10;
    opts.plot_data = true;
    return config::execute_train_run(cfg, dir, opts);
}

double expected(const config::ExperimentPreset& p, const std::string& name) {
    for (const auto& e : p.expectations)
        if (e.name == name) return e.value;
    return 0.0;
}

int preset_table3(const config::ExperimentPreset& p, std::uint64_t seed,
                  const std::string& out) {
    train::TrainConfig cfg = p.cfg;
    cfg.seed = seed;
    train::EvalConfig ec = config::default_eval_for(cfg);

    cfg.use_agent_ids = true;
    auto ids1 = train_variant(cfg, out + "/vdn-ids1", ec);
    cfg.use_agent_ids = false;
    auto ids0 = train_variant(cfg, out + "/vdn-ids0", ec);

    train::BaselineConfig beb;
    train::EvalConfig bec = ec;
    auto bebr = train::evaluate_baseline(beb, bec, cfg.num_channels);

    std::ostringstream t;
    t << "# policy,throughput,avg_aop,reference_throughput,reference_aop\n";
    t << "vdn_ids1," << ids1.eval.throughput_mean << ',' << ids1.eval.dist.avg_aop << ','
      << expected(p, "vdn_ids1_throughput") << ',' << expected(p, "vdn_ids1_aop") << '\n';
    t << "vdn_ids0," << ids0.eval.throughput_mean << ',' << ids0.eval.dist.avg_aop << ','
      << expected(p, "vdn_ids0_throughput") << ',' << expected(p, "vdn_ids0_aop") << '\n';
    t << "beb," << bebr.throughput_mean << ',' << bebr.dist.avg_aop << ','
      << expected(p, "beb_throughput") << ',' << expected(p, "beb_aop") << '\n';
    config::write_text_file(out + "/comparison.csv", t.str());
    std::cout << t.str();
    return 0;
}

int preset_marl(const config::ExperimentPreset& p, std::uint64_t seed,
                const std::string& out) {
    std::ostringstream t;
    t << "# algorithm,ids,test_throughput,avg_aop,starved\n";
    for (auto algo : {train::Algorithm::vdn, train::Algorithm::qmix, train::Algorithm::drqn}) {
        for (int ids = 1; ids >= 0; --ids) {
            train::TrainConfig cfg = p.cfg;
            cfg.seed = seed;
            cfg.algorithm = algo;
            cfg.use_agent_ids = ids != 0;
            auto art = train_variant(cfg,
                                     out + "/" + train::to_string(algo) + "-ids" +
                                         std::to_string(ids),
                                     config::default_eval_for(cfg));
            t << train::to_string(algo) << ',' << ids << ',' << art.eval.throughput_mean
              << ',' << art.eval.dist.avg_aop << ','
              << art.eval.dist.fairness.starved_devices << '\n';
        }
    }
    config::write_text_file(out + "/comparison.csv", t.str());
    std::cout << t.str();
    return 0;
}

int preset_corr(const config::ExperimentPreset& p, std::uint64_t seed,
                const std::string& out) {
    std::ostringstream t;
    t << "# lambda_bar,test_throughput,avg_aop\n";
    std::ostringstream events;
    events << "# lambda_bar,event,activations_in_10000_slots\n";
    for (double lb : {0.0, 0.02, 0.05, 0.07}) {
        train::TrainConfig cfg = p.cfg;
        cfg.seed = seed;
        cfg.traffic.lambda_bar = lb;
        train::EvalConfig ec = config::default_eval_for(cfg);
        ec.dist_slots = 10000;
        auto art = train_variant(cfg, out + "/lambda-bar-" + std::to_string(lb), ec);
        t << lb << ',' << art.eval.throughput_mean << ',' << art.eval.dist.avg_aop << '\n';
        for (size_t l = 0; l < art.eval.event_activations.size(); ++l)
            events << lb << ',' << (l + 1) << ',' << art.eval.event_activations[l] << '\n';
    }
    config::write_text_file(out + "/comparison.csv", t.str());
    config::write_text_file(out + "/event_activations.csv", events.str());
    std::cout << t.str();
    return 0;
}

int preset_scalability(const config::ExperimentPreset& p, std::uint64_t seed,
                       const std::string& out) {
    const double system_rate = 0.3;
    std::ostringstream t;
    t << "# n_train,n_test,test_throughput\n";
    for (int n_tr : {4, 8, 16}) {
        train::TrainConfig cfg = p.cfg;
        cfg.seed = seed;
        cfg.num_devices = n_tr;
        cfg.slots_per_episode = n_tr <= 8 ? 2000 : 3000;
        cfg.traffic.rate_per_device = system_rate / n_tr;
        cfg.use_agent_ids = false; // id width would pin N_test to N_tr
        auto art = train_variant(cfg, out + "/ntr" + std::to_string(n_tr),
                                 config::default_eval_for(cfg));
        for (int n_test : {4, 8, 16, 32, 64}) {
            train::EvalConfig ec = config::default_eval_for(cfg);
            ec.num_devices = n_test;
            ec.traffic.rate_per_device = system_rate / n_test;
            auto r = train::evaluate(art.result.policy, ec);
            t << n_tr << ',' << n_test << ',' << r.throughput_mean << '\n';
            std::cout << "n_tr " << n_tr << " n_test " << n_test << " throughput "
                      << r.throughput_mean << '\n';
        }
    }
    config::write_text_file(out + "/scalability.csv", t.str());
    return 0;
}

} // namespace

int run_preset_pipeline(const std::string& name, std::uint64_t seed,
                        const std::string& out_opt) {
    const auto& p = config::find_preset(name);
    const std::string out =
        out_opt.empty()
            ? config::make_run_dir(config::run_root(), "preset-" + name + "-seed" +
                                                           std::to_string(seed))
            : out_opt;
    fs::create_directories(out);
    std::cout << "preset " << name << " -> " << out << '\n';
    if (name.rfind("table3", 0) == 0) return preset_table3(p, seed, out);
    if (name == "marl-n8") return preset_marl(p, seed, out);
    if (name == "corr-traffic") return preset_corr(p, seed, out);
    if (name == "scalability") return preset_scalability(p, seed, out);
    throw train::ConfigError("preset '" + name + "' has no pipeline");
}
