// Command-line front end: train / eval / baseline / sweep / preset.
//
// Exit codes: 0 success, 2 configuration or validation error,
//             3 runtime failure, 4 training divergence.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ra/config.hpp"
#include "ra/trainer.hpp"

namespace fs = std::filesystem;
using namespace ra;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitDivergence = 4;

void add_train_options(CLI::App* app, train::TrainConfig& cfg, std::string* traffic_kind) {
    static const std::map<std::string, train::Algorithm> algo_map{
        {"drqn", train::Algorithm::drqn},
        {"vdn", train::Algorithm::vdn},
        {"qmix", train::Algorithm::qmix}};
    app->add_option("--algorithm", cfg.algorithm, "learning algorithm: drqn, vdn or qmix")
        ->transform(CLI::CheckedTransformer(algo_map, CLI::ignore_case));
    app->add_option("--use-agent-ids", cfg.use_agent_ids,
                    "append a one-hot device id to each observation");
    app->add_option("--num-devices", cfg.num_devices, "number of devices N");
    app->add_option("--num-channels", cfg.num_channels, "number of channels M");
    app->add_option("--history-len", cfg.history_len, "observation history length h");
    app->add_option("--recurrent", cfg.recurrent, "use the GRU network");
    app->add_option("--episodes", cfg.episodes, "training episodes");
    app->add_option("--slots-per-episode", cfg.slots_per_episode, "slots per episode K");
    app->add_option("--traffic-model", *traffic_kind, "regular or correlated")
        ->check(CLI::IsMember({"regular", "correlated"}));
    app->add_option("--rate-per-device", cfg.traffic.rate_per_device,
                    "Bernoulli arrival rate per device");
    app->add_option("--num-events", cfg.traffic.num_events, "event epicenters L");
    app->add_option("--lambda-bar", cfg.traffic.lambda_bar,
                    "event activation mass (p = lambda_bar / L)");
    app->add_option("--d-th", cfg.traffic.d_th, "event trigger distance threshold");
    app->add_option("--layout-seed", cfg.traffic.layout_seed,
                    "seed for device/epicenter positions (0 = derive from --seed)");
    app->add_option("--gamma", cfg.gamma, "discount factor");
    app->add_option("--tau-start", cfg.tau_start, "initial Boltzmann temperature");
    app->add_option("--tau-floor", cfg.tau_floor, "final Boltzmann temperature");
    app->add_option("--k-theta", cfg.k_theta, "target network refresh period (slots)");
    app->add_option("--k-beta", cfg.k_beta,
                    "temperature update period in slots (0 = once per episode)");
    app->add_option("--replay-capacity", cfg.replay_capacity, "replay capacity (episodes)");
    app->add_option("--batch-size", cfg.batch_size, "minibatch size");
    app->add_option("--learn-steps-per-slot", cfg.learn_steps_per_slot,
                    "gradient steps per slot");
    app->add_option("--learning-rate", cfg.learning_rate, "optimizer step size");
    app->add_option("--bptt-chunk", cfg.bptt_chunk, "BPTT chunk length (recurrent)");
    app->add_option("--seed", cfg.seed, "master seed");
    app->add_option("--threads", cfg.threads,
                    "worker threads for the learn step (1 = serial reference)");
}

void apply_traffic_kind(train::TrainConfig& cfg, const std::string& kind) {
    cfg.traffic.kind = kind == "correlated" ? train::TrafficConfig::Kind::correlated
                                            : train::TrafficConfig::Kind::regular;
}

std::string run_name_for(const train::TrainConfig& cfg, const std::string& prefix) {
    std::ostringstream os;
    os << prefix << '-' << train::to_string(cfg.algorithm) << "-n" << cfg.num_devices
       << "-ids" << (cfg.use_agent_ids ? 1 : 0) << "-seed" << cfg.seed;
    return os.str();
}

void print_eval(const train::EvalResult& r) {
    std::cout << "throughput_mean " << r.throughput_mean << " (min " << r.throughput_min
              << ", max " << r.throughput_max << ")\n"
              << "dist_throughput " << r.dist.throughput << "\n"
              << "avg_aop " << r.dist.avg_aop << "\n"
              << "starved_devices " << r.dist.fairness.starved_devices << "\n"
              << "success_spread " << r.dist.fairness.success_spread << "\n";
}

int cmd_train(const train::TrainConfig& cfg, const std::string& out,
              const std::string& name, bool trace, bool plot) {
    config::RunOptions opts;
    opts.eval = config::default_eval_for(cfg);
    opts.write_trace = trace;
    opts.plot_data = plot;
    opts.log_every = 5;
    const std::string dir =
        out.empty() ? config::make_run_dir(config::run_root(),
                                           name.empty() ? run_name_for(cfg, "train") : name)
                    : out;
    auto art = config::execute_train_run(cfg, dir, opts);
    std::cout << "run dir: " << art.dir << '\n';
    print_eval(art.eval);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"grant-free random-access trainer and simulator"};
    app.require_subcommand(1);

    // ---- train ----
    train::TrainConfig tc;
    std::string t_kind = "regular", t_out, t_name;
    bool t_trace = false, t_plot = false;
    auto* train_cmd = app.add_subcommand("train", "train a policy and evaluate it");
    train_cmd->set_config("--config", "", "key=value config file; flags override");
    add_train_options(train_cmd, tc, &t_kind);
    train_cmd->add_option("--out", t_out, "run directory (default: auto under run root)");
    train_cmd->add_option("--name", t_name, "run name under the run root");
    train_cmd->add_flag("--trace", t_trace, "export the distribution-run slot trace");
    train_cmd->add_flag("--plot-data", t_plot, "emit plot-ready learning-curve series");

    // ---- eval ----
    std::string e_ckpt, e_out, e_trace_file;
    train::EvalConfig ec;
    double e_rate = -1.0, e_lambda_bar = -1.0;
    int e_ntest = 0;
    auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    eval_cmd->add_option("--checkpoint", e_ckpt, "policy checkpoint path")->required();
    eval_cmd->add_option("--n-test", e_ntest, "device count at test time (default: as trained)");
    eval_cmd->add_option("--slots", ec.slots, "slots per evaluation episode");
    eval_cmd->add_option("--episodes", ec.episodes, "evaluation episodes");
    eval_cmd->add_option("--dist-slots", ec.dist_slots, "horizon for distribution metrics");
    eval_cmd->add_option("--seed", ec.seed, "evaluation seed");
    eval_cmd->add_option("--tau", ec.tau, "evaluation temperature (greedy floor)");
    eval_cmd->add_option("--rate-per-device", e_rate, "override arrival rate");
    eval_cmd->add_option("--lambda-bar", e_lambda_bar, "override event activation mass");
    eval_cmd->add_option("--trace", e_trace_file, "write the distribution-run trace CSV here");
    eval_cmd->add_option("--out", e_out, "write eval.csv and per_device.csv to this dir");

    // ---- baseline ----
    std::string b_policy = "beb", b_out;
    train::TrainConfig bc; // reuses env/traffic fields
    std::string b_kind = "regular";
    double b_p = 0.1;
    int b_cwmin = 2, b_cwmax = 1024;
    train::EvalConfig bec;
    auto* base_cmd = app.add_subcommand("baseline", "run a non-learned policy");
    base_cmd->add_option("--policy", b_policy, "beb or fixed")
        ->check(CLI::IsMember({"beb", "fixed"}));
    base_cmd->add_option("--p", b_p, "transmit probability for the fixed policy");
    base_cmd->add_option("--cw-min", b_cwmin, "BEB initial contention window");
    base_cmd->add_option("--cw-max", b_cwmax, "BEB maximum contention window");
    base_cmd->add_option("--num-devices", bc.num_devices, "number of devices N");
    base_cmd->add_option("--num-channels", bc.num_channels, "number of channels M");
    base_cmd->add_option("--traffic-model", b_kind, "regular or correlated")
        ->check(CLI::IsMember({"regular", "correlated"}));
    base_cmd->add_option("--rate-per-device", bc.traffic.rate_per_device, "arrival rate");
    base_cmd->add_option("--num-events", bc.traffic.num_events, "event epicenters L");
    base_cmd->add_option("--lambda-bar", bc.traffic.lambda_bar, "event activation mass");
    base_cmd->add_option("--d-th", bc.traffic.d_th, "event distance threshold");
    base_cmd->add_option("--layout-seed", bc.traffic.layout_seed, "layout seed");
    base_cmd->add_option("--slots", bec.slots, "slots per episode");
    base_cmd->add_option("--episodes", bec.episodes, "episodes");
    base_cmd->add_option("--dist-slots", bec.dist_slots, "distribution horizon");
    base_cmd->add_option("--seed", bec.seed, "seed");
    base_cmd->add_option("--out", b_out, "write metrics to this dir");

    // ---- sweep ----
    train::TrainConfig sc;
    std::string s_kind = "regular", s_out;
    std::vector<std::uint64_t> s_seeds{1, 2, 3};
    auto* sweep_cmd = app.add_subcommand("sweep", "repeat train+eval over several seeds");
    sweep_cmd->set_config("--config", "", "key=value config file; flags override");
    add_train_options(sweep_cmd, sc, &s_kind);
    sweep_cmd->add_option("--seeds", s_seeds, "seeds to run")->delimiter(',');
    sweep_cmd->add_option("--out", s_out, "sweep directory");

    // ---- preset ----
    std::string p_name, p_out;
    std::uint64_t p_seed = 1;
    bool p_list = false;
    auto* preset_cmd = app.add_subcommand("preset", "run a bundled experiment");
    preset_cmd->add_option("--name", p_name, "preset name");
    preset_cmd->add_option("--seed", p_seed, "master seed");
    preset_cmd->add_option("--out", p_out, "output directory");
    preset_cmd->add_flag("--list", p_list, "list available presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfig : kExitOk;
    }

    try {
        if (train_cmd->parsed()) {
            apply_traffic_kind(tc, t_kind);
            tc.validate();
            return cmd_train(tc, t_out, t_name, t_trace, t_plot);
        }
        if (eval_cmd->parsed()) {
            auto policy = train::load_policy(e_ckpt);
            ec.num_devices = e_ntest > 0 ? e_ntest : policy.cfg.num_devices;
            ec.traffic = policy.cfg.traffic;
            if (e_rate >= 0.0) ec.traffic.rate_per_device = e_rate;
            if (e_lambda_bar >= 0.0) ec.traffic.lambda_bar = e_lambda_bar;
            ec.record_trace = !e_trace_file.empty();
            auto r = train::evaluate(policy, ec);
            print_eval(r);
            if (!e_trace_file.empty())
                config::write_text_file(
                    e_trace_file, env::trace_to_csv(r.dist_trace, ec.num_devices,
                                                    policy.cfg.num_channels));
            if (!e_out.empty()) {
                fs::create_directories(e_out);
                config::write_text_file(e_out + "/eval.csv", train::eval_to_csv(r));
                config::write_text_file(e_out + "/per_device.csv",
                                        metrics::per_device_csv(r.dist));
            }
            return kExitOk;
        }
        if (base_cmd->parsed()) {
            bc.traffic.kind = b_kind == "correlated"
                                  ? train::TrafficConfig::Kind::correlated
                                  : train::TrafficConfig::Kind::regular;
            bec.num_devices = bc.num_devices;
            bec.traffic = bc.traffic;
            train::BaselineConfig pol;
            pol.kind = b_policy == "beb" ? train::BaselineConfig::Kind::beb
                                         : train::BaselineConfig::Kind::fixed_prob;
            pol.backoff.cw_min = b_cwmin;
            pol.backoff.cw_max = b_cwmax;
            pol.fixed_p = b_p;
            auto r = train::evaluate_baseline(pol, bec, bc.num_channels);
            print_eval(r);
            if (!b_out.empty()) {
                fs::create_directories(b_out);
                config::write_text_file(b_out + "/eval.csv", train::eval_to_csv(r));
                config::write_text_file(b_out + "/per_device.csv",
                                        metrics::per_device_csv(r.dist));
            }
            return kExitOk;
        }
        if (sweep_cmd->parsed()) {
            apply_traffic_kind(sc, s_kind);
            sc.validate();
            const std::string dir =
                s_out.empty() ? config::make_run_dir(config::run_root(),
                                                     run_name_for(sc, "sweep"))
                              : s_out;
            std::ostringstream table;
            table << "# seed,test_throughput,avg_aop,starved\n";
            double mean = 0.0;
            for (auto seed : s_seeds) {
                train::TrainConfig cfg = sc;
                cfg.seed = seed;
                config::RunOptions opts;
                opts.eval = config::default_eval_for(cfg);
                opts.log_every = 0;
                auto art = config::execute_train_run(
                    cfg, dir + "/seed" + std::to_string(seed), opts);
                table << seed << ',' << art.eval.throughput_mean << ','
                      << art.eval.dist.avg_aop << ','
                      << art.eval.dist.fairness.starved_devices << '\n';
                mean += art.eval.throughput_mean;
                std::cout << "seed " << seed << ": throughput "
                          << art.eval.throughput_mean << '\n';
            }
            table << "# mean_throughput," << mean / s_seeds.size() << '\n';
            config::write_text_file(dir + "/sweep.csv", table.str());
            std::cout << "sweep dir: " << dir << '\n';
            return kExitOk;
        }
        if (preset_cmd->parsed()) {
            if (p_list || p_name.empty()) {
                std::cout << config::preset_listing();
                return kExitOk;
            }
            extern int run_preset_pipeline(const std::string& name, std::uint64_t seed,
                                           const std::string& out);
            return run_preset_pipeline(p_name, p_seed, p_out);
        }
    } catch (const train::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const train::DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
