#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ra/agents.hpp"
#include "ra/beb.hpp"
#include "ra/env.hpp"
#include "ra/learn.hpp"
#include "ra/metrics.hpp"
#include "ra/mixers.hpp"
#include "ra/nn.hpp"
#include "ra/rng.hpp"
#include "ra/traffic.hpp"

namespace ra::train {

// Training runs in single precision; gradient-check suites instantiate the
// same templated kernels in double.
using real = float;

enum class Algorithm { drqn, vdn, qmix };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm a);

// Invalid or inconsistent configuration; maps to its own CLI exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrafficConfig {
    enum class Kind { regular, correlated };
    Kind kind = Kind::regular;
    double rate_per_device = 0.3; // lambda_n
    // correlated model only:
    int num_events = 3;        // L
    double lambda_bar = 0.0;   // per-slot event mass; p = lambda_bar / L
    double d_th = 0.3;
    std::uint64_t layout_seed = 0; // 0 = derive from the run seed

    bool operator==(const TrafficConfig&) const = default;
};

struct TrainConfig {
    Algorithm algorithm = Algorithm::vdn;
    bool use_agent_ids = false;
    int num_devices = 8;   // N
    int num_channels = 2;  // M
    int history_len = 5;   // h
    bool recurrent = false;
    int episodes = 60;
    int slots_per_episode = 2000; // K
    TrafficConfig traffic;
    double gamma = 0.99;
    double tau_start = 200.0;
    double tau_floor = 0.1;
    long long k_theta = 200; // target-network refresh period (slots)
    long long k_beta = 0;    // temperature update period; 0 = once per episode
    std::size_t replay_capacity = 5000; // episodes
    int batch_size = 32;
    int learn_steps_per_slot = 1;
    double learning_rate = 1e-4;
    int bptt_chunk = 64;
    std::uint64_t seed = 1;
    int threads = 0; // 0 = OpenMP default, 1 = serial reference path

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct EvalConfig {
    int num_devices = 8; // N_test
    int slots = 500;     // K per evaluation episode
    int episodes = 10;
    int dist_slots = 5000; // horizon for per-device distributions
    std::uint64_t seed = 1;
    TrafficConfig traffic;
    double tau = 0.1;
    bool record_trace = false;

    void validate() const;
};

// A trained policy: shared Q-network (plus mixer for QMIX) and the training
// configuration it was produced under.
struct PolicyBundle {
    TrainConfig cfg;
    nn::QNetwork<real> net;
    mix::QmixMixer<real> mixer;
    bool has_mixer = false;
};

void save_policy(const std::string& path, PolicyBundle& bundle);
PolicyBundle load_policy(const std::string& path);

struct EpisodeStats {
    int episode = 0;
    double throughput = 0.0; // normalized reward, Eq.-(10) form
    double mean_loss = 0.0;
    double tau = 0.0;
};

// Raised when training produces a non-finite loss; the manifest written so
// far stays valid.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    TrainConfig cfg;
    std::vector<EpisodeStats> episodes;
    PolicyBundle policy;
    std::optional<traffic::Layout> layout; // correlated runs
    std::vector<long long> event_activations; // per event, whole training
};

TrainResult train(const TrainConfig& cfg);

struct EvalResult {
    double throughput_mean = 0.0;
    double throughput_min = 0.0;
    double throughput_max = 0.0;
    std::vector<double> per_episode_throughput;
    metrics::MetricsBundle dist; // from the dist_slots run
    env::EpisodeTrace dist_trace; // populated when record_trace is set
    std::optional<traffic::Layout> layout;
    std::vector<long long> event_activations;
};

// Greedy execution (tau at its floor) of a trained policy; no learning.
EvalResult evaluate(const PolicyBundle& policy, const EvalConfig& cfg);

// Same metrics pipeline for the baselines.
struct BaselineConfig {
    enum class Kind { beb, fixed_prob };
    Kind kind = Kind::beb;
    beb::BackoffParams backoff;
    double fixed_p = 0.1;
};

EvalResult evaluate_baseline(const BaselineConfig& policy, const EvalConfig& cfg,
                             int num_channels);

// Learning-curve / config / metrics serialization used by the CLI layer.
std::string episodes_to_csv(const std::vector<EpisodeStats>& eps);
std::string eval_to_csv(const EvalResult& r);
std::string config_to_json(const TrainConfig& c);
TrainConfig config_from_json(const std::string& text);

} // namespace ra::train
