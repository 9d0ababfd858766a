#include "ra/trainer.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ra::train {

using json = nlohmann::json;

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "drqn") return Algorithm::drqn;
    if (s == "vdn") return Algorithm::vdn;
    if (s == "qmix") return Algorithm::qmix;
    throw ConfigError("unknown algorithm '" + s + "' (expected drqn, vdn or qmix)");
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::drqn: return "drqn";
        case Algorithm::vdn: return "vdn";
        case Algorithm::qmix: return "qmix";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (num_devices < 1) throw ConfigError("num_devices must be >= 1");
    if (num_channels < 1) throw ConfigError("num_channels must be >= 1");
    if (history_len < 1) throw ConfigError("history_len must be >= 1");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (slots_per_episode < 1) throw ConfigError("slots_per_episode must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (learn_steps_per_slot < 1) throw ConfigError("learn_steps_per_slot must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
    if (!(tau_start > 0.0) || !(tau_floor > 0.0))
        throw ConfigError("temperatures must be positive");
    if (k_theta < 1) throw ConfigError("k_theta must be >= 1");
    if (k_beta < 0) throw ConfigError("k_beta must be >= 0");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (bptt_chunk < 1) throw ConfigError("bptt_chunk must be >= 1");
    if (traffic.rate_per_device < 0.0 || traffic.rate_per_device > 1.0)
        throw ConfigError("rate_per_device must lie in [0, 1]");
    if (traffic.kind == TrafficConfig::Kind::correlated) {
        if (traffic.num_events < 1) throw ConfigError("num_events must be >= 1");
        if (traffic.lambda_bar < 0.0 ||
            traffic.lambda_bar / traffic.num_events > 1.0)
            throw ConfigError("lambda_bar must give a per-event probability in [0, 1]");
        if (!(traffic.d_th >= 0.0)) throw ConfigError("d_th must be >= 0");
    }
}

void EvalConfig::validate() const {
    if (num_devices < 1) throw ConfigError("num_devices must be >= 1");
    if (slots < 1) throw ConfigError("slots must be >= 1");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (dist_slots < 1) throw ConfigError("dist_slots must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
}

namespace {

struct BuiltTraffic {
    traffic::Model model;
    std::optional<traffic::Layout> layout;
};

BuiltTraffic build_traffic(const TrafficConfig& tc, int num_devices,
                           std::uint64_t run_seed) {
    BuiltTraffic out;
    if (tc.kind == TrafficConfig::Kind::regular) {
        out.model.regular = traffic::RegularTraffic::uniform(num_devices, tc.rate_per_device);
        return out;
    }
    const std::uint64_t ls = tc.layout_seed ? tc.layout_seed : run_seed;
    Rng layout_rng = SeedPolicy(ls).stream(Stream::layout);
    out.model.is_correlated = true;
    out.model.correlated = traffic::CorrelatedTraffic::make(
        layout_rng, num_devices, tc.num_events, tc.rate_per_device, tc.lambda_bar,
        tc.d_th);
    out.model.regular = out.model.correlated.regular;
    out.layout = out.model.correlated.layout;
    return out;
}

agents::ObsEncoder make_encoder(int N, int M, int h, bool ids) {
    agents::ObsEncoder e;
    e.num_devices = N;
    e.num_channels = M;
    e.history_len = h;
    e.use_agent_ids = ids;
    return e;
}

learn::Algo to_learn_algo(Algorithm a) {
    switch (a) {
        case Algorithm::drqn: return learn::Algo::drqn;
        case Algorithm::vdn: return learn::Algo::vdn;
        default: return learn::Algo::qmix;
    }
}

// Copies every parameter block of src into dst (same shapes).
template <class Net>
void copy_params(Net& dst, Net& src) {
    auto a = dst.blocks();
    auto b = src.blocks();
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].mat)
            *a[i].mat = *b[i].mat;
        else
            *a[i].vec = *b[i].vec;
    }
}

// Select actions for every agent under the shared net; hidden states are
// per-agent and advance every slot.
void select_joint_actions(const env::Environment& e, const agents::ObsEncoder& enc,
                          const nn::QNetwork<real>& net,
                          std::vector<nn::Vec<real>>& hidden, double tau, Rng& rng,
                          std::vector<env::Action>& actions) {
    const int N = e.config().num_devices;
    actions.resize(N);
    nn::Vec<real> obs, q;
    for (int n = 0; n < N; ++n) {
        enc.encode<real>(e.observe(n), obs);
        nn::forward(net, obs, hidden[n], q);
        actions[n] = agents::select_action(q, e.buffers()[n], tau, rng);
    }
}

json traffic_to_json(const TrafficConfig& t) {
    return json{{"kind", t.kind == TrafficConfig::Kind::regular ? "regular" : "correlated"},
                {"rate_per_device", t.rate_per_device},
                {"num_events", t.num_events},
                {"lambda_bar", t.lambda_bar},
                {"d_th", t.d_th},
                {"layout_seed", t.layout_seed}};
}

TrafficConfig traffic_from_json(const json& j) {
    TrafficConfig t;
    t.kind = j.at("kind").get<std::string>() == "correlated"
                 ? TrafficConfig::Kind::correlated
                 : TrafficConfig::Kind::regular;
    t.rate_per_device = j.at("rate_per_device").get<double>();
    t.num_events = j.at("num_events").get<int>();
    t.lambda_bar = j.at("lambda_bar").get<double>();
    t.d_th = j.at("d_th").get<double>();
    t.layout_seed = j.at("layout_seed").get<std::uint64_t>();
    return t;
}

} // namespace

std::string config_to_json(const TrainConfig& c) {
    json j{{"algorithm", to_string(c.algorithm)},
           {"use_agent_ids", c.use_agent_ids},
           {"num_devices", c.num_devices},
           {"num_channels", c.num_channels},
           {"history_len", c.history_len},
           {"recurrent", c.recurrent},
           {"episodes", c.episodes},
           {"slots_per_episode", c.slots_per_episode},
           {"traffic", traffic_to_json(c.traffic)},
           {"gamma", c.gamma},
           {"tau_start", c.tau_start},
           {"tau_floor", c.tau_floor},
           {"k_theta", c.k_theta},
           {"k_beta", c.k_beta},
           {"replay_capacity", c.replay_capacity},
           {"batch_size", c.batch_size},
           {"learn_steps_per_slot", c.learn_steps_per_slot},
           {"learning_rate", c.learning_rate},
           {"bptt_chunk", c.bptt_chunk},
           {"seed", c.seed},
           {"threads", c.threads}};
    return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    TrainConfig c;
    c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    c.use_agent_ids = j.at("use_agent_ids").get<bool>();
    c.num_devices = j.at("num_devices").get<int>();
    c.num_channels = j.at("num_channels").get<int>();
    c.history_len = j.at("history_len").get<int>();
    c.recurrent = j.at("recurrent").get<bool>();
    c.episodes = j.at("episodes").get<int>();
    c.slots_per_episode = j.at("slots_per_episode").get<int>();
    c.traffic = traffic_from_json(j.at("traffic"));
    c.gamma = j.at("gamma").get<double>();
    c.tau_start = j.at("tau_start").get<double>();
    c.tau_floor = j.at("tau_floor").get<double>();
    c.k_theta = j.at("k_theta").get<long long>();
    c.k_beta = j.at("k_beta").get<long long>();
    c.replay_capacity = j.at("replay_capacity").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learn_steps_per_slot = j.at("learn_steps_per_slot").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.bptt_chunk = j.at("bptt_chunk").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<int>();
    c.validate();
    return c;
}

TrainResult train(const TrainConfig& cfg) {
    cfg.validate();
    const int N = cfg.num_devices;
    const int M = cfg.num_channels;
    const int K = cfg.slots_per_episode;

    SeedPolicy sp(cfg.seed);
    Rng traffic_rng = sp.stream(Stream::traffic);
    Rng policy_rng = sp.stream(Stream::policy);
    Rng init_rng = sp.stream(Stream::init);
    Rng replay_rng = sp.stream(Stream::replay);

    BuiltTraffic traf = build_traffic(cfg.traffic, N, cfg.seed);
    const auto enc = make_encoder(N, M, cfg.history_len, cfg.use_agent_ids);

    nn::QNetworkConfig qc;
    qc.input_width = enc.width();
    qc.num_actions = M + 1;
    qc.recurrent = cfg.recurrent;

    TrainResult result;
    result.cfg = cfg;
    result.policy.cfg = cfg;
    auto& online = result.policy.net;
    online.init(qc, init_rng);
    nn::QNetwork<real> target;
    target.zero_like(online);
    copy_params(target, online);

    mix::QmixMixer<real> mixer_target;
    if (cfg.algorithm == Algorithm::qmix) {
        mix::QmixConfig mc;
        mc.num_agents = N;
        mc.state_width = enc.width() * N;
        result.policy.mixer.init(mc, init_rng);
        result.policy.has_mixer = true;
        mixer_target.zero_like(result.policy.mixer);
        copy_params(mixer_target, result.policy.mixer);
    }

    agents::Replay replay(cfg.replay_capacity);

    learn::Context<real> ctx;
    ctx.algo = to_learn_algo(cfg.algorithm);
    ctx.encoder = &enc;
    ctx.replay = &replay;
    ctx.online = &online;
    ctx.target = &target;
    ctx.gamma = cfg.gamma;
    ctx.num_devices = N;
    ctx.bptt_chunk = cfg.bptt_chunk;
    if (result.policy.has_mixer) {
        ctx.mixer = &result.policy.mixer;
        ctx.mixer_target = &mixer_target;
    }

    std::vector<learn::ItemScratch<real>> scratch(cfg.batch_size);
    for (auto& s : scratch) s.init(ctx);
    nn::QNetwork<real> grad_net;
    grad_net.zero_like(online);
    mix::QmixMixer<real> grad_mixer;
    if (result.policy.has_mixer) grad_mixer.zero_like(result.policy.mixer);

    nn::AdamOpt<real> opt(cfg.learning_rate);
    auto param_blocks = [&]() {
        auto v = online.blocks();
        if (result.policy.has_mixer) {
            auto m = result.policy.mixer.blocks();
            v.insert(v.end(), m.begin(), m.end());
        }
        return v;
    };
    auto grad_blocks = [&]() {
        auto v = grad_net.blocks();
        if (result.policy.has_mixer) {
            auto m = grad_mixer.blocks();
            v.insert(v.end(), m.begin(), m.end());
        }
        return v;
    };

    learn::Exec exec = learn::Exec::openmp;
#ifdef _OPENMP
    if (cfg.threads == 1)
        exec = learn::Exec::serial;
    else if (cfg.threads > 1)
        omp_set_num_threads(cfg.threads);
#else
    exec = learn::Exec::serial;
#endif

    agents::TauSchedule sched;
    sched.start = cfg.tau_start;
    sched.floor_value = cfg.tau_floor;
    sched.total_slots = static_cast<long long>(cfg.episodes) * K;
    sched.k_beta = cfg.k_beta > 0 ? cfg.k_beta : K;

    env::Environment e(env::EnvConfig{N, M, cfg.history_len, cfg.use_agent_ids, K});
    std::vector<env::Action> actions;
    std::vector<learn::ItemScratch<real>>& pool = scratch;
    std::vector<agents::Replay::Ref> batch(cfg.batch_size);
    std::vector<nn::Vec<real>> hidden(N);
    const std::vector<std::uint8_t> no_arrivals(N, 0);

    long long global_slot = 0;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        e.reset(mix_seed(cfg.seed ^ static_cast<std::uint64_t>(ep)));
        e.apply_arrivals(traf.model.sample(traffic_rng));
        for (auto& h : hidden) h = nn::zero_hidden(online);
        replay.begin_episode();

        double reward_sum = 0.0;
        double loss_sum = 0.0;
        long long learn_steps = 0;
        double tau = sched.at_slot(global_slot);

        for (int k = 0; k < K; ++k) {
            tau = sched.at_slot(global_slot);
            select_joint_actions(e, enc, online, hidden, tau, policy_rng, actions);
            auto res = e.step(actions, k + 1 < K ? traf.model.sample(traffic_rng)
                                                 : no_arrivals);
            reward_sum += res.reward;

            env::SlotRecord rec;
            rec.actions.assign(actions.begin(), actions.end());
            rec.feedback = res.feedback;
            rec.buffers = res.buffers_at_action;
            rec.reward = res.reward;
            replay.push_slot(std::move(rec));

            if (replay.num_sampleable() >= static_cast<size_t>(cfg.batch_size)) {
                for (int step = 0; step < cfg.learn_steps_per_slot; ++step) {
                    for (int i = 0; i < cfg.batch_size; ++i)
                        batch[i] = cfg.recurrent
                                       ? replay.sample_chunk_start(replay_rng,
                                                                   cfg.bptt_chunk)
                                       : replay.sample(replay_rng);
                    const double loss = learn::batch_gradients(
                        ctx, batch, pool, grad_net,
                        result.policy.has_mixer ? &grad_mixer : nullptr, exec);
                    if (!std::isfinite(loss))
                        throw DivergenceError("non-finite loss at slot " +
                                              std::to_string(global_slot));
                    opt.step(param_blocks(), grad_blocks());
                    loss_sum += loss;
                    ++learn_steps;
                }
            }

            ++global_slot;
            if (global_slot % cfg.k_theta == 0) {
                copy_params(target, online);
                if (result.policy.has_mixer)
                    copy_params(mixer_target, result.policy.mixer);
            }
        }
        replay.end_episode();

        EpisodeStats st;
        st.episode = ep;
        st.throughput = reward_sum / (static_cast<double>(M) * K);
        st.mean_loss = learn_steps ? loss_sum / static_cast<double>(learn_steps) : 0.0;
        st.tau = tau;
        result.episodes.push_back(st);
    }

    result.layout = traf.layout;
    if (traf.model.is_correlated)
        result.event_activations = traf.model.correlated.activation_counts;
    return result;
}

namespace {

// Minimal per-episode driver shared by evaluation and the baselines.
struct Actor {
    virtual ~Actor() = default;
    virtual void begin_episode() {}
    virtual void act(const env::Environment& e, Rng& rng,
                     std::vector<env::Action>& actions) = 0;
    virtual void observe(const std::vector<env::Action>& actions,
                         const env::SlotResult& res, Rng& rng) {}
};

struct NetActor : Actor {
    const PolicyBundle* policy;
    agents::ObsEncoder enc;
    double tau;
    std::vector<nn::Vec<real>> hidden;

    void begin_episode() override {
        hidden.assign(enc.num_devices, nn::zero_hidden(policy->net));
    }
    void act(const env::Environment& e, Rng& rng,
             std::vector<env::Action>& actions) override {
        select_joint_actions(e, enc, policy->net, hidden, tau, rng, actions);
    }
};

struct BebActor : Actor {
    BaselineConfig cfg;
    int num_devices = 0;
    std::unique_ptr<beb::BebPolicy> beb_policy;

    void begin_episode() override {
        beb_policy = std::make_unique<beb::BebPolicy>(num_devices, cfg.backoff);
    }
    void act(const env::Environment& e, Rng& rng,
             std::vector<env::Action>& actions) override {
        if (cfg.kind == BaselineConfig::Kind::beb)
            actions = beb_policy->act(e.buffers(), e.config().num_channels, rng);
        else
            actions = beb::FixedProbPolicy{cfg.fixed_p}.act(
                e.buffers(), e.config().num_channels, rng);
    }
    void observe(const std::vector<env::Action>& actions,
                 const env::SlotResult& res, Rng& rng) override {
        if (cfg.kind == BaselineConfig::Kind::beb)
            beb_policy->update(actions, res.feedback, rng);
    }
};

env::EpisodeTrace run_episode(env::Environment& e, const traffic::Model& traffic_model,
                              Actor& actor, Rng& traffic_rng, Rng& policy_rng,
                              int slots, std::uint64_t episode_seed) {
    const int N = e.config().num_devices;
    const std::vector<std::uint8_t> no_arrivals(N, 0);
    env::EpisodeTrace trace;
    trace.reserve(slots);
    e.reset(episode_seed);
    e.apply_arrivals(traffic_model.sample(traffic_rng));
    actor.begin_episode();
    std::vector<env::Action> actions;
    for (int k = 0; k < slots; ++k) {
        actor.act(e, policy_rng, actions);
        auto res = e.step(actions, k + 1 < slots ? traffic_model.sample(traffic_rng)
                                                 : no_arrivals);
        actor.observe(actions, res, policy_rng);
        env::SlotRecord rec;
        rec.actions.assign(actions.begin(), actions.end());
        rec.feedback = res.feedback;
        rec.buffers = res.buffers_at_action;
        rec.reward = res.reward;
        trace.push_back(std::move(rec));
    }
    return trace;
}

EvalResult run_eval(Actor& actor, const EvalConfig& cfg, int num_channels,
                    int history_len, bool use_agent_ids) {
    cfg.validate();
    EvalResult out;
    SeedPolicy sp(cfg.seed);
    Rng traffic_rng = sp.stream(Stream::eval_traffic);
    Rng policy_rng = sp.stream(Stream::eval_policy);

    BuiltTraffic traf = build_traffic(cfg.traffic, cfg.num_devices, cfg.seed);
    env::Environment e(env::EnvConfig{cfg.num_devices, num_channels, history_len,
                                      use_agent_ids, cfg.slots});

    for (int i = 0; i < cfg.episodes; ++i) {
        auto trace = run_episode(e, traf.model, actor, traffic_rng, policy_rng,
                                 cfg.slots, mix_seed(cfg.seed ^ (1000u + i)));
        auto b = metrics::bundle_from_trace(trace, cfg.num_devices, num_channels);
        out.per_episode_throughput.push_back(b.throughput);
    }
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (double t : out.per_episode_throughput) {
        sum += t;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    out.throughput_mean = sum / cfg.episodes;
    out.throughput_min = lo;
    out.throughput_max = hi;

    // One longer horizon for per-device distributions and AoP.
    auto dist_trace = run_episode(e, traf.model, actor, traffic_rng, policy_rng,
                                  cfg.dist_slots, mix_seed(cfg.seed ^ 0xd157));
    out.dist = metrics::bundle_from_trace(dist_trace, cfg.num_devices, num_channels);
    if (cfg.record_trace) out.dist_trace = std::move(dist_trace);
    out.layout = traf.layout;
    if (traf.model.is_correlated)
        out.event_activations = traf.model.correlated.activation_counts;
    return out;
}

} // namespace

EvalResult evaluate(const PolicyBundle& policy, const EvalConfig& cfg) {
    cfg.validate();
    if (policy.cfg.use_agent_ids && cfg.num_devices != policy.cfg.num_devices)
        throw ConfigError(
            "policy was trained with agent ids for N=" +
            std::to_string(policy.cfg.num_devices) +
            "; the one-hot id width pins evaluation to the same device count");
    NetActor actor;
    actor.policy = &policy;
    actor.enc = make_encoder(cfg.num_devices, policy.cfg.num_channels,
                             policy.cfg.history_len, policy.cfg.use_agent_ids);
    actor.tau = cfg.tau;
    return run_eval(actor, cfg, policy.cfg.num_channels, policy.cfg.history_len,
                    policy.cfg.use_agent_ids);
}

EvalResult evaluate_baseline(const BaselineConfig& policy, const EvalConfig& cfg,
                             int num_channels) {
    BebActor actor;
    actor.cfg = policy;
    actor.num_devices = cfg.num_devices;
    return run_eval(actor, cfg, num_channels, 1, false);
}

void save_policy(const std::string& path, PolicyBundle& bundle) {
    json meta;
    meta["config"] = json::parse(config_to_json(bundle.cfg));
    meta["net"] = {{"input_width", bundle.net.cfg.input_width},
                   {"num_actions", bundle.net.cfg.num_actions},
                   {"recurrent", bundle.net.cfg.recurrent},
                   {"dense1_units", bundle.net.cfg.dense1_units},
                   {"hidden_units", bundle.net.cfg.hidden_units}};
    meta["has_mixer"] = bundle.has_mixer;
    if (bundle.has_mixer)
        meta["mixer"] = {{"num_agents", bundle.mixer.cfg.num_agents},
                         {"state_width", bundle.mixer.cfg.state_width},
                         {"embed", bundle.mixer.cfg.embed},
                         {"hyper_hidden", bundle.mixer.cfg.hyper_hidden}};
    auto blocks = bundle.net.blocks();
    if (bundle.has_mixer) {
        auto m = bundle.mixer.blocks();
        blocks.insert(blocks.end(), m.begin(), m.end());
    }
    nn::write_checkpoint_file(path, meta.dump(), blocks);
}

PolicyBundle load_policy(const std::string& path) {
    auto ck = nn::read_checkpoint_file(path);
    json meta = json::parse(ck.meta_json);
    PolicyBundle b;
    b.cfg = config_from_json(meta.at("config").dump());
    nn::QNetworkConfig qc;
    qc.input_width = meta.at("net").at("input_width").get<int>();
    qc.num_actions = meta.at("net").at("num_actions").get<int>();
    qc.recurrent = meta.at("net").at("recurrent").get<bool>();
    qc.dense1_units = meta.at("net").at("dense1_units").get<int>();
    qc.hidden_units = meta.at("net").at("hidden_units").get<int>();
    Rng dummy(0);
    b.net.init(qc, dummy);
    b.has_mixer = meta.at("has_mixer").get<bool>();
    if (b.has_mixer) {
        mix::QmixConfig mc;
        mc.num_agents = meta.at("mixer").at("num_agents").get<int>();
        mc.state_width = meta.at("mixer").at("state_width").get<int>();
        mc.embed = meta.at("mixer").at("embed").get<int>();
        mc.hyper_hidden = meta.at("mixer").at("hyper_hidden").get<int>();
        b.mixer.init(mc, dummy);
    }
    auto blocks = b.net.blocks();
    if (b.has_mixer) {
        auto m = b.mixer.blocks();
        blocks.insert(blocks.end(), m.begin(), m.end());
    }
    nn::assign_blocks(ck, blocks);
    return b;
}

std::string episodes_to_csv(const std::vector<EpisodeStats>& eps) {
    std::ostringstream os;
    os << "# episode,throughput,mean_loss,tau\n";
    for (const auto& s : eps)
        os << s.episode << ',' << s.throughput << ',' << s.mean_loss << ',' << s.tau
           << '\n';
    return os.str();
}

std::string eval_to_csv(const EvalResult& r) {
    std::ostringstream os;
    os << "# metric,value\n";
    os << "throughput_mean," << r.throughput_mean << '\n';
    os << "throughput_min," << r.throughput_min << '\n';
    os << "throughput_max," << r.throughput_max << '\n';
    os << "dist_throughput," << r.dist.throughput << '\n';
    os << "avg_aop," << r.dist.avg_aop << '\n';
    os << "starved_devices," << r.dist.fairness.starved_devices << '\n';
    os << "success_spread," << r.dist.fairness.success_spread << '\n';
    return os.str();
}

} // namespace ra::train
