#include "ra/env.hpp"

#include <sstream>

namespace ra::env {

Environment::Environment(EnvConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    reset(0);
}

void Environment::reset(std::uint64_t seed) {
    seed_ = seed;
    slot_ = 0;
    buffers_.assign(cfg_.num_devices, 0);
    hist_actions_.assign(cfg_.num_devices, std::vector<Action>(cfg_.history_len, 0));
    hist_feedback_.assign(
        cfg_.num_devices,
        std::vector<FeedbackVector>(cfg_.history_len,
                                    FeedbackVector(cfg_.num_channels, 0)));
    counters_ = PacketCounters{};
    device_successes_.assign(cfg_.num_devices, 0);
}

void Environment::apply_arrivals(const std::vector<std::uint8_t>& arrivals) {
    if (static_cast<int>(arrivals.size()) != cfg_.num_devices)
        throw std::invalid_argument("arrivals size mismatch");
    for (int n = 0; n < cfg_.num_devices; ++n) {
        if (!arrivals[n]) continue;
        if (buffers_[n]) {
            ++counters_.discarded; // buffer holds at most one packet
        } else {
            buffers_[n] = 1;
        }
        ++counters_.arrived;
    }
}

SlotResult Environment::step(const std::vector<Action>& joint_actions,
                             const std::vector<std::uint8_t>& next_arrivals) {
    const int N = cfg_.num_devices;
    const int M = cfg_.num_channels;
    if (static_cast<int>(joint_actions.size()) != N)
        throw std::invalid_argument("joint_actions size mismatch");

    for (int n = 0; n < N; ++n) {
        const Action a = joint_actions[n];
        if (a < 0 || a > M) throw std::invalid_argument("action out of range");
        if (a != 0 && !buffers_[n])
            throw std::logic_error("device " + std::to_string(n) +
                                   " transmitted with an empty buffer");
    }

    SlotResult res;
    res.buffers_at_action = buffers_;

    std::vector<int> transmitters(M, 0);
    for (int n = 0; n < N; ++n)
        if (joint_actions[n] != 0) ++transmitters[joint_actions[n] - 1];

    res.feedback.assign(M, 0);
    for (int m = 0; m < M; ++m) res.feedback[m] = (transmitters[m] == 1) ? 1 : 0;

    res.events.rows = N;
    res.events.cols = M;
    res.events.g.assign(static_cast<size_t>(N) * M, 0);
    res.events.c.assign(static_cast<size_t>(N) * M, 0);

    int successes = 0;
    for (int n = 0; n < N; ++n) {
        const Action a = joint_actions[n];
        if (a == 0) continue;
        const int m = a - 1;
        if (res.feedback[m]) {
            res.events.g[static_cast<size_t>(n) * M + m] = 1;
            ++successes;
            ++device_successes_[n];
        } else {
            res.events.c[static_cast<size_t>(n) * M + m] = 1;
        }
    }
    res.reward = static_cast<float>(successes);
    counters_.succeeded += successes;

    // Successful transmissions leave the buffer, then the next slot's
    // arrivals land.
    for (int n = 0; n < N; ++n) {
        const Action a = joint_actions[n];
        if (a != 0 && res.feedback[a - 1]) buffers_[n] = 0;
    }
    apply_arrivals(next_arrivals);

    // Shift histories. Only devices active this slot (buffered at decision
    // time) record the broadcast feedback; everyone records their action,
    // which is 0 for inactive devices.
    for (int n = 0; n < N; ++n) {
        auto& ha = hist_actions_[n];
        auto& hf = hist_feedback_[n];
        ha.erase(ha.begin());
        ha.push_back(joint_actions[n]);
        hf.erase(hf.begin());
        hf.push_back(res.buffers_at_action[n] ? res.feedback
                                              : FeedbackVector(M, 0));
    }
    ++slot_;
    return res;
}

LocalHistory Environment::observe(int device) const {
    if (device < 0 || device >= cfg_.num_devices)
        throw std::invalid_argument("device index out of range");
    LocalHistory h;
    h.past_actions = hist_actions_[device];
    h.past_feedback = hist_feedback_[device];
    h.buffer = buffers_[device];
    h.agent_id = cfg_.use_agent_ids ? device : -1;
    return h;
}

std::string trace_to_csv(const EpisodeTrace& trace, int num_devices, int num_channels) {
    std::ostringstream os;
    os << "# slot";
    for (int n = 0; n < num_devices; ++n) os << ",a" << n;
    for (int m = 0; m < num_channels; ++m) os << ",f" << m;
    os << ",reward\n";
    for (size_t k = 0; k < trace.size(); ++k) {
        os << k;
        for (int n = 0; n < num_devices; ++n) os << ',' << int(trace[k].actions[n]);
        for (int m = 0; m < num_channels; ++m) os << ',' << int(trace[k].feedback[m]);
        os << ',' << trace[k].reward << '\n';
    }
    return os.str();
}

} // namespace ra::env
