#pragma once

#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "ra/env.hpp"
#include "ra/nn.hpp"
#include "ra/rng.hpp"

namespace ra::agents {

// Flat observation layout, oldest history slot first:
//   per past slot j: one-hot(action_j) (M+1 entries), feedback_j (M entries)
//   then the buffer bit, then a one-hot agent id (N entries) when enabled.
// Action 0 ("stay silent") one-hot encodes to index 0; feedback entries for
// slots the device was inactive are zero.
struct ObsEncoder {
    int num_devices = 1;
    int num_channels = 1;
    int history_len = 1;
    bool use_agent_ids = false;

    int per_slot_width() const { return num_channels + 1 + num_channels; }
    int width() const {
        return history_len * per_slot_width() + 1 + (use_agent_ids ? num_devices : 0);
    }

    template <class S>
    void encode(const env::LocalHistory& h, nn::Vec<S>& out) const {
        out.setZero(width());
        int off = 0;
        for (int j = 0; j < history_len; ++j) {
            out[off + h.past_actions[j]] = S(1);
            off += num_channels + 1;
            for (int m = 0; m < num_channels; ++m)
                out[off + m] = static_cast<S>(h.past_feedback[j][m]);
            off += num_channels;
        }
        out[off++] = static_cast<S>(h.buffer);
        if (use_agent_ids) {
            if (h.agent_id < 0 || h.agent_id >= num_devices)
                throw std::invalid_argument("agent id out of range for one-hot encoding");
            out[off + h.agent_id] = S(1);
        }
    }

    // Rebuilds device `n`'s observation at `slot` from a compact episode
    // trace; bit-identical to what Environment::observe produced live.
    template <class S>
    void encode_from_trace(const env::EpisodeTrace& trace, int slot, int device,
                           nn::Vec<S>& out) const {
        out.setZero(width());
        int off = 0;
        for (int j = slot - history_len; j < slot; ++j) {
            if (j >= 0) {
                const auto& rec = trace[j];
                out[off + rec.actions[device]] = S(1);
                if (rec.buffers[device]) // inactive devices do not record feedback
                    for (int m = 0; m < num_channels; ++m)
                        out[off + num_channels + 1 + m] = static_cast<S>(rec.feedback[m]);
            } else {
                out[off] = S(1); // pre-episode slots read as action 0
            }
            off += per_slot_width();
        }
        out[off++] = static_cast<S>(trace[slot].buffers[device]);
        if (use_agent_ids) out[off + device] = S(1);
    }
};

// Numerically stable softmax(q / tau).
template <class S>
std::vector<double> boltzmann_probs(const nn::Vec<S>& q, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
    const double qmax = static_cast<double>(q.maxCoeff());
    std::vector<double> p(q.size());
    double sum = 0.0;
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        p[a] = std::exp((static_cast<double>(q[a]) - qmax) / tau);
        sum += p[a];
    }
    for (auto& v : p) v /= sum;
    return p;
}

// Buffer masking keeps the environment contract strict: an empty buffer
// forces "stay silent" before any sampling happens.
template <class S>
env::Action select_action(const nn::Vec<S>& q, std::uint8_t buffer, double tau, Rng& rng) {
    if (!buffer) return 0;
    const auto p = boltzmann_probs(q, tau);
    const double u = rng.uniform();
    double acc = 0.0;
    for (size_t a = 0; a < p.size(); ++a) {
        acc += p[a];
        if (u < acc) return static_cast<env::Action>(a);
    }
    return static_cast<env::Action>(p.size() - 1);
}

// y = r + gamma * max_a' q_next(a'). Terminal transitions skip the call and
// use y = r.
template <class S>
double dqn_target(double r, double gamma, const nn::Vec<S>& q_next) {
    return r + gamma * static_cast<double>(q_next.maxCoeff());
}

// Exponential temperature schedule hitting `floor` exactly at the last
// update; updates fire every k_beta slots.
struct TauSchedule {
    double start = 200.0;
    double floor_value = 0.1;
    long long total_slots = 1;
    long long k_beta = 1;

    double at_slot(long long slot) const {
        const long long updates_total = total_slots / k_beta;
        if (updates_total <= 1) return floor_value;
        const long long done = slot / k_beta;
        if (done >= updates_total) return floor_value;
        const double frac = static_cast<double>(done) / static_cast<double>(updates_total - 1);
        return start * std::pow(floor_value / start, frac);
    }
};

// Episodic replay over compact slot records. Whole episodes are kept FIFO;
// observations are reconstructed on demand, so a record costs a few dozen
// bytes instead of a full global (S, A, R, S') tuple.
class Replay {
public:
    explicit Replay(size_t capacity_episodes = 5000)
        : capacity_(capacity_episodes < 1 ? 1 : capacity_episodes) {}

    void begin_episode() {
        episodes_.emplace_back();
        back_finished_ = false;
        while (episodes_.size() > capacity_) episodes_.pop_front();
    }
    void push_slot(env::SlotRecord rec) { episodes_.back().push_back(std::move(rec)); }
    void end_episode() { back_finished_ = true; }

    size_t num_episodes() const { return episodes_.size(); }
    const env::EpisodeTrace& episode(size_t e) const { return episodes_[e]; }

    // A transition at slot k is sampleable once its successor state exists:
    // every slot of a finished episode (the last one is terminal), and all
    // but the newest slot of the episode in progress.
    size_t num_sampleable() const {
        size_t n = 0;
        for (size_t e = 0; e < episodes_.size(); ++e) n += sampleable_in_(e);
        return n;
    }

    struct Ref {
        int episode = 0;
        int slot = 0;
        bool terminal = false;
    };

    Ref sample(Rng& rng) const {
        const size_t total = num_sampleable();
        if (total == 0) throw std::logic_error("replay is empty");
        size_t idx = rng.uniform_int(total);
        for (size_t e = 0; e < episodes_.size(); ++e) {
            const size_t here = sampleable_in_(e);
            if (idx < here) {
                Ref r;
                r.episode = static_cast<int>(e);
                r.slot = static_cast<int>(idx);
                r.terminal = finished_(e) && (idx + 1 == episodes_[e].size());
                return r;
            }
            idx -= here;
        }
        throw std::logic_error("replay sampling fell off the end");
    }

    // Uniform chunk start for BPTT: picks an episode weighted by sampleable
    // length, then a window start so that `chunk` slots fit when possible.
    Ref sample_chunk_start(Rng& rng, int chunk) const {
        Ref r = sample(rng);
        const int len = static_cast<int>(sampleable_in_(r.episode));
        const int span = std::max(1, len - chunk + 1);
        r.slot = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
        r.terminal = false;
        return r;
    }

    bool episode_finished(size_t e) const { return finished_(e); }

private:
    bool finished_(size_t e) const {
        return e + 1 < episodes_.size() || back_finished_;
    }
    size_t sampleable_in_(size_t e) const {
        const size_t len = episodes_[e].size();
        if (finished_(e)) return len;
        return len > 1 ? len - 1 : 0;
    }

    size_t capacity_;
    std::deque<env::EpisodeTrace> episodes_;
    bool back_finished_ = true;
};

} // namespace ra::agents
