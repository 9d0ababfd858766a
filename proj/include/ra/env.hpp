#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ra::env {

// Action value: 0 = stay silent, m in [1, M] = transmit on channel m.
using Action = int;

struct EnvConfig {
    int num_devices = 8;   // N
    int num_channels = 2;  // M
    int history_len = 5;   // h, slots of (action, feedback) memory
    bool use_agent_ids = false;
    int horizon = 2000;    // K, slots per episode

    void validate() const {
        if (num_devices < 1) throw std::invalid_argument("num_devices must be >= 1");
        if (num_channels < 1) throw std::invalid_argument("num_channels must be >= 1");
        if (history_len < 1) throw std::invalid_argument("history_len must be >= 1");
        if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    }
};

// Per-channel broadcast feedback: f[m] = 1 iff exactly one device
// transmitted on channel m this slot. Idle and collision both read 0.
using FeedbackVector = std::vector<std::uint8_t>;

// N x M success/collision indicator matrices, row-major.
struct EventMatrices {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> g; // success events
    std::vector<std::uint8_t> c; // collision events

    std::uint8_t G(int n, int m) const { return g[static_cast<size_t>(n) * cols + m]; }
    std::uint8_t C(int n, int m) const { return c[static_cast<size_t>(n) * cols + m]; }
};

// A device's observation: h past actions, h past feedback vectors (zeroed
// for slots the device was inactive), current buffer bit and an optional
// one-hot id. Sequences are ordered oldest first.
struct LocalHistory {
    std::vector<Action> past_actions;                // length h
    std::vector<FeedbackVector> past_feedback;       // length h, each length M
    std::uint8_t buffer = 0;
    int agent_id = -1; // < 0 when ids are disabled; else index for one-hot
};

// Everything the environment resolves in one slot.
struct SlotResult {
    FeedbackVector feedback;
    EventMatrices events;
    float reward = 0.0f;                      // identical for every agent
    std::vector<std::uint8_t> buffers_at_action; // decision-time occupancy
};

// Compact per-slot record; enough to reconstruct every device's LocalHistory
// and all metrics, so it doubles as the replay storage and the trace export
// source.
struct SlotRecord {
    std::vector<std::uint8_t> actions;  // N, values in [0, M]
    std::vector<std::uint8_t> feedback; // M
    std::vector<std::uint8_t> buffers;  // N, decision-time occupancy
    float reward = 0.0f;
};

using EpisodeTrace = std::vector<SlotRecord>;

// Packet bookkeeping across an episode; must reconcile exactly:
// arrived == succeeded + discarded + (packets still sitting in buffers).
struct PacketCounters {
    long long arrived = 0;
    long long succeeded = 0;
    long long discarded = 0;
};

// Slot-synchronous multi-channel random-access environment. Strictly
// sequential per slot; run several instances in parallel for sweeps.
//
// Slot timeline: arrivals fill empty buffers, agents observe and act,
// feedback and reward are resolved, successful buffers are cleared, then
// histories shift. step() applies the *next* slot's arrivals after
// resolution; the episode's first arrivals go through apply_arrivals().
class Environment {
public:
    explicit Environment(EnvConfig cfg);

    // Empties buffers, zero-fills histories and resets the slot counter.
    // The seed is recorded for trace provenance; the environment itself is
    // deterministic given the action/arrival sequence.
    void reset(std::uint64_t seed);

    // Fills empty buffers; an arrival into an occupied buffer is discarded
    // and counted as lost.
    void apply_arrivals(const std::vector<std::uint8_t>& arrivals);

    // Resolves one slot. Throws std::logic_error if a device transmits with
    // an empty buffer (the policy layer must mask such actions).
    SlotResult step(const std::vector<Action>& joint_actions,
                    const std::vector<std::uint8_t>& next_arrivals);

    LocalHistory observe(int device) const;

    int slot() const { return slot_; }
    const EnvConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::uint8_t>& buffers() const { return buffers_; }
    const PacketCounters& counters() const { return counters_; }
    const std::vector<long long>& per_device_successes() const { return device_successes_; }

private:
    EnvConfig cfg_;
    std::uint64_t seed_ = 0;
    int slot_ = 0;
    std::vector<std::uint8_t> buffers_;
    // Ring-free history storage: per device, h most recent (action, masked
    // feedback) pairs, oldest first.
    std::vector<std::vector<Action>> hist_actions_;
    std::vector<std::vector<FeedbackVector>> hist_feedback_;
    PacketCounters counters_;
    std::vector<long long> device_successes_;
};

// Episode trace export, one line per slot:
//   slot,a_0,...,a_{N-1},f_0,...,f_{M-1},reward
// with a '#' header line naming the columns.
std::string trace_to_csv(const EpisodeTrace& trace, int num_devices, int num_channels);

} // namespace ra::env
