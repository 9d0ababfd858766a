#pragma once

#include <cstdint>
#include <vector>

#include "ra/env.hpp"
#include "ra/rng.hpp"

namespace ra::beb {

// Binary exponential backoff with factor 2: the contention window doubles on
// collision up to cw_max and resets to cw_min on success. Channel choice is
// re-drawn uniformly on every attempt.
struct BackoffParams {
    int cw_min = 2;
    int cw_max = 1024;
    int factor = 2;
};

struct BackoffState {
    int collisions = 0;      // consecutive collision count c
    int contention_window = 2;
    int counter = 0;         // slots left before the next attempt
};

// Buffered + counter at zero -> transmit on a uniform random channel.
// Buffered + counter positive -> stay silent, count down.
// Empty buffer -> stay silent, state untouched.
env::Action beb_act(BackoffState& state, std::uint8_t buffer, int num_channels, Rng& rng);

enum class Outcome { success, collision };

// Applied after an attempt: collision grows the window and re-draws the
// counter uniformly in [0, CW-1]; success resets everything.
void beb_update(BackoffState& state, Outcome outcome, const BackoffParams& params, Rng& rng);

// Per-device BEB controller running the act/update cycle against broadcast
// feedback (each device only reads its own attempt outcome).
class BebPolicy {
public:
    BebPolicy(int num_devices, BackoffParams params) : params_(params), states_(num_devices) {}

    std::vector<env::Action> act(const std::vector<std::uint8_t>& buffers,
                                 int num_channels, Rng& rng);
    void update(const std::vector<env::Action>& actions,
                const env::FeedbackVector& feedback, Rng& rng);

    const BackoffState& state(int n) const { return states_[n]; }

private:
    BackoffParams params_;
    std::vector<BackoffState> states_;
};

// Transmit with fixed probability p on a uniform channel when buffered;
// the slotted-ALOHA reference policy.
struct FixedProbPolicy {
    double p = 0.1;
    std::vector<env::Action> act(const std::vector<std::uint8_t>& buffers,
                                 int num_channels, Rng& rng) const;
};

} // namespace ra::beb
