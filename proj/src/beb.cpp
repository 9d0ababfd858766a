#include "ra/beb.hpp"

#include <algorithm>

namespace ra::beb {

env::Action beb_act(BackoffState& state, std::uint8_t buffer, int num_channels, Rng& rng) {
    if (!buffer) return 0;
    if (state.counter > 0) {
        --state.counter;
        return 0;
    }
    return 1 + static_cast<env::Action>(rng.uniform_int(num_channels));
}

void beb_update(BackoffState& state, Outcome outcome, const BackoffParams& params, Rng& rng) {
    if (outcome == Outcome::success) {
        state.collisions = 0;
        state.contention_window = params.cw_min;
        state.counter = 0;
        return;
    }
    ++state.collisions;
    long long cw = params.cw_min;
    for (int i = 0; i < state.collisions; ++i) {
        cw *= params.factor;
        if (cw >= params.cw_max) {
            cw = params.cw_max;
            break;
        }
    }
    state.contention_window = static_cast<int>(cw);
    state.counter = static_cast<int>(rng.uniform_int(state.contention_window));
}

std::vector<env::Action> BebPolicy::act(const std::vector<std::uint8_t>& buffers,
                                        int num_channels, Rng& rng) {
    std::vector<env::Action> actions(states_.size(), 0);
    for (size_t n = 0; n < states_.size(); ++n)
        actions[n] = beb_act(states_[n], buffers[n], num_channels, rng);
    return actions;
}

void BebPolicy::update(const std::vector<env::Action>& actions,
                       const env::FeedbackVector& feedback, Rng& rng) {
    for (size_t n = 0; n < states_.size(); ++n) {
        const env::Action a = actions[n];
        if (a == 0) continue;
        const Outcome out = feedback[a - 1] ? Outcome::success : Outcome::collision;
        beb_update(states_[n], out, params_, rng);
    }
}

std::vector<env::Action> FixedProbPolicy::act(const std::vector<std::uint8_t>& buffers,
                                              int num_channels, Rng& rng) const {
    std::vector<env::Action> actions(buffers.size(), 0);
    for (size_t n = 0; n < buffers.size(); ++n) {
        if (!buffers[n]) continue;
        if (rng.bernoulli(p))
            actions[n] = 1 + static_cast<env::Action>(rng.uniform_int(num_channels));
    }
    return actions;
}

} // namespace ra::beb
