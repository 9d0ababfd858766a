#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ra/env.hpp"

namespace ra::metrics {

// Age-of-Packets recursion: w_n(k) = 0 when device n holds no packet during
// slot k, else w_n(k-1) + 1. The buffer bits fed per slot are the
// decision-time occupancies, so a packet ages from its arrival slot through
// its success slot inclusive.
class AopTracker {
public:
    explicit AopTracker(int num_devices)
        : w_(num_devices, 0), sums_(num_devices, 0.0), slots_(0) {}

    void update(const std::vector<std::uint8_t>& buffer_bits);

    int slots() const { return slots_; }
    long long current(int device) const { return w_[device]; }
    // Delta_n = (1/K) sum_k w_n(k).
    double average(int device) const;
    std::vector<double> averages() const;
    // Delta = (1/N) sum_n Delta_n.
    double system_average() const;

private:
    std::vector<long long> w_;
    std::vector<double> sums_;
    int slots_;
};

// T = successes / (M * K), in [0, 1].
double throughput(const std::vector<float>& per_slot_successes, int num_channels);
double throughput_from_events(const std::vector<env::EventMatrices>& g_trace,
                              int num_channels);

// Nearest-rank percentile (1-indexed ceil(p/100 * n)-th smallest value).
double percentile_nearest_rank(std::vector<double> values, double p);

struct DistributionSummary {
    double min = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0, max = 0, mean = 0;
};

DistributionSummary summarize(const std::vector<double>& values);

struct FairnessSummary {
    DistributionSummary successes;
    DistributionSummary aop;
    int starved_devices = 0; // devices with zero successes
    double success_spread = 0.0; // (max - min) / mean, 0 when mean is 0
};

FairnessSummary fairness_summary(const std::vector<long long>& per_device_successes,
                                 const std::vector<double>& per_device_aop);

struct MetricsBundle {
    double throughput = 0.0;
    double avg_aop = 0.0;
    std::vector<long long> per_device_successes;
    std::vector<double> per_device_aop;
    FairnessSummary fairness;
    int slots = 0;
    int num_channels = 1;
};

MetricsBundle bundle_from_trace(const env::EpisodeTrace& trace, int num_devices,
                                int num_channels);

// Delimited exports.
std::string bundle_to_csv(const MetricsBundle& b);
std::string per_device_csv(const MetricsBundle& b);

} // namespace ra::metrics
