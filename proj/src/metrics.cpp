#include "ra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ra::metrics {

void AopTracker::update(const std::vector<std::uint8_t>& buffer_bits) {
    if (buffer_bits.size() != w_.size())
        throw std::invalid_argument("buffer bit vector size mismatch");
    for (size_t n = 0; n < w_.size(); ++n) {
        w_[n] = buffer_bits[n] ? w_[n] + 1 : 0;
        sums_[n] += static_cast<double>(w_[n]);
    }
    ++slots_;
}

double AopTracker::average(int device) const {
    return slots_ == 0 ? 0.0 : sums_[device] / slots_;
}

std::vector<double> AopTracker::averages() const {
    std::vector<double> out(w_.size());
    for (size_t n = 0; n < w_.size(); ++n) out[n] = average(static_cast<int>(n));
    return out;
}

double AopTracker::system_average() const {
    if (w_.empty()) return 0.0;
    double s = 0.0;
    for (size_t n = 0; n < w_.size(); ++n) s += average(static_cast<int>(n));
    return s / static_cast<double>(w_.size());
}

double throughput(const std::vector<float>& per_slot_successes, int num_channels) {
    if (per_slot_successes.empty()) return 0.0;
    double total = 0.0;
    for (float s : per_slot_successes) total += s;
    return total / (static_cast<double>(num_channels) * per_slot_successes.size());
}

double throughput_from_events(const std::vector<env::EventMatrices>& g_trace,
                              int num_channels) {
    if (g_trace.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ev : g_trace)
        for (std::uint8_t g : ev.g) total += g;
    return total / (static_cast<double>(num_channels) * g_trace.size());
}

double percentile_nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

DistributionSummary summarize(const std::vector<double>& values) {
    DistributionSummary s;
    if (values.empty()) return s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    s.p25 = percentile_nearest_rank(values, 25);
    s.p50 = percentile_nearest_rank(values, 50);
    s.p75 = percentile_nearest_rank(values, 75);
    s.p95 = percentile_nearest_rank(values, 95);
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

FairnessSummary fairness_summary(const std::vector<long long>& per_device_successes,
                                 const std::vector<double>& per_device_aop) {
    FairnessSummary f;
    std::vector<double> succ(per_device_successes.begin(), per_device_successes.end());
    f.successes = summarize(succ);
    f.aop = summarize(per_device_aop);
    for (long long s : per_device_successes)
        if (s == 0) ++f.starved_devices;
    f.success_spread =
        f.successes.mean > 0.0 ? (f.successes.max - f.successes.min) / f.successes.mean : 0.0;
    return f;
}

MetricsBundle bundle_from_trace(const env::EpisodeTrace& trace, int num_devices,
                                int num_channels) {
    MetricsBundle b;
    b.slots = static_cast<int>(trace.size());
    b.num_channels = num_channels;
    b.per_device_successes.assign(num_devices, 0);
    AopTracker aop(num_devices);
    double total = 0.0;
    for (const auto& rec : trace) {
        total += rec.reward;
        aop.update(rec.buffers);
        for (int n = 0; n < num_devices; ++n) {
            const int a = rec.actions[n];
            if (a != 0 && rec.feedback[a - 1]) ++b.per_device_successes[n];
        }
    }
    b.throughput = b.slots == 0 ? 0.0
                                : total / (static_cast<double>(num_channels) * b.slots);
    b.per_device_aop = aop.averages();
    b.avg_aop = aop.system_average();
    b.fairness = fairness_summary(b.per_device_successes, b.per_device_aop);
    return b;
}

std::string bundle_to_csv(const MetricsBundle& b) {
    std::ostringstream os;
    os << "# metric,value\n";
    os << "throughput," << b.throughput << '\n';
    os << "avg_aop," << b.avg_aop << '\n';
    os << "slots," << b.slots << '\n';
    os << "starved_devices," << b.fairness.starved_devices << '\n';
    os << "success_spread," << b.fairness.success_spread << '\n';
    os << "success_p25," << b.fairness.successes.p25 << '\n';
    os << "success_p75," << b.fairness.successes.p75 << '\n';
    os << "success_p95," << b.fairness.successes.p95 << '\n';
    os << "aop_p25," << b.fairness.aop.p25 << '\n';
    os << "aop_p75," << b.fairness.aop.p75 << '\n';
    return os.str();
}

std::string per_device_csv(const MetricsBundle& b) {
    std::ostringstream os;
    os << "# device,successes,avg_aop\n";
    for (size_t n = 0; n < b.per_device_successes.size(); ++n)
        os << n << ',' << b.per_device_successes[n] << ',' << b.per_device_aop[n] << '\n';
    return os.str();
}

} // namespace ra::metrics
