#include "ra/traffic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ra::traffic {

double distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

void RegularTraffic::validate() const {
    for (double r : rates)
        if (r < 0.0 || r > 1.0) throw std::invalid_argument("arrival rate outside [0,1]");
}

double RegularTraffic::system_rate() const {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
}

std::vector<std::uint8_t> RegularTraffic::sample(Rng& rng) const {
    std::vector<std::uint8_t> bits(rates.size(), 0);
    for (size_t n = 0; n < rates.size(); ++n) bits[n] = rng.bernoulli(rates[n]) ? 1 : 0;
    return bits;
}

RegularTraffic RegularTraffic::uniform(int num_devices, double rate_per_device) {
    RegularTraffic t;
    t.rates.assign(num_devices, rate_per_device);
    t.validate();
    return t;
}

double combine_trigger_probabilities(const std::vector<double>& p_xy) {
    double none = 1.0;
    for (double p : p_xy) none *= (1.0 - p);
    return 1.0 - none;
}

double trigger_probability(const Point& device,
                           const std::vector<Point>& active_events,
                           double d_th) {
    std::vector<double> p;
    p.reserve(active_events.size());
    for (const auto& y : active_events)
        p.push_back(distance(device, y) <= d_th ? 1.0 : 0.0);
    return combine_trigger_probabilities(p);
}

bool Layout::is_member(int device, int event) const {
    for (int n : members[event])
        if (n == device) return true;
    return false;
}

std::vector<int> Layout::event_devices() const {
    std::vector<std::uint8_t> mark(devices.size(), 0);
    for (const auto& list : members)
        for (int n : list) mark[n] = 1;
    std::vector<int> out;
    for (size_t n = 0; n < mark.size(); ++n)
        if (mark[n]) out.push_back(static_cast<int>(n));
    return out;
}

std::string Layout::membership_table() const {
    std::ostringstream os;
    os << "# event\tdevices (within d_th = " << d_th << ")\n";
    for (size_t l = 0; l < members.size(); ++l) {
        os << (l + 1) << '\t';
        for (size_t i = 0; i < members[l].size(); ++i) {
            if (i) os << ',';
            os << members[l][i] + 1; // 1-based, matching the report format
        }
        if (members[l].empty()) os << '-';
        os << '\n';
    }
    return os.str();
}

Layout make_layout(Rng& rng, int num_devices, int num_events, double d_th,
                   double area_w, double area_h) {
    if (num_events < 1) throw std::invalid_argument("need at least one event epicenter");
    if (area_w <= 0.0 || area_h <= 0.0) throw std::invalid_argument("area dimensions must be positive");
    Layout ly;
    ly.d_th = d_th;
    ly.devices.resize(num_devices);
    ly.epicenters.resize(num_events);
    for (auto& p : ly.devices) p = Point{rng.uniform() * area_w, rng.uniform() * area_h};
    for (auto& p : ly.epicenters) p = Point{rng.uniform() * area_w, rng.uniform() * area_h};
    ly.members.resize(num_events);
    for (int l = 0; l < num_events; ++l)
        for (int n = 0; n < num_devices; ++n)
            if (distance(ly.devices[n], ly.epicenters[l]) <= d_th) ly.members[l].push_back(n);
    return ly;
}

void CorrelatedTraffic::validate() const {
    regular.validate();
    if (event_prob < 0.0 || event_prob > 1.0)
        throw std::invalid_argument("event probability outside [0,1]");
    if (layout.devices.size() != regular.rates.size())
        throw std::invalid_argument("layout/rates size mismatch");
}

std::vector<int> CorrelatedTraffic::sample_events(Rng& rng) const {
    std::vector<int> active;
    for (size_t l = 0; l < layout.epicenters.size(); ++l) {
        if (rng.bernoulli(event_prob)) {
            active.push_back(static_cast<int>(l));
            if (activation_counts.size() == layout.epicenters.size())
                ++activation_counts[l];
        }
    }
    return active;
}

std::vector<std::uint8_t> CorrelatedTraffic::sample(Rng& rng) const {
    std::vector<std::uint8_t> bits = regular.sample(rng);
    const auto active = sample_events(rng);
    for (int l : active)
        for (int n : layout.members[l]) bits[n] = 1; // one packet per device
    return bits;
}

CorrelatedTraffic CorrelatedTraffic::make(Rng& layout_rng, int num_devices,
                                          int num_events, double rate_per_device,
                                          double lambda_bar, double d_th) {
    CorrelatedTraffic t;
    t.regular = RegularTraffic::uniform(num_devices, rate_per_device);
    t.layout = make_layout(layout_rng, num_devices, num_events, d_th);
    t.event_prob = lambda_bar / num_events;
    t.activation_counts.assign(num_events, 0);
    t.validate();
    return t;
}

} // namespace ra::traffic
