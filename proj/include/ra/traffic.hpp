#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ra/rng.hpp"

namespace ra::traffic {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Point& a, const Point& b);

// Independent Bernoulli arrivals, one rate per device.
struct RegularTraffic {
    std::vector<double> rates; // lambda_n per slot

    void validate() const;
    double system_rate() const; // lambda = sum_n lambda_n

    // One arrival bit per device.
    std::vector<std::uint8_t> sample(Rng& rng) const;

    static RegularTraffic uniform(int num_devices, double rate_per_device);
};

// Probability that at least one of the given trigger probabilities fires:
// p_x = 1 - prod_y (1 - p_xy).
double combine_trigger_probabilities(const std::vector<double>& p_xy);

// Threshold rule: p_xy = 1 if ||x - y|| <= d_th else 0.
double trigger_probability(const Point& device,
                           const std::vector<Point>& active_events,
                           double d_th);

// Spatial layout for the correlated model: device and epicenter positions
// plus the membership table {n : ||x_n - y_l|| <= d_th}.
struct Layout {
    std::vector<Point> devices;
    std::vector<Point> epicenters;
    double d_th = 0.3;
    std::vector<std::vector<int>> members; // per event, device indices

    bool is_member(int device, int event) const;
    // Devices within range of at least one epicenter.
    std::vector<int> event_devices() const;
    // Text table mirroring "event id -> device indices".
    std::string membership_table() const;
};

Layout make_layout(Rng& rng, int num_devices, int num_events, double d_th,
                   double area_w = 1.0, double area_h = 1.0);

// Correlated model: regular Bernoulli traffic plus event-driven activations.
// Each of the L events fires independently with p = lambda_bar / L per slot;
// an active event hands one packet to every device within d_th.
struct CorrelatedTraffic {
    RegularTraffic regular;
    Layout layout;
    double event_prob = 0.0; // p = lambda_bar / L
    // Activation counts per event, for the Table-IV style report.
    mutable std::vector<long long> activation_counts;

    void validate() const;

    // Active epicenter indices for this slot.
    std::vector<int> sample_events(Rng& rng) const;

    // Combined arrival bits: regular + event-driven. A device in range of
    // several simultaneously active events still receives a single packet.
    std::vector<std::uint8_t> sample(Rng& rng) const;

    static CorrelatedTraffic make(Rng& layout_rng, int num_devices, int num_events,
                                  double rate_per_device, double lambda_bar,
                                  double d_th);
};

// Arrival generator facade used by the trainer; regular when `correlated`
// is unset.
struct Model {
    RegularTraffic regular;
    bool is_correlated = false;
    CorrelatedTraffic correlated;

    std::vector<std::uint8_t> sample(Rng& rng) const {
        return is_correlated ? correlated.sample(rng) : regular.sample(rng);
    }
};

} // namespace ra::traffic
