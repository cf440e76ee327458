#include "wfl/core_model.hpp"

#include <cmath>

namespace wfl {

static void check_args(std::span<const double> gains, std::span<const double> powers,
                       double bandwidth, int i) {
    if (bandwidth <= 0) throw std::invalid_argument("subchannel bandwidth must be positive");
    if (gains.size() != powers.size())
        throw std::invalid_argument("gains and powers must have equal length");
    if (i < 1 || static_cast<std::size_t>(i) > gains.size())
        throw std::invalid_argument("user index out of range");
}

double sic_sinr(std::span<const double> gains, std::span<const double> powers,
                double subchannel_bandwidth_hz, int i) {
    check_args(gains, powers, subchannel_bandwidth_hz, i);
    double interference = 0.0;
    for (int j = 0; j < i - 1; ++j) interference += gains[j] * powers[j];
    return gains[i - 1] * powers[i - 1] / (interference + subchannel_bandwidth_hz);
}

double uplink_rate(std::span<const double> gains, std::span<const double> powers,
                   double subchannel_bandwidth_hz, int i) {
    const double sinr = sic_sinr(gains, powers, subchannel_bandwidth_hz, i);
    return subchannel_bandwidth_hz * std::log2(1.0 + sinr);
}

double uplink_delay(double payload_bits, std::span<const double> gains,
                    std::span<const double> powers, double subchannel_bandwidth_hz, int i) {
    if (payload_bits == 0.0) return 0.0;
    const double rate = uplink_rate(gains, powers, subchannel_bandwidth_hz, i);
    if (rate <= 0.0) throw InfeasibleDelayError("zero uplink rate with non-empty payload");
    return payload_bits / rate;
}

double compute_delay(double minibatches_trained, double flops_per_minibatch,
                     double flops_per_second) {
    if (flops_per_second <= 0) throw std::invalid_argument("processing speed must be positive");
    if (minibatches_trained < 0 || flops_per_minibatch < 0)
        throw std::invalid_argument("compute_delay arguments must be non-negative");
    return minibatches_trained * flops_per_minibatch / flops_per_second;
}

double total_delay(double uplink_s, double compute_s, double downlink_s) {
    return uplink_s + compute_s + downlink_s;
}

double feasible_minibatches(double round_duration_s, double downlink_s, double uplink_s,
                            double flops_per_second, double flops_per_minibatch) {
    const double window = round_duration_s - downlink_s - uplink_s;
    if (window <= 0) return 0.0;
    return window * flops_per_second / flops_per_minibatch;
}

}  // namespace wfl
