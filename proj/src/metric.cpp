#include "wfl/metric.hpp"

namespace wfl {

double lptm(double minibatches_trained, int minibatch_count) {
    if (minibatch_count < 1) throw std::invalid_argument("minibatch count must be >= 1");
    return minibatches_trained / static_cast<double>(minibatch_count);
}

double wgptm(std::span<const double> weights, std::span<const double> lptms) {
    if (weights.size() != lptms.size())
        throw std::invalid_argument("weights and lptms must have equal length");
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) acc += weights[k] * lptms[k];
    return acc;
}

double wgptm_from_delays(const RoundConfig& config, std::span<const UserProfile> users,
                         std::span<const double> per_user_uplink_s) {
    if (users.size() != per_user_uplink_s.size())
        throw std::invalid_argument("users and uplink delays must have equal length");
    double total_minibatches = 0.0;
    for (const auto& u : users) total_minibatches += u.minibatch_count;
    double acc = 0.0;
    for (std::size_t k = 0; k < users.size(); ++k) {
        const double window =
            config.round_duration_s - per_user_uplink_s[k] - config.downlink_delay_s;
        if (window > 0) acc += window * users[k].flops_per_second;
    }
    return acc / (config.flops_per_minibatch * total_minibatches);
}

}  // namespace wfl
