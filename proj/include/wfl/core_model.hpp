#pragma once

#include <span>

#include "wfl/types.hpp"

namespace wfl {

// SINR of the i-th user (1-based, ascending-gain order) under SIC.
// Works in the normalized domain: gains are |h|^2/N_0 so the noise term in
// the denominator is just the subchannel bandwidth.
double sic_sinr(std::span<const double> gains, std::span<const double> powers,
                double subchannel_bandwidth_hz, int i);

// Uplink transmit rate, bits/s.
double uplink_rate(std::span<const double> gains, std::span<const double> powers,
                   double subchannel_bandwidth_hz, int i);

// Model upload delay S / R. Throws InfeasibleDelayError when the rate is zero
// and the payload is not.
double uplink_delay(double payload_bits, std::span<const double> gains,
                    std::span<const double> powers, double subchannel_bandwidth_hz, int i);

// Local training delay phi * alpha / beta.
double compute_delay(double minibatches_trained, double flops_per_minibatch,
                     double flops_per_second);

double total_delay(double uplink_s, double compute_s, double downlink_s);

// Mini-batches a user can fit into the remaining compute window,
// max(0, (T - T_d - T_u) * beta / alpha). Fractional values are legal.
double feasible_minibatches(double round_duration_s, double downlink_s, double uplink_s,
                            double flops_per_second, double flops_per_minibatch);

}  // namespace wfl
