#pragma once

#include <span>

#include "wfl/types.hpp"

namespace wfl {

// Fraction of the local mini-batch set trained in one round; may exceed 1.
double lptm(double minibatches_trained, int minibatch_count);

// Weighted sum of per-user LPTMs, the round objective.
double wgptm(std::span<const double> weights, std::span<const double> lptms);

// WGPTM expressed directly in the uplink delays:
//   (1 / (alpha * sum |M_k|)) * sum_k max(0, T - T_u,k - T_d) * beta_k.
// Per-user terms that go negative (a user that cannot finish uploading) are
// clamped to zero.
double wgptm_from_delays(const RoundConfig& config, std::span<const UserProfile> users,
                         std::span<const double> per_user_uplink_s);

}  // namespace wfl
