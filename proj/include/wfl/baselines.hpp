#pragma once

#include <span>

#include "wfl/types.hpp"

namespace wfl {

// Every user transmits P_max in equal-bandwidth subchannels.
AllocationResult allocate_full_power(const Assignment& assignment,
                                     std::span<const UserProfile> users,
                                     const RoundConfig& config);

// MC-OMA/TDMA: per subchannel, full-power solo transmissions in
// non-overlapping slots packed back-to-back ending at the round boundary;
// the transmission order is enumerated to maximize the weighted metric.
AllocationResult allocate_oma_flexible(const Assignment& assignment,
                                       std::span<const UserProfile> users,
                                       const RoundConfig& config);

// Sync-FL max-min joint allocation: per subchannel the powers equalize
// T_u,k * beta_k / (alpha |M_k|) across users, the bandwidths equalize that
// level across subchannels, and every user trains the smallest feasible
// iteration count.
AllocationResult allocate_sync_joint(const Assignment& assignment,
                                     std::span<const UserProfile> users,
                                     const RoundConfig& config);

AllocationResult allocate_sync_power_only(const Assignment& assignment,
                                          std::span<const UserProfile> users,
                                          const RoundConfig& config);

AllocationResult allocate_sync_full_power(const Assignment& assignment,
                                          std::span<const UserProfile> users,
                                          const RoundConfig& config);

AllocationResult allocate_sync_oma(const Assignment& assignment,
                                   std::span<const UserProfile> users,
                                   const RoundConfig& config);

}  // namespace wfl
