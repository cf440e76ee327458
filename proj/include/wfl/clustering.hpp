#pragma once

#include <cstdint>
#include <span>

#include "wfl/types.hpp"

namespace wfl {

// Sort users ascending by gain and label them cyclically 1..N; users sharing
// a label share a subchannel. Within a subchannel the ascending order is
// preserved.
Assignment cluster_sorted(std::span<const UserProfile> users, int num_subchannels);

// Seeded random permutation, cyclic labels, then each subchannel re-sorted
// ascending by gain (the SIC ordering invariant).
Assignment cluster_random(std::span<const UserProfile> users, int num_subchannels,
                          std::uint64_t seed);

}  // namespace wfl
