#include "wfl/clustering.hpp"

#include <algorithm>
#include <numeric>

#include "wfl/rng.hpp"

namespace wfl {

static void check_sizes(std::size_t num_users, int num_subchannels) {
    if (num_subchannels < 1) throw std::invalid_argument("need at least one subchannel");
    if (num_users < static_cast<std::size_t>(num_subchannels))
        throw std::invalid_argument("need at least as many users as subchannels");
}

static Assignment label_cyclically(std::span<const UserProfile> users,
                                   const std::vector<int>& order, int num_subchannels) {
    Assignment a;
    a.subchannels.resize(num_subchannels);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        a.subchannels[pos % num_subchannels].push_back(order[pos]);
    for (auto& sub : a.subchannels)
        std::stable_sort(sub.begin(), sub.end(), [&](int lhs, int rhs) {
            return users[lhs].normalized_gain < users[rhs].normalized_gain;
        });
    return a;
}

Assignment cluster_sorted(std::span<const UserProfile> users, int num_subchannels) {
    check_sizes(users.size(), num_subchannels);
    std::vector<int> order(users.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return users[lhs].normalized_gain < users[rhs].normalized_gain;
    });
    return label_cyclically(users, order, num_subchannels);
}

Assignment cluster_random(std::span<const UserProfile> users, int num_subchannels,
                          std::uint64_t seed) {
    check_sizes(users.size(), num_subchannels);
    std::vector<int> order(users.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    return label_cyclically(users, order, num_subchannels);
}

}  // namespace wfl
