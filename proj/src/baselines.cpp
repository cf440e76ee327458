#include "wfl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wfl/convex_kernel.hpp"
#include "wfl/core_model.hpp"
#include "wfl/metric.hpp"
#include "wfl/noma_allocator.hpp"

namespace wfl {

namespace {

constexpr int kMaxEnumeratedUsers = 9;

std::vector<UserProfile> gather(std::span<const UserProfile> users,
                                const std::vector<int>& ids) {
    std::vector<UserProfile> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(users[id]);
    return out;
}

// Collapse flexible per-user LPTMs to the Sync-FL common iteration count: the
// global minimum. Kept continuous, matching the fractional-phi convention.
void sync_collapse(AllocationResult& res, std::span<const UserProfile> users) {
    auto& m = res.metrics;
    const double common =
        *std::min_element(m.per_user_lptm.begin(), m.per_user_lptm.end());
    for (std::size_t k = 0; k < users.size(); ++k) {
        m.per_user_lptm[k] = common;
        m.per_user_minibatches[k] = common * users[k].minibatch_count;
    }
    res.objective = common;  // weights sum to 1, so the weighted sum equals the minimum
    m.wgptm = common;
}

void fix_sync_compute(AllocationResult& res, std::span<const UserProfile> users,
                      const RoundConfig& config) {
    auto& m = res.metrics;
    for (std::size_t k = 0; k < users.size(); ++k)
        m.per_user_compute_s[k] = compute_delay(m.per_user_minibatches[k],
                                                config.flops_per_minibatch,
                                                users[k].flops_per_second);
}

// --- MC-OMA helpers -------------------------------------------------------

struct OmaSlot {
    std::vector<int> order;              // positions within the subchannel, first transmits first
    std::vector<double> effective_uplink;  // per position index (not order index)
};

// Slot durations are order-independent; only compute windows depend on the order.
std::vector<double> slot_durations(std::span<const UserProfile> sub, double bandwidth,
                                   const RoundConfig& config) {
    std::vector<double> d(sub.size());
    for (std::size_t i = 0; i < sub.size(); ++i) {
        const double rate =
            bandwidth *
            std::log2(1.0 + sub[i].normalized_gain * config.max_power_w / bandwidth);
        d[i] = rate > 0 ? config.payload_bits / rate
                        : std::numeric_limits<double>::infinity();
    }
    return d;
}

// Effective uplink delay of the user in slot position j: its own slot plus
// everything scheduled after it (slots are packed back-to-back ending at T).
std::vector<double> effective_uplinks(const std::vector<int>& order,
                                      const std::vector<double>& d) {
    std::vector<double> eff(order.size());
    double tail = 0.0;
    for (std::size_t j = order.size(); j-- > 0;) {
        tail += d[order[j]];
        eff[order[j]] = tail;
    }
    return eff;
}

struct OmaScore {
    double primary;
    double secondary;
    bool operator>(const OmaScore& o) const {
        if (primary != o.primary) return primary > o.primary;
        return secondary > o.secondary;
    }
};

template <typename ScoreFn>
OmaSlot best_order(std::span<const UserProfile> sub, const std::vector<double>& d,
                   ScoreFn&& score) {
    std::vector<int> order(sub.size());
    std::iota(order.begin(), order.end(), 0);

    if (sub.size() > kMaxEnumeratedUsers) {
        // factorial enumeration is out of reach; fall back to the weighted
        // completion-time exchange rule (descending e_k beta_k / (alpha |M_k|))
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ca = sub[a].weight * sub[a].flops_per_second / sub[a].minibatch_count;
            const double cb = sub[b].weight * sub[b].flops_per_second / sub[b].minibatch_count;
            return ca > cb;
        });
        return {order, effective_uplinks(order, d)};
    }

    std::vector<int> best = order;
    OmaScore best_score = score(effective_uplinks(order, d));
    while (std::next_permutation(order.begin(), order.end())) {
        const OmaScore s = score(effective_uplinks(order, d));
        if (s > best_score) {
            best_score = s;
            best = order;
        }
    }
    return {best, effective_uplinks(best, d)};
}

template <typename ScoreBuilder>
AllocationResult run_oma(std::string scheme, const Assignment& assignment,
                         std::span<const UserProfile> users, const RoundConfig& config,
                         ScoreBuilder&& make_score) {
    config.validate();
    const std::size_t n_sub = assignment.subchannels.size();
    const double b_eq = config.total_bandwidth_hz / static_cast<double>(n_sub);

    std::vector<double> bandwidths(n_sub, b_eq);
    std::vector<std::vector<double>> powers(n_sub);
    std::vector<double> uplinks(users.size(), std::numeric_limits<double>::infinity());

    for (std::size_t n = 0; n < n_sub; ++n) {
        const auto& ids = assignment.subchannels[n];
        const auto sub = gather(users, ids);
        powers[n].assign(sub.size(), config.max_power_w);
        const auto d = slot_durations(sub, b_eq, config);
        const auto slot = best_order(sub, d, make_score(sub));
        for (std::size_t i = 0; i < ids.size(); ++i) uplinks[ids[i]] = slot.effective_uplink[i];
    }
    return detail::assemble_from_uplinks(std::move(scheme), users, config,
                                         std::move(bandwidths), std::move(powers),
                                         std::move(uplinks), SolverStatus::optimal);
}

// --- Sync-FL equalization (Appendix-style max-min powers) -----------------

// Per-subchannel common level q with T_u,k beta_k / (alpha |M_k|) = q for all
// users, the strongest at full power. Solved by bisection on q.
double equalized_level(std::span<const UserProfile> sub, double bandwidth,
                       const RoundConfig& config) {
    const double a0 = std::log2(bandwidth);
    const std::size_t count = sub.size();
    std::vector<double> c(count);
    for (std::size_t i = 0; i < count; ++i)
        c[i] = config.payload_bits * sub[i].flops_per_second /
               (bandwidth * config.flops_per_minibatch * sub[i].minibatch_count);
    const double g_top = sub.back().normalized_gain;

    auto residual = [&](double q) {
        double x = a0;
        for (std::size_t i = 0; i + 1 < count; ++i) x += c[i] / q;
        // overflow-safe form of log2(g P + 2^x) - x for large x
        const double gap_top = std::log2(1.0 + g_top * config.max_power_w * std::exp2(-x));
        return gap_top - c.back() / q;
    };

    double q_hi = 1.0;
    for (int it = 0; it < 400 && residual(q_hi) < 0; ++it) q_hi *= 4.0;
    double q_lo = q_hi;
    for (int it = 0; it < 400 && residual(q_lo) > 0; ++it) q_lo /= 4.0;
    for (int it = 0; it < 200; ++it) {
        const double q = 0.5 * (q_lo + q_hi);
        if (residual(q) > 0)
            q_hi = q;
        else
            q_lo = q;
        if (q_hi - q_lo <= 1e-14 * q_hi) break;
    }
    return 0.5 * (q_lo + q_hi);
}

// Power ladder implied by the equalized level at the given bandwidth.
std::vector<double> sync_powers(std::span<const UserProfile> sub, double bandwidth, double q,
                                const RoundConfig& config, bool& clipped) {
    const double a0 = std::log2(bandwidth);
    std::vector<double> ladder{a0};
    double x = a0;
    for (std::size_t i = 0; i + 1 < sub.size(); ++i) {
        const double c = config.payload_bits * sub[i].flops_per_second /
                         (bandwidth * config.flops_per_minibatch * sub[i].minibatch_count);
        x += c / q;
        ladder.push_back(x);
    }
    std::vector<double> gains;
    for (const auto& u : sub) gains.push_back(u.normalized_gain);
    auto rec = recover_powers(ladder, gains, config.max_power_w);
    clipped = clipped || rec.clipped;
    return rec.powers_w;
}

AllocationResult run_sync_equalized(std::string scheme, const Assignment& assignment,
                                    std::span<const UserProfile> users,
                                    const RoundConfig& config,
                                    const std::vector<double>& bandwidths) {
    const std::size_t n_sub = assignment.subchannels.size();
    std::vector<std::vector<double>> powers(n_sub);
    bool clipped = false;
    for (std::size_t n = 0; n < n_sub; ++n) {
        const auto sub = gather(users, assignment.subchannels[n]);
        const double q = equalized_level(sub, bandwidths[n], config);
        powers[n] = sync_powers(sub, bandwidths[n], q, config, clipped);
    }
    auto res = detail::assemble_result(
        std::move(scheme), assignment, users, config, bandwidths, std::move(powers),
        clipped ? SolverStatus::clipped : SolverStatus::optimal);
    sync_collapse(res, users);
    fix_sync_compute(res, users, config);
    return res;
}

}  // namespace

AllocationResult allocate_full_power(const Assignment& assignment,
                                     std::span<const UserProfile> users,
                                     const RoundConfig& config) {
    config.validate();
    const std::size_t n_sub = assignment.subchannels.size();
    const double b_eq = config.total_bandwidth_hz / static_cast<double>(n_sub);
    std::vector<double> bandwidths(n_sub, b_eq);
    std::vector<std::vector<double>> powers(n_sub);
    for (std::size_t n = 0; n < n_sub; ++n)
        powers[n].assign(assignment.subchannels[n].size(), config.max_power_w);

    auto res = detail::assemble_result("full-power", assignment, users, config,
                                       std::move(bandwidths), std::move(powers),
                                       SolverStatus::optimal);
    for (double phi : res.metrics.per_user_minibatches)
        if (phi <= 0.0) {
            res.solver_status = SolverStatus::infeasible;
            break;
        }
    return res;
}

AllocationResult allocate_oma_flexible(const Assignment& assignment,
                                       std::span<const UserProfile> users,
                                       const RoundConfig& config) {
    return run_oma("oma", assignment, users, config, [&](std::span<const UserProfile> sub) {
        return [sub, &config](const std::vector<double>& eff) {
            double weighted = 0.0;
            for (std::size_t i = 0; i < sub.size(); ++i) {
                const double phi =
                    feasible_minibatches(config.round_duration_s, config.downlink_delay_s,
                                         eff[i], sub[i].flops_per_second,
                                         config.flops_per_minibatch);
                weighted += sub[i].weight * phi / sub[i].minibatch_count;
            }
            return OmaScore{weighted, 0.0};
        };
    });
}

AllocationResult allocate_sync_joint(const Assignment& assignment,
                                     std::span<const UserProfile> users,
                                     const RoundConfig& config) {
    config.validate();
    const std::size_t n_sub = assignment.subchannels.size();
    std::vector<std::function<double(double)>> levels;
    std::vector<std::vector<UserProfile>> subs(n_sub);
    for (std::size_t n = 0; n < n_sub; ++n) {
        subs[n] = gather(users, assignment.subchannels[n]);
        if (subs[n].empty()) throw std::invalid_argument("allocate_sync_joint: empty subchannel");
        levels.emplace_back(
            [&subs, n, &config](double b) { return equalized_level(subs[n], b, config); });
    }
    const double budget = config.total_bandwidth_hz;
    std::vector<double> lower(n_sub, 1e-3 * budget / config.num_subchannels);
    const auto bandwidths = equalize_levels(levels, budget, lower, 1e-7);
    auto res = run_sync_equalized("sync-joint", assignment, users, config, bandwidths);
    return res;
}

AllocationResult allocate_sync_power_only(const Assignment& assignment,
                                          std::span<const UserProfile> users,
                                          const RoundConfig& config) {
    config.validate();
    const std::size_t n_sub = assignment.subchannels.size();
    const double b_eq = config.total_bandwidth_hz / static_cast<double>(n_sub);
    return run_sync_equalized("sync-power-only", assignment, users, config,
                              std::vector<double>(n_sub, b_eq));
}

AllocationResult allocate_sync_full_power(const Assignment& assignment,
                                          std::span<const UserProfile> users,
                                          const RoundConfig& config) {
    auto res = allocate_full_power(assignment, users, config);
    res.scheme = "sync-full-power";
    sync_collapse(res, users);
    fix_sync_compute(res, users, config);
    return res;
}

AllocationResult allocate_sync_oma(const Assignment& assignment,
                                   std::span<const UserProfile> users,
                                   const RoundConfig& config) {
    auto res = run_oma("sync-oma", assignment, users, config,
                       [&](std::span<const UserProfile> sub) {
                           return [sub, &config](const std::vector<double>& eff) {
                               double min_lptm = std::numeric_limits<double>::infinity();
                               double weighted = 0.0;
                               for (std::size_t i = 0; i < sub.size(); ++i) {
                                   const double phi = feasible_minibatches(
                                       config.round_duration_s, config.downlink_delay_s, eff[i],
                                       sub[i].flops_per_second, config.flops_per_minibatch);
                                   const double l = phi / sub[i].minibatch_count;
                                   min_lptm = std::min(min_lptm, l);
                                   weighted += sub[i].weight * l;
                               }
                               return OmaScore{min_lptm, weighted};
                           };
                       });
    sync_collapse(res, users);
    fix_sync_compute(res, users, config);
    return res;
}

}  // namespace wfl
