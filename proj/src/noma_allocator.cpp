#include "wfl/noma_allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wfl/convex_kernel.hpp"
#include "wfl/core_model.hpp"
#include "wfl/metric.hpp"

namespace wfl {

namespace {

constexpr double kBracketMargin = 1e-9;  // keeps the z2 denominator positive

std::vector<UserProfile> gather(std::span<const UserProfile> users,
                                const std::vector<int>& ids) {
    std::vector<UserProfile> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(users[id]);
    return out;
}

std::vector<double> weak_betas(std::span<const UserProfile> sub) {
    std::vector<double> b;
    for (std::size_t i = 0; i + 1 < sub.size(); ++i) b.push_back(sub[i].flops_per_second);
    return b;
}

// inner 1-D solve for the second-to-last log-domain variable at bandwidth b
double solve_a(std::span<const UserProfile> sub, double b, const RoundConfig& cfg,
               double rel_tol) {
    auto [lo, hi] = detail::a_bracket(sub, b, cfg);
    auto z = [&](double a) { return zn_objective(a, b, sub, cfg); };
    return minimize_1d(z, lo, hi, rel_tol * (hi - lo)).x;
}

}  // namespace

double power_from_a(double gain_i, double a_i, double a_prev) {
    if (gain_i <= 0) throw std::invalid_argument("power_from_a: gain must be positive");
    if (a_i < a_prev) throw std::invalid_argument("power_from_a: a_i must not be below a_prev");
    return (std::exp2(a_i) - std::exp2(a_prev)) / gain_i;
}

double a_last(double gain_strongest, double max_power_w, double a_prev) {
    return std::log2(gain_strongest * max_power_w + std::exp2(a_prev));
}

double zn_objective(double a_last_minus_one, double bandwidth_hz,
                    std::span<const UserProfile> subchannel_users, const RoundConfig& config) {
    const std::size_t count = subchannel_users.size();
    if (count == 0) throw std::invalid_argument("zn_objective: empty subchannel");
    if (bandwidth_hz <= 0) throw std::invalid_argument("zn_objective: bandwidth must be positive");

    const double a0 = std::log2(bandwidth_hz);
    const UserProfile& strongest = subchannel_users.back();
    const double s = config.payload_bits;

    if (count == 1) {
        const double ak = a_last(strongest.normalized_gain, config.max_power_w, a0);
        return s * strongest.flops_per_second / (bandwidth_hz * (ak - a0));
    }

    auto [lo, hi] = detail::a_bracket(subchannel_users, bandwidth_hz, config);
    if (a_last_minus_one <= a0 || a_last_minus_one > hi + 1e-9)
        throw std::invalid_argument("zn_objective: a outside the feasible bracket");

    const double ak = a_last(strongest.normalized_gain, config.max_power_w, a_last_minus_one);
    const double w1 = s * strongest.flops_per_second / (bandwidth_hz * (ak - a_last_minus_one));

    double root_sum = 0.0;
    for (std::size_t i = 0; i + 1 < count; ++i)
        root_sum += std::sqrt(subchannel_users[i].flops_per_second);
    const double z2 = s * root_sum * root_sum / (bandwidth_hz * (a_last_minus_one - a0));
    return w1 + z2;
}

std::pair<double, double> cauchy_bound_check(std::span<const double> betas,
                                             std::span<const double> a_values) {
    if (a_values.size() != betas.size() + 1)
        throw std::invalid_argument("cauchy_bound_check: need one more a value than betas");
    double lhs = 0.0, root_sum = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const double gap = a_values[i + 1] - a_values[i];
        if (gap <= 0) throw std::invalid_argument("cauchy_bound_check: a must be increasing");
        lhs += betas[i] / gap;
        root_sum += std::sqrt(betas[i]);
    }
    const double rhs = root_sum * root_sum / (a_values.back() - a_values.front());
    return {lhs, rhs};
}

namespace detail {

std::pair<double, double> a_bracket(std::span<const UserProfile> subchannel_users, double b,
                                    const RoundConfig& config) {
    const double a0 = std::log2(b);
    double weak_power_sum = 0.0;
    for (std::size_t i = 0; i + 1 < subchannel_users.size(); ++i)
        weak_power_sum += subchannel_users[i].normalized_gain * config.max_power_w;
    const double hi = std::log2(weak_power_sum + b);
    return {a0 + kBracketMargin, hi};
}

}  // namespace detail

std::vector<SubchannelSolution> solve_p5(const Assignment& assignment,
                                         std::span<const UserProfile> users,
                                         const RoundConfig& config) {
    config.validate();
    const int n_sub = static_cast<int>(assignment.subchannels.size());
    std::vector<std::vector<UserProfile>> subs(n_sub);
    for (int n = 0; n < n_sub; ++n) {
        subs[n] = gather(users, assignment.subchannels[n]);
        if (subs[n].empty()) throw std::invalid_argument("solve_p5: empty subchannel");
    }

    std::vector<std::function<double(double)>> costs;
    std::vector<char> feasible(n_sub, 1);
    for (int n = 0; n < n_sub; ++n) {
        costs.emplace_back([&subs, n, &config, &feasible](double b) {
            const auto& sub = subs[n];
            if (sub.size() == 1) return zn_objective(0.0, b, sub, config);
            auto [lo, hi] = detail::a_bracket(sub, b, config);
            if (hi <= lo) {
                feasible[n] = 0;
                return 1e30;
            }
            auto z = [&](double a) { return zn_objective(a, b, sub, config); };
            return minimize_1d(z, lo, hi, 1e-7 * (hi - lo)).fx;
        });
    }

    const double budget = config.total_bandwidth_hz;
    std::vector<double> lower(n_sub, 1e-3 * budget / config.num_subchannels);
    std::vector<double> bandwidths = allocate_budget(costs, budget, lower, 1e-7);

    std::vector<SubchannelSolution> out(n_sub);
    for (int n = 0; n < n_sub; ++n) {
        out[n].b_star = bandwidths[n];
        if (!feasible[n]) {
            out[n].status = SolverStatus::infeasible;
            out[n].a_star = std::log2(bandwidths[n]);
            continue;
        }
        out[n].a_star = subs[n].size() == 1 ? std::log2(bandwidths[n])
                                            : solve_a(subs[n], bandwidths[n], config, 1e-11);
    }
    return out;
}

std::optional<double> recover_qn(double a_star, double b_star,
                                 std::span<const double> betas_weak) {
    if (betas_weak.empty()) return std::nullopt;
    const double a0 = std::log2(b_star);
    if (a_star < a0) throw std::invalid_argument("recover_qn: a_star below log2(bandwidth)");
    double root_sum = 0.0;
    for (double beta : betas_weak) root_sum += std::sqrt(beta);
    return (a_star - a0) / root_sum;
}

std::vector<double> recover_a_all(double q_star, double a0, std::span<const double> betas_weak) {
    if (q_star < 0) throw std::invalid_argument("recover_a_all: q_star must be non-negative");
    std::vector<double> a;
    a.reserve(betas_weak.size());
    double acc = a0;
    for (double beta : betas_weak) {
        acc += std::sqrt(beta) * q_star;
        a.push_back(acc);
    }
    return a;
}

PowerRecovery recover_powers(std::span<const double> a_list_with_a0,
                             std::span<const double> gains, double max_power_w) {
    if (a_list_with_a0.size() != gains.size())
        throw std::invalid_argument("recover_powers: ladder must have one entry per user");
    PowerRecovery out;
    out.powers_w.reserve(gains.size());
    for (std::size_t i = 0; i + 1 < gains.size(); ++i) {
        double p = power_from_a(gains[i], a_list_with_a0[i + 1], a_list_with_a0[i]);
        if (p > max_power_w) {
            p = max_power_w;
            out.clipped = true;
        }
        out.powers_w.push_back(p);
    }
    out.powers_w.push_back(max_power_w);  // strongest user transmits full power
    return out;
}

namespace detail {

AllocationResult assemble_from_uplinks(std::string scheme,
                                       std::span<const UserProfile> users,
                                       const RoundConfig& config,
                                       std::vector<double> bandwidths,
                                       std::vector<std::vector<double>> powers,
                                       std::vector<double> per_user_uplink_s,
                                       SolverStatus status) {
    const std::size_t n_users = users.size();
    AllocationResult res;
    res.scheme = std::move(scheme);
    res.bandwidths_hz = std::move(bandwidths);
    res.powers_w = std::move(powers);
    res.solver_status = status;

    auto& m = res.metrics;
    m.per_user_uplink_s = std::move(per_user_uplink_s);
    m.per_user_compute_s.assign(n_users, 0.0);
    m.per_user_minibatches.assign(n_users, 0.0);
    m.per_user_lptm.assign(n_users, 0.0);

    std::vector<double> weights(n_users);
    for (std::size_t k = 0; k < n_users; ++k) {
        const auto& u = users[k];
        weights[k] = u.weight;
        const double phi =
            feasible_minibatches(config.round_duration_s, config.downlink_delay_s,
                                 m.per_user_uplink_s[k], u.flops_per_second,
                                 config.flops_per_minibatch);
        m.per_user_minibatches[k] = phi;
        m.per_user_compute_s[k] =
            compute_delay(phi, config.flops_per_minibatch, u.flops_per_second);
        m.per_user_lptm[k] = lptm(phi, u.minibatch_count);
    }

    m.wgptm = wgptm(weights, m.per_user_lptm);
    res.objective = wgptm_from_delays(config, users, m.per_user_uplink_s);
    return res;
}

AllocationResult assemble_result(std::string scheme, const Assignment& assignment,
                                 std::span<const UserProfile> users, const RoundConfig& config,
                                 std::vector<double> bandwidths,
                                 std::vector<std::vector<double>> powers, SolverStatus status) {
    std::vector<double> uplinks(users.size(), std::numeric_limits<double>::infinity());
    for (std::size_t n = 0; n < assignment.subchannels.size(); ++n) {
        const auto& ids = assignment.subchannels[n];
        std::vector<double> gains;
        gains.reserve(ids.size());
        for (int id : ids) gains.push_back(users[id].normalized_gain);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            double t_u;
            try {
                t_u = uplink_delay(config.payload_bits, gains, powers[n], bandwidths[n],
                                   static_cast<int>(i) + 1);
            } catch (const InfeasibleDelayError&) {
                t_u = std::numeric_limits<double>::infinity();
            }
            uplinks[ids[i]] = t_u;
        }
    }
    return assemble_from_uplinks(std::move(scheme), users, config, std::move(bandwidths),
                                 std::move(powers), std::move(uplinks), status);
}

}  // namespace detail

namespace {

AllocationResult finish_allocation(std::string scheme, const Assignment& assignment,
                                   std::span<const UserProfile> users,
                                   const RoundConfig& config,
                                   const std::vector<SubchannelSolution>& sols) {
    const std::size_t n_sub = assignment.subchannels.size();
    std::vector<double> bandwidths(n_sub);
    std::vector<std::vector<double>> powers(n_sub);
    SolverStatus status = SolverStatus::optimal;

    for (std::size_t n = 0; n < n_sub; ++n) {
        bandwidths[n] = sols[n].b_star;
        const auto sub = gather(users, assignment.subchannels[n]);
        if (sols[n].status == SolverStatus::infeasible) {
            powers[n].assign(sub.size(), 0.0);
            status = SolverStatus::infeasible;
            continue;
        }
        const auto betas = weak_betas(sub);
        const double a0 = std::log2(sols[n].b_star);
        std::vector<double> ladder{a0};
        if (!betas.empty()) {
            const double q = *recover_qn(sols[n].a_star, sols[n].b_star, betas);
            for (double a : recover_a_all(q, a0, betas)) ladder.push_back(a);
        }
        std::vector<double> gains;
        for (const auto& u : sub) gains.push_back(u.normalized_gain);
        auto rec = recover_powers(ladder, gains, config.max_power_w);
        if (rec.clipped && status == SolverStatus::optimal) status = SolverStatus::clipped;
        powers[n] = std::move(rec.powers_w);
    }
    return detail::assemble_result(std::move(scheme), assignment, users, config,
                                   std::move(bandwidths), std::move(powers), status);
}

}  // namespace

AllocationResult allocate_joint(const Assignment& assignment,
                                std::span<const UserProfile> users, const RoundConfig& config) {
    const auto sols = solve_p5(assignment, users, config);
    return finish_allocation("joint", assignment, users, config, sols);
}

AllocationResult allocate_power_only(const Assignment& assignment,
                                     std::span<const UserProfile> users,
                                     const RoundConfig& config) {
    config.validate();
    const std::size_t n_sub = assignment.subchannels.size();
    const double b_eq = config.total_bandwidth_hz / static_cast<double>(n_sub);
    std::vector<SubchannelSolution> sols(n_sub);
    for (std::size_t n = 0; n < n_sub; ++n) {
        const auto sub = gather(users, assignment.subchannels[n]);
        if (sub.empty()) throw std::invalid_argument("allocate_power_only: empty subchannel");
        sols[n].b_star = b_eq;
        if (sub.size() == 1) {
            sols[n].a_star = std::log2(b_eq);
            continue;
        }
        auto [lo, hi] = detail::a_bracket(sub, b_eq, config);
        if (hi <= lo) {
            sols[n].status = SolverStatus::infeasible;
            continue;
        }
        sols[n].a_star = solve_a(sub, b_eq, config, 1e-11);
    }
    return finish_allocation("power-only", assignment, users, config, sols);
}

}  // namespace wfl
