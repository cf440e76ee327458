#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wfl/types.hpp"

namespace wfl {

// Log-domain substituted variables of one subchannel, normalized convention:
//   a[i] = log2(sum_{j<=i} g_j p_j + B_n),  a[0] = log2(B_n).
struct SubstitutedVars {
    std::vector<double> a;  // size |K_n| + 1
    double q_n = 0.0;
};

// Transmit power recovered from two adjacent log-domain variables:
// (2^a_i - 2^a_prev) / g_i.
double power_from_a(double gain_i, double a_i, double a_prev);

// Top-of-stack variable with the strongest user at full power:
// log2(g_K * P_max + 2^a_prev).
double a_last(double gain_strongest, double max_power_w, double a_prev);

// Reduced per-subchannel objective (weighted-delay units, s*FLOPS):
// the Cauchy lower bound of the weighted uplink-delay sum as a function of
// the second-to-last log-domain variable and the subchannel bandwidth.
// Users must be the subchannel's members in ascending-gain order.
double zn_objective(double a_last_minus_one, double bandwidth_hz,
                    std::span<const UserProfile> subchannel_users, const RoundConfig& config);

// lhs = sum beta_i/(A_i - A_{i-1}), rhs = (sum sqrt(beta_i))^2/(A_last - A_0);
// lhs >= rhs always.
std::pair<double, double> cauchy_bound_check(std::span<const double> betas,
                                             std::span<const double> a_values);

struct SubchannelSolution {
    double a_star = 0.0;  // second-to-last log-domain variable
    double b_star = 0.0;  // bandwidth
    SolverStatus status = SolverStatus::optimal;
};

// Joint minimization of the reduced objective over {a_n, B_n}: inner 1-D
// search over a_n for fixed bandwidth, outer budget allocation over B_n.
std::vector<SubchannelSolution> solve_p5(const Assignment& assignment,
                                         std::span<const UserProfile> users,
                                         const RoundConfig& config);

// Common Cauchy ratio (a_star - log2(b_star)) / sum sqrt(beta_weak).
// Empty for single-user subchannels.
std::optional<double> recover_qn(double a_star, double b_star,
                                 std::span<const double> betas_weak);

// a_i = a0 + q * sum_{j<=i} sqrt(beta_j), i = 1..#weak.
std::vector<double> recover_a_all(double q_star, double a0, std::span<const double> betas_weak);

struct PowerRecovery {
    std::vector<double> powers_w;
    bool clipped = false;
};

// Powers from the full log-domain ladder (a0 included); weak users clip at
// P_max, the strongest user transmits P_max.
PowerRecovery recover_powers(std::span<const double> a_list_with_a0,
                             std::span<const double> gains, double max_power_w);

// Full pipeline: solve, recover powers, evaluate delays and the round metric.
AllocationResult allocate_joint(const Assignment& assignment,
                                std::span<const UserProfile> users, const RoundConfig& config);

// Equal bandwidth B/N per subchannel, per-subchannel power optimization only.
AllocationResult allocate_power_only(const Assignment& assignment,
                                     std::span<const UserProfile> users,
                                     const RoundConfig& config);

namespace detail {
// Bracket for the second-to-last log-domain variable at bandwidth b.
// Returns {lo, hi}; infeasible when hi <= lo.
std::pair<double, double> a_bracket(std::span<const UserProfile> subchannel_users, double b,
                                    const RoundConfig& config);

// Metric assembly from known per-user uplink delays (SIC or slotted).
AllocationResult assemble_from_uplinks(std::string scheme,
                                       std::span<const UserProfile> users,
                                       const RoundConfig& config,
                                       std::vector<double> bandwidths,
                                       std::vector<std::vector<double>> powers,
                                       std::vector<double> per_user_uplink_s,
                                       SolverStatus status);

// Metric assembly for SIC schemes: per-user delays -> LPTMs -> WGPTM.
AllocationResult assemble_result(std::string scheme, const Assignment& assignment,
                                 std::span<const UserProfile> users, const RoundConfig& config,
                                 std::vector<double> bandwidths,
                                 std::vector<std::vector<double>> powers, SolverStatus status);
}  // namespace detail

}  // namespace wfl
