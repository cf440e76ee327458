#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wfl {

// Raised when a user cannot complete its model upload within the round
// (zero transmit rate with a non-empty payload).
struct InfeasibleDelayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Global physical and protocol constants of one WFL round.
// All channel quantities follow the normalized-gain convention: gains are
// |h|^2 / N_0 (Hz/W) and the noise term in the SINR denominator is the
// subchannel bandwidth itself.
struct RoundConfig {
    double total_bandwidth_hz = 30e6;
    int num_subchannels = 10;
    double round_duration_s = 10.0;
    double downlink_delay_s = 0.5;
    double max_power_w = 39.8107170553497;  // 46 dBm
    double payload_bits = 4.84e6 * 8.0;     // 4.84 Mbytes, decimal
    double flops_per_minibatch = 0.04e9;
    double gain_scale = 1e6;  // kappa: maps the dB gain draw into Hz/W

    void validate() const {
        if (total_bandwidth_hz <= 0 || round_duration_s <= 0 || downlink_delay_s <= 0 ||
            max_power_w <= 0 || payload_bits <= 0 || flops_per_minibatch <= 0 || gain_scale <= 0)
            throw std::invalid_argument("RoundConfig: all fields must be strictly positive");
        if (num_subchannels < 1)
            throw std::invalid_argument("RoundConfig: num_subchannels must be >= 1");
        if (downlink_delay_s >= round_duration_s)
            throw std::invalid_argument("RoundConfig: downlink delay must be shorter than the round");
    }
};

struct UserProfile {
    int user_id = 0;
    int minibatch_count = 1;      // |M_k|
    double weight = 1.0;          // e_k, weights of a population sum to 1
    double flops_per_second = 0;  // beta_k
    double normalized_gain = 0;   // |h_k|^2 / N_0, Hz/W
};

// Per-subchannel ordered user lists. Entries are indices into the user
// vector, sorted ascending by normalized gain (the SIC decoding order).
struct Assignment {
    std::vector<std::vector<int>> subchannels;
};

struct RoundMetrics {
    std::vector<double> per_user_lptm;
    std::vector<double> per_user_minibatches;
    std::vector<double> per_user_uplink_s;
    std::vector<double> per_user_compute_s;
    double wgptm = 0.0;
};

enum class SolverStatus { optimal, clipped, infeasible };

inline const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::clipped: return "clipped";
        case SolverStatus::infeasible: return "infeasible";
    }
    return "?";
}

struct AllocationResult {
    std::string scheme;
    std::vector<double> bandwidths_hz;           // B_n*, one per subchannel
    std::vector<std::vector<double>> powers_w;   // per subchannel, ascending-gain order
    RoundMetrics metrics;                        // indexed by user position
    double objective = 0.0;                      // WGPTM
    SolverStatus solver_status = SolverStatus::optimal;
};

}  // namespace wfl
