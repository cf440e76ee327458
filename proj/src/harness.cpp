#include "wfl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "wfl/baselines.hpp"
#include "wfl/clustering.hpp"
#include "wfl/noma_allocator.hpp"
#include "wfl/rng.hpp"

namespace wfl {

void Scenario::validate() const {
    config.validate();
    if (num_users < config.num_subchannels)
        throw std::invalid_argument("Scenario: need at least one user per subchannel");
    if (gain_db_min >= gain_db_max || flops_per_second_min >= flops_per_second_max ||
        dataset_size_min >= dataset_size_max)
        throw std::invalid_argument("Scenario: distribution ranges must be non-degenerate");
    if (flops_per_second_min <= 0 || dataset_size_min < 1 || minibatch_size < 1)
        throw std::invalid_argument("Scenario: speeds, dataset sizes and mini-batch size must be positive");
    if (clustering != "sorted" && clustering != "random")
        throw std::invalid_argument("Scenario: clustering must be \"sorted\" or \"random\"");
    if (num_trials < 1) throw std::invalid_argument("Scenario: num_trials must be >= 1");
    for (const auto& s : schemes) scheme_by_name(s);  // throws on unknown names
}

Scenario scenario_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("scenario JSON: top level must be an object");

    Scenario s;
    auto take = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) {
            it->get_to(field);
            j.erase(it);
        }
    };
    take("total_bandwidth_hz", s.config.total_bandwidth_hz);
    take("num_subchannels", s.config.num_subchannels);
    take("round_duration_s", s.config.round_duration_s);
    take("downlink_delay_s", s.config.downlink_delay_s);
    take("max_power_w", s.config.max_power_w);
    take("payload_bits", s.config.payload_bits);
    take("flops_per_minibatch", s.config.flops_per_minibatch);
    take("gain_scale", s.config.gain_scale);
    take("num_users", s.num_users);
    take("gain_db_min", s.gain_db_min);
    take("gain_db_max", s.gain_db_max);
    take("flops_per_second_min", s.flops_per_second_min);
    take("flops_per_second_max", s.flops_per_second_max);
    take("dataset_size_min", s.dataset_size_min);
    take("dataset_size_max", s.dataset_size_max);
    take("minibatch_size", s.minibatch_size);
    take("clustering", s.clustering);
    take("schemes", s.schemes);
    take("num_trials", s.num_trials);
    take("seed", s.master_seed);
    if (!j.empty())
        throw std::invalid_argument("scenario JSON: unknown key \"" + j.begin().key() + "\"");
    s.validate();
    return s;
}

namespace {

struct SchemeEntry {
    const char* name;
    SchemeFn fn;
};

constexpr SchemeEntry kSchemes[] = {
    {"joint", allocate_joint},
    {"power-only", allocate_power_only},
    {"full-power", allocate_full_power},
    {"oma", allocate_oma_flexible},
    {"sync-joint", allocate_sync_joint},
    {"sync-power-only", allocate_sync_power_only},
    {"sync-full-power", allocate_sync_full_power},
    {"sync-oma", allocate_sync_oma},
};

}  // namespace

const std::vector<std::string>& scheme_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& e : kSchemes) v.emplace_back(e.name);
        return v;
    }();
    return names;
}

SchemeFn scheme_by_name(const std::string& name) {
    for (const auto& e : kSchemes)
        if (name == e.name) return e.fn;
    std::string msg = "unknown scheme \"" + name + "\"; valid schemes:";
    for (const auto& e : kSchemes) msg += std::string(" ") + e.name;
    throw std::invalid_argument(msg);
}

std::vector<UserProfile> generate_realization(const Scenario& scenario,
                                              std::uint64_t trial_index) {
    Rng rng = Rng::derive(scenario.master_seed, trial_index);
    std::vector<UserProfile> users(scenario.num_users);
    double dataset_total = 0.0;
    std::vector<long> datasets(scenario.num_users);
    for (int k = 0; k < scenario.num_users; ++k) {
        auto& u = users[k];
        u.user_id = k;
        const double gain_db = rng.uniform(scenario.gain_db_min, scenario.gain_db_max);
        u.normalized_gain = scenario.config.gain_scale * std::pow(10.0, gain_db / 10.0);
        u.flops_per_second =
            rng.uniform(scenario.flops_per_second_min, scenario.flops_per_second_max);
        datasets[k] = rng.uniform_int(scenario.dataset_size_min, scenario.dataset_size_max);
        u.minibatch_count = std::max(
            1L, std::lround(static_cast<double>(datasets[k]) / scenario.minibatch_size));
        dataset_total += static_cast<double>(datasets[k]);
    }
    for (int k = 0; k < scenario.num_users; ++k)
        users[k].weight = static_cast<double>(datasets[k]) / dataset_total;
    return users;
}

Assignment cluster_for(const Scenario& scenario, std::span<const UserProfile> users,
                       std::uint64_t trial_index) {
    if (scenario.clustering == "random")
        return cluster_random(users, scenario.config.num_subchannels,
                              Rng::mix(scenario.master_seed ^ 0xC1u, trial_index));
    return cluster_sorted(users, scenario.config.num_subchannels);
}

int alloc_threads() {
    int cap = 0;
    if (const char* env = std::getenv("WFL_ALLOC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 0) cap = static_cast<int>(v);
    }
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    return cap > 0 ? std::min(cap, hw) : hw;
}

namespace {

// Runs fn(i) for i in [0, count) across worker threads; exceptions inside
// fn must be handled by fn itself so results stay indexable by i.
void parallel_for(int count, const std::function<void(int)>& fn) {
    const int workers = std::min(alloc_threads(), std::max(1, count));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

Scenario with_sweep_value(const Scenario& base, const std::string& param, double value) {
    Scenario s = base;
    if (param == "users")
        s.num_users = static_cast<int>(std::lround(value));
    else if (param == "subchannels")
        s.config.num_subchannels = static_cast<int>(std::lround(value));
    else if (param == "duration")
        s.config.round_duration_s = value;
    else
        throw std::invalid_argument("run_sweep: sweep_param must be users, subchannels or duration");
    s.validate();
    return s;
}

}  // namespace

std::vector<SweepRow> run_sweep(const Scenario& scenario, const std::string& sweep_param,
                                std::span<const double> values) {
    scenario.validate();
    if (!std::is_sorted(values.begin(), values.end()))
        throw std::invalid_argument("run_sweep: values must be sorted ascending");

    const std::vector<std::string> schemes =
        scenario.schemes.empty() ? scheme_names() : scenario.schemes;
    std::vector<SchemeFn> fns;
    for (const auto& name : schemes) fns.push_back(scheme_by_name(name));

    std::vector<SweepRow> rows;
    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
    for (double value : values) {
        const Scenario sv = with_sweep_value(scenario, sweep_param, value);

        // one draw per trial shared by all schemes (paired comparison);
        // a failed trial is marked NaN for that scheme and skipped in the mean
        std::vector<std::vector<double>> wg(sv.num_trials,
                                            std::vector<double>(fns.size(), kNan));
        parallel_for(sv.num_trials, [&](int trial) {
            const auto users = generate_realization(sv, static_cast<std::uint64_t>(trial));
            const auto assignment = cluster_for(sv, users, static_cast<std::uint64_t>(trial));
            for (std::size_t s = 0; s < fns.size(); ++s) {
                try {
                    wg[trial][s] = fns[s](assignment, users, sv.config).objective;
                } catch (const std::exception&) {
                    // leave NaN: recorded as a skipped trial
                }
            }
        });

        for (std::size_t s = 0; s < fns.size(); ++s) {
            double sum = 0.0, sum_sq = 0.0;
            int n = 0;
            for (int trial = 0; trial < sv.num_trials; ++trial) {
                const double x = wg[trial][s];
                if (std::isnan(x)) continue;
                sum += x;
                sum_sq += x * x;
                ++n;
            }
            SweepRow row;
            row.param = value;
            row.scheme = schemes[s];
            row.trials = n;
            row.mean_wgptm = n > 0 ? sum / n : 0.0;
            const double var = n > 1 ? (sum_sq - sum * sum / n) / (n - 1) : 0.0;
            row.std_wgptm = std::sqrt(std::max(0.0, var));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "param,scheme,mean_wgptm,std_wgptm,trials\n";
    std::ostringstream line;
    line.precision(12);
    for (const auto& r : rows) {
        line.str("");
        line << r.param << ',' << r.scheme << ',' << r.mean_wgptm << ',' << r.std_wgptm << ','
             << r.trials << '\n';
        out << line.str();
    }
}

}  // namespace wfl
