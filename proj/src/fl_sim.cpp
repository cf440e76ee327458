#include "wfl/fl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "wfl/clustering.hpp"
#include "wfl/core_model.hpp"
#include "wfl/rng.hpp"

namespace wfl {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// grad of the single-batch loss at w: X^T (X w - y) / M + ridge * w
void batch_gradient(const Minibatch& mb, int dim, double ridge, std::span<const double> w,
                    std::vector<double>& grad) {
    grad.assign(dim, 0.0);
    std::vector<double> r(mb.rows);
    for (int i = 0; i < mb.rows; ++i) {
        const double* row = mb.x.data() + static_cast<std::size_t>(i) * dim;
        double acc = -mb.y[i];
        for (int j = 0; j < dim; ++j) acc += row[j] * w[j];
        r[i] = acc;
    }
    for (int i = 0; i < mb.rows; ++i) {
        const double* row = mb.x.data() + static_cast<std::size_t>(i) * dim;
        for (int j = 0; j < dim; ++j) grad[j] += row[j] * r[i];
    }
    const double inv_m = 1.0 / mb.rows;
    for (int j = 0; j < dim; ++j) grad[j] = grad[j] * inv_m + ridge * w[j];
}

double batch_loss(const Minibatch& mb, int dim, double ridge, std::span<const double> w) {
    double sq = 0.0;
    for (int i = 0; i < mb.rows; ++i) {
        const double* row = mb.x.data() + static_cast<std::size_t>(i) * dim;
        double acc = -mb.y[i];
        for (int j = 0; j < dim; ++j) acc += row[j] * w[j];
        sq += acc * acc;
    }
    return 0.5 * sq / mb.rows + 0.5 * ridge * dot(w, w);
}

// symmetric d x d matrix-vector helpers for the curvature estimates
std::vector<double> batch_hessian(const Minibatch& mb, int dim, double ridge) {
    std::vector<double> h(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < mb.rows; ++i) {
        const double* row = mb.x.data() + static_cast<std::size_t>(i) * dim;
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) h[a * dim + b] += row[a] * row[b];
    }
    const double inv_m = 1.0 / mb.rows;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) h[a * dim + b] *= inv_m;
    for (int a = 0; a < dim; ++a) h[a * dim + a] += ridge;
    return h;
}

double extreme_eigenvalue(const std::vector<double>& h, int dim, bool largest) {
    // power iteration; for the smallest eigenvalue iterate on (shift I - H)
    double shift = 0.0;
    if (!largest) {
        for (int a = 0; a < dim; ++a) {
            double row_sum = 0.0;
            for (int b = 0; b < dim; ++b) row_sum += std::abs(h[a * dim + b]);
            shift = std::max(shift, row_sum);
        }
    }
    std::vector<double> v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<double> hv(dim);
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (int a = 0; a < dim; ++a) {
            double acc = 0.0;
            for (int b = 0; b < dim; ++b) acc += h[a * dim + b] * v[b];
            hv[a] = largest ? acc : shift * v[a] - acc;
        }
        const double norm = std::sqrt(dot(hv, hv));
        if (norm == 0.0) break;
        for (int a = 0; a < dim; ++a) v[a] = hv[a] / norm;
        lambda = norm;
    }
    return largest ? lambda : shift - lambda;
}

}  // namespace

double ToyTask::user_loss(int user, std::span<const double> w) const {
    const auto& bs = batches[user];
    double acc = 0.0;
    for (const auto& mb : bs) acc += batch_loss(mb, dimension, ridge, w);
    return acc / static_cast<double>(bs.size());
}

std::vector<double> ToyTask::user_gradient(int user, std::span<const double> w) const {
    std::vector<double> grad(dimension, 0.0), g;
    for (const auto& mb : batches[user]) {
        batch_gradient(mb, dimension, ridge, w, g);
        for (int j = 0; j < dimension; ++j) grad[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(batches[user].size());
    for (auto& v : grad) v *= inv;
    return grad;
}

double ToyTask::global_loss(std::span<const double> w) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < batches.size(); ++k) acc += weights[k] * user_loss(static_cast<int>(k), w);
    return acc;
}

std::vector<double> ToyTask::global_minimizer() const {
    // normal equations of the weighted ridge objective, solved by Cholesky
    const int d = dimension;
    std::vector<double> a(static_cast<std::size_t>(d) * d, 0.0), b(d, 0.0);
    for (std::size_t k = 0; k < batches.size(); ++k) {
        const double wk = weights[k] / static_cast<double>(batches[k].size());
        for (const auto& mb : batches[k]) {
            const double scale = wk / mb.rows;
            for (int i = 0; i < mb.rows; ++i) {
                const double* row = mb.x.data() + static_cast<std::size_t>(i) * d;
                for (int p = 0; p < d; ++p) {
                    b[p] += scale * row[p] * mb.y[i];
                    for (int q = 0; q < d; ++q) a[p * d + q] += scale * row[p] * row[q];
                }
            }
        }
    }
    for (int p = 0; p < d; ++p) a[p * d + p] += ridge;

    // in-place Cholesky, then two triangular solves
    for (int p = 0; p < d; ++p) {
        for (int q = 0; q <= p; ++q) {
            double s = a[p * d + q];
            for (int r = 0; r < q; ++r) s -= a[p * d + r] * a[q * d + r];
            if (p == q)
                a[p * d + p] = std::sqrt(s);
            else
                a[p * d + q] = s / a[q * d + q];
        }
    }
    std::vector<double> z(d), w(d);
    for (int p = 0; p < d; ++p) {
        double s = b[p];
        for (int r = 0; r < p; ++r) s -= a[p * d + r] * z[r];
        z[p] = s / a[p * d + p];
    }
    for (int p = d - 1; p >= 0; --p) {
        double s = z[p];
        for (int r = p + 1; r < d; ++r) s -= a[r * d + p] * w[r];
        w[p] = s / a[p * d + p];
    }
    return w;
}

ToyTask make_toy_task(int num_users, const std::vector<int>& minibatch_counts, int dimension,
                      std::uint64_t seed, int samples_per_batch, double ridge, double eta) {
    if (dimension < 1) throw std::invalid_argument("make_toy_task: dimension must be >= 1");
    if (static_cast<int>(minibatch_counts.size()) != num_users)
        throw std::invalid_argument("make_toy_task: one mini-batch count per user");

    ToyTask task;
    task.dimension = dimension;
    task.samples_per_batch = samples_per_batch;
    task.ridge = ridge;
    task.learning_rate_eta = eta;
    task.minibatch_counts = minibatch_counts;

    Rng rng(seed);
    std::vector<double> w_true(dimension);
    for (auto& v : w_true) v = rng.uniform(-1.0, 1.0);

    task.batches.resize(num_users);
    double total_batches = 0.0;
    for (int k = 0; k < num_users; ++k) {
        for (int b = 0; b < minibatch_counts[k]; ++b) {
            Minibatch mb;
            mb.rows = samples_per_batch;
            mb.x.resize(static_cast<std::size_t>(samples_per_batch) * dimension);
            mb.y.resize(samples_per_batch);
            for (auto& v : mb.x) v = rng.uniform(-1.0, 1.0);
            for (int i = 0; i < samples_per_batch; ++i) {
                const double* row = mb.x.data() + static_cast<std::size_t>(i) * dimension;
                mb.y[i] = dot({row, static_cast<std::size_t>(dimension)}, w_true) +
                          0.1 * rng.uniform(-0.5, 0.5);
            }
            task.batches[k].push_back(std::move(mb));
        }
        total_batches += minibatch_counts[k];
    }
    task.weights.resize(num_users);
    for (int k = 0; k < num_users; ++k) task.weights[k] = minibatch_counts[k] / total_batches;

    // empirical curvature constants: the ridge term floors m, the sharpest
    // single batch caps L (the stochastic steps see per-batch Hessians)
    double m_min = std::numeric_limits<double>::infinity();
    double l_max = 0.0;
    for (int k = 0; k < num_users; ++k) {
        std::vector<double> h_full(static_cast<std::size_t>(dimension) * dimension, 0.0);
        for (const auto& mb : task.batches[k]) {
            const auto h = batch_hessian(mb, dimension, ridge);
            l_max = std::max(l_max, extreme_eigenvalue(h, dimension, true));
            for (std::size_t i = 0; i < h.size(); ++i) h_full[i] += h[i];
        }
        for (auto& v : h_full) v /= static_cast<double>(task.batches[k].size());
        m_min = std::min(m_min, extreme_eigenvalue(h_full, dimension, false));
    }
    task.strong_convexity_m = m_min;
    task.smoothness_l = l_max;

    // gradient bound over a probe set around the data scale
    double g_max = 0.0;
    std::vector<double> probe(dimension);
    for (int trial = 0; trial < 64; ++trial) {
        for (auto& v : probe) v = rng.uniform(-2.0, 2.0);
        for (int k = 0; k < num_users; ++k) {
            const auto g = task.user_gradient(k, probe);
            g_max = std::max(g_max, std::sqrt(dot(g, g)));
        }
    }
    task.grad_bound_g = 1.5 * g_max;
    return task;
}

std::vector<double> local_train(std::span<const double> w_start, int user, int count,
                                const ToyTask& task, std::uint64_t shuffle_seed) {
    if (count < 0) throw std::invalid_argument("local_train: count must be >= 0");
    std::vector<double> w(w_start.begin(), w_start.end());
    if (count == 0) return w;

    std::vector<int> order(task.batches[user].size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(shuffle_seed);
    rng.shuffle(order);

    const double eta = task.eta_k(user);
    std::vector<double> g;
    for (int c = 0; c < count; ++c) {
        const auto& mb = task.batches[user][order[c % order.size()]];
        batch_gradient(mb, task.dimension, task.ridge, w, g);
        for (int j = 0; j < task.dimension; ++j) {
            w[j] -= eta * g[j];
            if (!std::isfinite(w[j])) throw std::runtime_error("local_train: diverged");
        }
    }
    return w;
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& local_models,
                              std::span<const double> weights) {
    if (local_models.empty()) throw std::invalid_argument("aggregate: no models");
    const std::size_t dim = local_models.front().size();
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < local_models.size(); ++k) {
        if (local_models[k].size() != dim)
            throw std::invalid_argument("aggregate: dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j) out[j] += weights[k] * local_models[k][j];
    }
    return out;
}

std::vector<double> full_gradient_step(std::span<const double> w, int user, double eta,
                                       const ToyTask& task) {
    auto g = task.user_gradient(user, w);
    std::vector<double> out(w.begin(), w.end());
    for (int j = 0; j < task.dimension; ++j) out[j] -= eta * g[j];
    return out;
}

double contraction_ck(const ToyTask& task, int user) {
    const double eta = task.eta_k(user);
    const double m = task.strong_convexity_m;
    return 2.0 * m * eta - m * task.smoothness_l * eta * eta;
}

TrainingTrace run_training(const ToyTask& task, const RoundConfig& config,
                           const Allocator& allocator, const ChannelGenerator& channels,
                           int num_rounds, std::uint64_t seed) {
    const int n_users = static_cast<int>(task.batches.size());
    TrainingTrace trace;
    trace.seed = seed;

    std::vector<double> w(task.dimension, 0.0);
    trace.initial_loss = task.global_loss(w);

    for (int t = 0; t < num_rounds; ++t) {
        const auto users = channels(t);
        const auto assignment = cluster_sorted(users, config.num_subchannels);
        const auto result = allocator(assignment, users, config);
        if (trace.scheme.empty()) trace.scheme = result.scheme;

        std::vector<std::vector<double>> locals(n_users);
        std::vector<double> phis(n_users);
        for (int k = 0; k < n_users; ++k) {
            const int phi = static_cast<int>(std::floor(result.metrics.per_user_minibatches[k]));
            phis[k] = phi;
            locals[k] = local_train(w, k, phi, task, Rng::mix(Rng::mix(seed, t), k));
        }
        w = aggregate(locals, task.weights);
        trace.loss.push_back(task.global_loss(w));
        trace.wgptm.push_back(result.metrics.wgptm);
        trace.phi.push_back(std::move(phis));
    }
    return trace;
}

TrainingTrace run_async_oma(const ToyTask& task, const RoundConfig& config,
                            const ChannelGenerator& channels, int num_global_rounds,
                            std::uint64_t seed) {
    const int n_users = static_cast<int>(task.batches.size());
    TrainingTrace trace;
    trace.scheme = "async-oma";
    trace.seed = seed;

    std::vector<double> w(task.dimension, 0.0);
    trace.initial_loss = task.global_loss(w);

    for (int t = 0; t < num_global_rounds; ++t) {
        const auto users = channels(t);
        const auto assignment = cluster_sorted(users, config.num_subchannels);
        const double b_eq =
            config.total_bandwidth_hz / static_cast<double>(assignment.subchannels.size());

        // per-user solo upload delay at full power, and 4-iteration block time
        std::vector<double> upload(n_users), block(n_users);
        for (int k = 0; k < n_users; ++k) {
            const double rate =
                b_eq * std::log2(1.0 + users[k].normalized_gain * config.max_power_w / b_eq);
            upload[k] = rate > 0 ? config.payload_bits / rate
                                 : std::numeric_limits<double>::infinity();
            block[k] = 4.0 * task.minibatch_counts[k] * config.flops_per_minibatch /
                       users[k].flops_per_second;
        }

        // a subchannel round = all uploads plus the slowest user's 4-iteration
        // training; the longest subchannel round is the global round
        double global_round = 0.0;
        for (const auto& ids : assignment.subchannels) {
            double uploads = 0.0, slowest = 0.0;
            for (int id : ids) {
                uploads += upload[id];
                slowest = std::max(slowest, block[id]);
            }
            global_round = std::max(global_round, uploads + slowest);
        }

        std::vector<int> blocks_done(n_users);
        int max_blocks = 1;
        for (int k = 0; k < n_users; ++k) {
            const double avail = global_round - upload[k];
            blocks_done[k] = std::max(1, static_cast<int>(std::floor(avail / block[k])));
            max_blocks = std::max(max_blocks, blocks_done[k]);
        }

        // intermediate aggregations every 4 iterations among the users still due
        std::vector<double> phis(n_users, 0.0);
        for (int b = 0; b < max_blocks; ++b) {
            std::vector<std::vector<double>> due_models;
            std::vector<double> due_weights;
            std::vector<int> due_ids;
            for (int k = 0; k < n_users; ++k)
                if (blocks_done[k] > b) due_ids.push_back(k);
            double weight_sum = 0.0;
            for (int k : due_ids) weight_sum += task.weights[k];
            for (int k : due_ids) {
                const int steps = 4 * task.minibatch_counts[k];
                due_models.push_back(
                    local_train(w, k, steps, task, Rng::mix(Rng::mix(seed, t * 131 + b), k)));
                due_weights.push_back(task.weights[k] / weight_sum);
                phis[k] += steps;
            }
            w = aggregate(due_models, due_weights);
        }

        double wg = 0.0;
        for (int k = 0; k < n_users; ++k)
            wg += task.weights[k] * phis[k] / task.minibatch_counts[k];
        trace.loss.push_back(task.global_loss(w));
        trace.wgptm.push_back(wg);
        trace.phi.push_back(std::move(phis));
    }
    return trace;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double theorem1_correlation(const std::vector<TrainingTrace>& traces, double early_fraction) {
    std::vector<double> xs, ys;
    for (const auto& tr : traces) {
        const int window =
            std::max(1, static_cast<int>(std::ceil(early_fraction * tr.loss.size())));
        for (int t = 0; t < window && t < static_cast<int>(tr.loss.size()); ++t) {
            const double prev = t == 0 ? tr.initial_loss : tr.loss[t - 1];
            xs.push_back(tr.wgptm[t]);
            ys.push_back(prev - tr.loss[t]);
        }
    }
    if (xs.size() < 20)
        throw std::invalid_argument("theorem1_correlation: need at least 20 pairs");

    const auto rx = ranks(xs), ry = ranks(ys);
    const double mean = (xs.size() + 1) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::runtime_error("theorem1_correlation: degenerate variance");
    return sxy / std::sqrt(sxx * syy);
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
    out << "round,loss,wgptm,phi\n";
    for (std::size_t t = 0; t < trace.loss.size(); ++t) {
        out << t << ',' << trace.loss[t] << ',' << trace.wgptm[t] << ',';
        for (std::size_t k = 0; k < trace.phi[t].size(); ++k) {
            if (k) out << ';';
            out << trace.phi[t][k];
        }
        out << '\n';
    }
}

}  // namespace wfl
