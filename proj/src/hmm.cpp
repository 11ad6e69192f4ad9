#include "tputlab/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tputlab/errors.hpp"
#include "tputlab/random.hpp"
#include "tputlab/stats.hpp"

namespace tputlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gaussian(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

// One scaled forward step: `prior` is the predicted state distribution, `alpha`
// receives the normalised filtered distribution. Returns log p(x | past).
double forward_step(const HmmModel &model, std::span<const double> prior, double x, std::span<double> alpha) {
    const auto m = static_cast<std::size_t>(model.num_states);
    double top = kNegInf;
    for (std::size_t j = 0; j < m; ++j) {
        alpha[j] = prior[j] > 0.0
                       ? std::log(prior[j]) + log_gaussian(x, model.emission_means[j], model.emission_variances[j])
                       : kNegInf;
        top = std::max(top, alpha[j]);
    }
    if (top == kNegInf) return kNegInf;
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        alpha[j] = std::exp(alpha[j] - top);
        total += alpha[j];
    }
    for (std::size_t j = 0; j < m; ++j) alpha[j] /= total;
    return top + std::log(total);
}

void advance(const HmmModel &model, std::span<const double> dist, std::span<double> out) {
    const auto m = static_cast<std::size_t>(model.num_states);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (dist[i] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) out[j] += dist[i] * model.transition[i * m + j];
    }
}

struct SufficientStats {
    std::vector<double> initial;
    std::vector<double> transitions;
    std::vector<std::vector<double>> gammas; // per sequence, T x M row-major
    double log_likelihood = 0.0;
};

// Scaled forward-backward on every sequence, accumulated in input order.
SufficientStats expectation(const HmmModel &model, std::span<const SessionTrace> sequences) {
    const auto m = static_cast<std::size_t>(model.num_states);
    SufficientStats stats;
    stats.initial.assign(m, 0.0);
    stats.transitions.assign(m * m, 0.0);
    stats.gammas.reserve(sequences.size());

    std::vector<double> prior(m);
    std::vector<double> emit(m);
    std::vector<double> xi_row(m * m);
    for (const auto &seq : sequences) {
        const auto x = seq.samples();
        const std::size_t len = x.size();
        std::vector<double> alpha(len * m);
        std::vector<double> log_scale(len);
        for (std::size_t t = 0; t < len; ++t) {
            if (t == 0)
                std::copy(model.initial.begin(), model.initial.end(), prior.begin());
            else
                advance(model, std::span<const double>(alpha).subspan((t - 1) * m, m), prior);
            log_scale[t] = forward_step(model, prior, x[t], std::span<double>(alpha).subspan(t * m, m));
            stats.log_likelihood += log_scale[t];
        }
        if (!std::isfinite(stats.log_likelihood)) return stats;

        std::vector<double> beta(len * m, 1.0);
        std::vector<double> gamma(len * m);
        for (std::size_t t = len; t-- > 0;) {
            for (std::size_t i = 0; i < m; ++i) gamma[t * m + i] = alpha[t * m + i] * beta[t * m + i];
            if (t == 0) break;
            // emit[j] = b_j(x_t) * beta_t(j) / c_t
            for (std::size_t j = 0; j < m; ++j) {
                const double r = log_gaussian(x[t], model.emission_means[j], model.emission_variances[j]) - log_scale[t];
                emit[j] = std::exp(std::min(r, 690.0)) * beta[t * m + j];
            }
            for (std::size_t i = 0; i < m; ++i) {
                double acc = 0.0;
                const double a = alpha[(t - 1) * m + i];
                for (std::size_t j = 0; j < m; ++j) {
                    const double v = model.transition[i * m + j] * emit[j];
                    acc += v;
                    stats.transitions[i * m + j] += a * v;
                }
                beta[(t - 1) * m + i] = acc;
            }
        }
        for (std::size_t i = 0; i < m; ++i) stats.initial[i] += gamma[i];
        stats.gammas.push_back(std::move(gamma));
    }
    return stats;
}

HmmModel maximization(const HmmModel &current, std::span<const SessionTrace> sequences, const SufficientStats &stats,
                      double variance_floor) {
    const auto m = static_cast<std::size_t>(current.num_states);
    HmmModel next = current;

    const double init_total = std::accumulate(stats.initial.begin(), stats.initial.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) next.initial[i] = stats.initial[i] / init_total;

    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += stats.transitions[i * m + j];
        if (row > 0.0)
            for (std::size_t j = 0; j < m; ++j) next.transition[i * m + j] = stats.transitions[i * m + j] / row;
    }

    std::vector<double> weight(m, 0.0);
    std::vector<double> weighted_sum(m, 0.0);
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto x = sequences[s].samples();
        const auto &g = stats.gammas[s];
        for (std::size_t t = 0; t < x.size(); ++t)
            for (std::size_t i = 0; i < m; ++i) {
                weight[i] += g[t * m + i];
                weighted_sum[i] += g[t * m + i] * x[t];
            }
    }
    std::vector<double> weighted_sq(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (weight[i] > 0.0) next.emission_means[i] = weighted_sum[i] / weight[i];
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto x = sequences[s].samples();
        const auto &g = stats.gammas[s];
        for (std::size_t t = 0; t < x.size(); ++t)
            for (std::size_t i = 0; i < m; ++i) {
                const double d = x[t] - next.emission_means[i];
                weighted_sq[i] += g[t * m + i] * d * d;
            }
    }
    for (std::size_t i = 0; i < m; ++i)
        if (weight[i] > 0.0) next.emission_variances[i] = std::max(weighted_sq[i] / weight[i], variance_floor);
    return next;
}

HmmModel initial_model(const std::vector<double> &pooled, const HmmFitOptions &options, double pooled_var,
                       double variance_floor, std::uint64_t seed) {
    const int m = options.num_states;
    const auto mu = static_cast<std::size_t>(m);
    HmmModel model;
    model.num_states = m;
    model.initial.assign(mu, 1.0 / m);
    model.transition.assign(mu * mu, (1.0 - options.diagonal_bias) / m);
    for (std::size_t i = 0; i < mu; ++i) model.transition[i * mu + i] += options.diagonal_bias;
    model.emission_variances.assign(mu, std::max(pooled_var, variance_floor));

    Rng rng(seed);
    const double spread = std::sqrt(pooled_var);
    const double smallest = *std::min_element(pooled.begin(), pooled.end());
    for (int k = 0; k < m; ++k) {
        const double q = 100.0 * (k + 0.5) / m;
        const double jitter = 0.01 * spread * (rng.uniform() - 0.5);
        model.emission_means.push_back(std::max(percentile(pooled, q) + jitter, 0.5 * smallest));
    }
    if (options.per_state_initial_variance) {
        // Variance of the data between neighbouring quantile edges.
        std::vector<double> sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        for (std::size_t k = 0; k < mu; ++k) {
            const std::size_t lo = k * n / mu;
            const std::size_t hi = std::max(lo + 1, (k + 1) * n / mu);
            const std::span<const double> bin(sorted.data() + lo, hi - lo);
            model.emission_variances[k] = std::max(population_variance(bin), variance_floor);
        }
    }
    return model;
}

} // namespace

void HmmModel::validate() const {
    if (num_states < 1) throw ValidationError("HMM needs at least one state");
    const auto m = static_cast<std::size_t>(num_states);
    if (initial.size() != m || transition.size() != m * m || emission_means.size() != m ||
        emission_variances.size() != m)
        throw ValidationError("HMM parameter sizes do not match num_states");
    auto check_distribution = [](std::span<const double> p, const std::string &what) {
        double total = 0.0;
        for (double v : p) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(what + " has a negative or non-finite entry");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ValidationError(what + " does not sum to 1");
    };
    check_distribution(initial, "initial distribution");
    for (std::size_t i = 0; i < m; ++i)
        check_distribution(std::span<const double>(transition).subspan(i * m, m),
                           "transition row " + std::to_string(i));
    for (std::size_t i = 0; i < m; ++i) {
        if (!(emission_means[i] > 0.0) || !std::isfinite(emission_means[i]))
            throw ValidationError("emission mean " + std::to_string(i) + " must be positive");
        if (!(emission_variances[i] > 0.0) || !std::isfinite(emission_variances[i]))
            throw ValidationError("emission variance " + std::to_string(i) + " must be positive");
    }
}

FilterResult forward_filter_with_likelihood(const HmmModel &model, std::span<const double> observations) {
    if (observations.empty()) throw ArgumentError("forward filter needs at least one observation");
    const auto m = static_cast<std::size_t>(model.num_states);
    std::vector<double> prior(model.initial);
    std::vector<double> alpha(m);
    double log_likelihood = 0.0;
    for (std::size_t t = 0; t < observations.size(); ++t) {
        if (!(observations[t] > 0.0)) throw ArgumentError("observation " + std::to_string(t) + " is not positive");
        if (t > 0) advance(model, alpha, prior);
        log_likelihood += forward_step(model, prior, observations[t], alpha);
        if (!std::isfinite(log_likelihood))
            throw NumericalError(static_cast<int>(t), "observation has zero likelihood under every state");
    }
    return {StatePosterior{std::move(alpha), observations.size() - 1}, log_likelihood};
}

StatePosterior forward_filter(const HmmModel &model, std::span<const double> observations) {
    return forward_filter_with_likelihood(model, observations).posterior;
}

std::vector<double> propagate(const HmmModel &model, std::span<const double> dist, int steps) {
    std::vector<double> cur(dist.begin(), dist.end());
    std::vector<double> next(cur.size());
    for (int s = 0; s < steps; ++s) {
        advance(model, cur, next);
        cur.swap(next);
    }
    return cur;
}

double predict_hmm(const HmmModel &model, const StatePosterior &posterior, int tau) {
    if (tau < 0) throw ArgumentError("tau must be nonnegative");
    const auto dist = propagate(model, posterior.probs, tau + 1);
    const auto best = std::max_element(dist.begin(), dist.end()); // first maximum = lowest index
    return model.emission_means[static_cast<std::size_t>(best - dist.begin())];
}

HmmModel sort_states_by_mean(const HmmModel &model) {
    const auto m = static_cast<std::size_t>(model.num_states);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.emission_means[a] < model.emission_means[b];
    });
    HmmModel sorted = model;
    for (std::size_t i = 0; i < m; ++i) {
        sorted.initial[i] = model.initial[order[i]];
        sorted.emission_means[i] = model.emission_means[order[i]];
        sorted.emission_variances[i] = model.emission_variances[order[i]];
        for (std::size_t j = 0; j < m; ++j) sorted.transition[i * m + j] = model.transition[order[i] * m + order[j]];
    }
    return sorted;
}

HmmFitResult fit_hmm(std::span<const SessionTrace> sequences, const HmmFitOptions &options) {
    if (options.num_states < 1) throw ArgumentError("num_states must be at least 1");
    if (options.max_iters < 1) throw ArgumentError("max_iters must be at least 1");
    if (!(options.tol > 0.0)) throw ArgumentError("tol must be positive");
    if (options.restarts < 1) throw ArgumentError("restarts must be at least 1");
    if (sequences.empty()) throw ArgumentError("no training sequences");

    std::vector<double> pooled;
    for (const auto &s : sequences) pooled.insert(pooled.end(), s.samples().begin(), s.samples().end());
    if (pooled.size() < 10 * static_cast<std::size_t>(options.num_states))
        throw ArgumentError("need at least " + std::to_string(10 * options.num_states) + " observations, have " +
                            std::to_string(pooled.size()));
    std::vector<double> distinct = pooled;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < static_cast<std::size_t>(options.num_states))
        throw DegenerateFitError(std::to_string(options.num_states) + " states requested but the data has only " +
                                 std::to_string(distinct.size()) + " distinct values");

    const double pooled_mean = mean(pooled);
    const double pooled_var = population_variance(pooled);
    const double variance_floor =
        std::max({options.variance_floor_ratio * pooled_var, 1e-12 * pooled_mean * pooled_mean, 1e-9});

    HmmFitResult best;
    bool have_best = false;
    for (int restart = 0; restart < options.restarts; ++restart) {
        HmmFitResult run;
        run.model = initial_model(pooled, options, pooled_var, variance_floor,
                                  options.seed + static_cast<std::uint64_t>(restart) * 0x9E3779B97F4A7C15ULL);
        auto stats = expectation(run.model, sequences);
        if (!std::isfinite(stats.log_likelihood)) throw NumericalError(0, "non-finite log-likelihood");
        run.log_likelihood.push_back(stats.log_likelihood);
        for (int it = 1; it <= options.max_iters; ++it) {
            run.model = maximization(run.model, sequences, stats, variance_floor);
            stats = expectation(run.model, sequences);
            if (!std::isfinite(stats.log_likelihood)) throw NumericalError(it, "non-finite log-likelihood");
            run.iterations = it;
            const double gain = stats.log_likelihood - run.log_likelihood.back();
            run.log_likelihood.push_back(stats.log_likelihood);
            if (gain < options.tol) {
                run.converged = true;
                break;
            }
        }
        run.model = sort_states_by_mean(run.model);
        if (!have_best || run.log_likelihood.back() > best.log_likelihood.back()) {
            best = std::move(run);
            have_best = true;
        }
    }
    return best;
}

HmmPredictor::HmmPredictor(HmmModel model) : model_(std::move(model)) { model_.validate(); }

std::vector<double> HmmPredictor::predict(const HistoryWindow &history) const {
    if (history.values.empty()) throw ArgumentError("history is empty");
    if (history.horizon < 1) throw ArgumentError("horizon must be at least 1");
    const auto posterior = forward_filter(model_, history.values);
    std::vector<double> dist = posterior.probs;
    std::vector<double> next(dist.size());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(history.horizon));
    for (int tau = 0; tau < history.horizon; ++tau) {
        advance(model_, dist, next);
        dist.swap(next);
        const auto best = std::max_element(dist.begin(), dist.end());
        out.push_back(std::max(model_.emission_means[static_cast<std::size_t>(best - dist.begin())],
                               kMinPredictionKbps));
    }
    return out;
}

} // namespace tputlab
