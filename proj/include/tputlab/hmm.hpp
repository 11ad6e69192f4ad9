#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tputlab/predictors.hpp"
#include "tputlab/trace.hpp"

namespace tputlab {

inline constexpr int kDefaultHmmStates = 6;

/// Gaussian-emission hidden Markov model over throughput.
///
/// The transition matrix is row-stochastic and stored row-major:
/// transition[i * M + j] = P(X_t = j | X_{t-1} = i), so a row distribution
/// advances one step by right-multiplication with the matrix.
struct HmmModel {
    int num_states = 0;
    std::vector<double> initial;
    std::vector<double> transition;
    std::vector<double> emission_means;     ///< kbps
    std::vector<double> emission_variances; ///< kbps^2

    double transition_at(int from, int to) const {
        return transition[static_cast<std::size_t>(from * num_states + to)];
    }

    /// Throws ValidationError when an invariant fails (stochastic rows and initial
    /// vector within 1e-9, positive means, positive variances).
    void validate() const;

    friend bool operator==(const HmmModel &, const HmmModel &) = default;
};

/// Filtered distribution over the hidden state after observing slots 0..as_of_slot.
struct StatePosterior {
    std::vector<double> probs;
    std::size_t as_of_slot = 0;
};

struct FilterResult {
    StatePosterior posterior;
    double log_likelihood = 0.0;
};

/// Scaled forward recursion; returns P(X_last | W_1..W_last) and log P(W_1..W_last).
FilterResult forward_filter_with_likelihood(const HmmModel &model, std::span<const double> observations);
StatePosterior forward_filter(const HmmModel &model, std::span<const double> observations);

/// dist * P^steps.
std::vector<double> propagate(const HmmModel &model, std::span<const double> dist, int steps);

/// Mean of the most probable state of posterior * P^(tau + 1); ties go to the lowest index.
double predict_hmm(const HmmModel &model, const StatePosterior &posterior, int tau);

struct HmmFitOptions {
    int num_states = kDefaultHmmStates;
    int max_iters = 200;
    double tol = 1e-4;  ///< stop once the log-likelihood gains less than this
    int restarts = 1;   ///< independent initialisations; the best final likelihood wins
    std::uint64_t seed = 0;
    double diagonal_bias = 0.5;
    double variance_floor_ratio = 1e-6; ///< floor = ratio * pooled variance
    /// Start each state at the variance of its own quantile bin instead of the pooled variance.
    bool per_state_initial_variance = true;
};

struct HmmFitResult {
    HmmModel model;
    /// Log-likelihood of the initial model followed by one entry per EM
    /// iteration; the last entry is the likelihood of `model`.
    std::vector<double> log_likelihood;
    int iterations = 0;
    bool converged = false;
};

/// Baum-Welch over independent sequences. States in the result are ordered by
/// ascending emission mean.
HmmFitResult fit_hmm(std::span<const SessionTrace> sequences, const HmmFitOptions &options);

/// Relabels states so emission means ascend (permutes initial, transition, emissions).
HmmModel sort_states_by_mean(const HmmModel &model);

/// Filters the whole history and emits the MAP-state mean for tau = 0..horizon-1.
class HmmPredictor final : public Predictor {
public:
    explicit HmmPredictor(HmmModel model);
    std::string name() const override { return "hmm"; }
    std::vector<double> predict(const HistoryWindow &history) const override;
    const HmmModel &model() const { return model_; }

private:
    HmmModel model_;
};

} // namespace tputlab
