#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tputlab/hmm.hpp"
#include "tputlab/predictors.hpp"
#include "tputlab/trace.hpp"

namespace tputlab {

struct PredictionRecord {
    std::string session_id;
    std::size_t slot = 0;
    double predicted_kbps = 0.0;
    double actual_kbps = 0.0;
    double err = 0.0;
};

/// |predicted - actual| / actual.
double compute_error(double predicted, double actual);

/// Per-session percentile (within_pct) followed by a percentile across sessions
/// (across_pct). Percentiles interpolate linearly between closest ranks.
double aggregate_errors(std::span<const PredictionRecord> records, double within_pct, double across_pct);

/// Named (within, across) aggregation of the per-slot errors.
struct AggregationScheme {
    std::string name;
    double within_pct;
    double across_pct;
};

/// 90th within / median across first (the headline summary), then median/median
/// and median within / 90th across.
std::vector<AggregationScheme> default_schemes();

inline constexpr std::size_t kDefaultWarmup = 1;
inline constexpr int kDefaultHorizon = 5;

/// Walks the session from slot `warmup` to the end. At slot t the predictor sees
/// W_0..W_{t-1} and the first element of its Delta-step forecast is scored
/// against W_t.
std::vector<PredictionRecord> evaluate_online(const Predictor &predictor, const SessionTrace &session,
                                              std::size_t warmup = kDefaultWarmup, int horizon = kDefaultHorizon);

std::vector<PredictionRecord> evaluate_corpus(const Predictor &predictor, std::span<const SessionTrace> sessions,
                                              std::size_t warmup = kDefaultWarmup, int horizon = kDefaultHorizon);

struct SweepRow {
    int num_states = 0;
    double error = 0.0;
};

struct SweepConfig {
    HmmFitOptions fit;        ///< num_states is overridden per candidate
    AggregationScheme scheme{"p90_median", 90.0, 50.0};
    std::size_t warmup = kDefaultWarmup;
    int horizon = kDefaultHorizon;
};

/// Fits one HMM per candidate size on `train` and scores it online on `test`.
std::vector<SweepRow> sweep_model_size(std::span<const SessionTrace> train, std::span<const SessionTrace> test,
                                       std::span<const int> candidate_states, const SweepConfig &config);

struct Split {
    std::vector<SessionTrace> train;
    std::vector<SessionTrace> test;
};

/// Seeded 50/50 partition by session: ids are sorted, shuffled with the seed and the
/// first ceil(n/2) go to train. Within each side the input order is preserved.
Split split_sessions(std::span<const SessionTrace> sessions, std::uint64_t seed);

void write_predictions_csv(std::ostream &out, std::span<const PredictionRecord> records);

} // namespace tputlab
