#include "tputlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "tputlab/errors.hpp"
#include "tputlab/random.hpp"
#include "tputlab/stats.hpp"

namespace tputlab {

double compute_error(double predicted, double actual) {
    if (!(actual > 0.0)) throw ArgumentError("actual throughput must be positive");
    return std::abs(predicted - actual) / actual;
}

double aggregate_errors(std::span<const PredictionRecord> records, double within_pct, double across_pct) {
    if (records.empty()) throw ArgumentError("no prediction records to aggregate");
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::vector<double>> per_session;
    for (const auto &r : records) {
        auto [it, inserted] = index.try_emplace(r.session_id, per_session.size());
        if (inserted) per_session.emplace_back();
        per_session[it->second].push_back(r.err);
    }
    std::vector<double> session_values;
    session_values.reserve(per_session.size());
    for (const auto &errs : per_session) session_values.push_back(percentile(errs, within_pct));
    return percentile(session_values, across_pct);
}

std::vector<AggregationScheme> default_schemes() {
    return {{"p90_median", 90.0, 50.0}, {"median_median", 50.0, 50.0}, {"median_p90", 50.0, 90.0}};
}

std::vector<PredictionRecord> evaluate_online(const Predictor &predictor, const SessionTrace &session,
                                              std::size_t warmup, int horizon) {
    const auto x = session.samples();
    if (x.size() <= warmup)
        throw ArgumentError("session " + session.session_id() + " is not longer than the warmup");
    // Slot 0 has no history to predict from.
    const std::size_t first = std::max<std::size_t>(warmup, 1);
    std::vector<PredictionRecord> records;
    records.reserve(x.size() - first);
    HistoryWindow history{{x.begin(), x.begin() + static_cast<std::ptrdiff_t>(first)}, horizon};
    for (std::size_t t = first; t < x.size(); ++t) {
        const double predicted = predictor.predict(history).front();
        records.push_back({session.session_id(), t, predicted, x[t], compute_error(predicted, x[t])});
        history.values.push_back(x[t]);
    }
    return records;
}

std::vector<PredictionRecord> evaluate_corpus(const Predictor &predictor, std::span<const SessionTrace> sessions,
                                              std::size_t warmup, int horizon) {
    std::vector<PredictionRecord> all;
    for (const auto &s : sessions) {
        auto records = evaluate_online(predictor, s, warmup, horizon);
        all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
    }
    return all;
}

std::vector<SweepRow> sweep_model_size(std::span<const SessionTrace> train, std::span<const SessionTrace> test,
                                       std::span<const int> candidate_states, const SweepConfig &config) {
    std::unordered_set<std::string> train_ids;
    for (const auto &s : train) train_ids.insert(s.session_id());
    for (const auto &s : test)
        if (train_ids.contains(s.session_id()))
            throw ArgumentError("session " + s.session_id() + " appears in both train and test");

    std::vector<SweepRow> rows;
    for (int states : candidate_states) {
        HmmFitOptions options = config.fit;
        options.num_states = states;
        const HmmPredictor predictor(fit_hmm(train, options).model);
        const auto records = evaluate_corpus(predictor, test, config.warmup, config.horizon);
        rows.push_back({states, aggregate_errors(records, config.scheme.within_pct, config.scheme.across_pct)});
    }
    return rows;
}

Split split_sessions(std::span<const SessionTrace> sessions, std::uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(sessions.size());
    for (const auto &s : sessions) ids.push_back(s.session_id());
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);

    const std::unordered_set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>((ids.size() + 1) / 2));
    Split split;
    for (const auto &s : sessions) (train_ids.contains(s.session_id()) ? split.train : split.test).push_back(s);
    return split;
}

void write_predictions_csv(std::ostream &out, std::span<const PredictionRecord> records) {
    out << "session_id,slot,predicted_kbps,actual_kbps,err\n";
    for (const auto &r : records)
        out << r.session_id << ',' << r.slot << ',' << format_double(r.predicted_kbps) << ','
            << format_double(r.actual_kbps) << ',' << format_double(r.err) << '\n';
}

} // namespace tputlab
