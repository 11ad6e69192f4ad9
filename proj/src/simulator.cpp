#include "tputlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>

#include "tputlab/errors.hpp"

namespace tputlab {

void SimulationConfig::validate() const {
    if (!(chunk_seconds > 0.0)) throw ValidationError("chunk_seconds must be positive");
    if (ladder_kbps.empty()) throw ValidationError("ladder is empty");
    for (std::size_t i = 0; i < ladder_kbps.size(); ++i) {
        if (!(ladder_kbps[i] > 0.0)) throw ValidationError("ladder bitrates must be positive");
        if (i > 0 && !(ladder_kbps[i] > ladder_kbps[i - 1])) throw ValidationError("ladder must be strictly ascending");
    }
    if (!quality.empty()) {
        if (quality.size() != ladder_kbps.size()) throw ValidationError("one quality value per ladder level");
        for (std::size_t i = 1; i < quality.size(); ++i)
            if (quality[i] < quality[i - 1]) throw ValidationError("quality must be non-decreasing in bitrate");
    }
    if (!(buffer_capacity_seconds >= chunk_seconds))
        throw ValidationError("buffer capacity must hold at least one chunk");
    if (switch_penalty < 0.0 || rebuffer_penalty < 0.0 || startup_penalty < 0.0)
        throw ValidationError("QoE penalties must be nonnegative");
    if (mpc_horizon_chunks < 1) throw ValidationError("mpc_horizon_chunks must be at least 1");
    if (!(dp_resolution_seconds > 0.0) || dp_label_budget < 1)
        throw ValidationError("dp_resolution_seconds and dp_label_budget must be positive");
    if (!(bb_reservoir_seconds > 0.0 && bb_reservoir_seconds < bb_cushion_seconds &&
          bb_cushion_seconds <= buffer_capacity_seconds))
        throw ValidationError("need 0 < reservoir < cushion <= buffer capacity");
}

double SimulationConfig::quality_of(std::size_t level) const {
    return quality.empty() ? ladder_kbps[level] / 1000.0 : quality[level];
}

std::optional<std::size_t> SimulationConfig::level_of(double kbps) const {
    for (std::size_t i = 0; i < ladder_kbps.size(); ++i)
        if (ladder_kbps[i] == kbps) return i;
    return std::nullopt;
}

namespace {

std::size_t epoch_index(const ThroughputProfile &p, std::size_t epoch) {
    const std::size_t idx = epoch < p.first_epoch ? 0 : epoch - p.first_epoch;
    return std::min(idx, p.kbps.size() - 1);
}

} // namespace

double ThroughputProfile::rate_at(double time) const {
    return kbps[epoch_index(*this, static_cast<std::size_t>(std::floor(time / epoch_seconds)))];
}

double ThroughputProfile::download_seconds(double start, double kilobits) const {
    double t = start;
    double remaining = kilobits;
    while (true) {
        const auto epoch = static_cast<std::size_t>(std::floor(t / epoch_seconds));
        const double rate = kbps[epoch_index(*this, epoch)];
        if (epoch >= first_epoch + kbps.size() - 1) {
            t += remaining / rate;
            break;
        }
        const double boundary = static_cast<double>(epoch + 1) * epoch_seconds;
        const double capacity = rate * (boundary - t);
        if (remaining <= capacity) {
            t += remaining / rate;
            break;
        }
        remaining -= capacity;
        t = boundary;
    }
    return t - start;
}

ChunkStep advance_player(PlayerState &state, std::size_t level, const ThroughputProfile &profile,
                         const SimulationConfig &config, bool more_chunks) {
    ChunkStep step;
    const double kilobits = config.ladder_kbps[level] * config.chunk_seconds;
    const double dl = profile.download_seconds(state.time, kilobits);
    step.download_seconds = dl;
    if (!state.playing) {
        step.startup_seconds = dl;
        state.startup_seconds += dl;
        state.playing = true;
    } else if (dl > state.buffer) {
        step.rebuffer_seconds = dl - state.buffer;
        state.rebuffer_seconds += step.rebuffer_seconds;
        state.buffer = 0.0;
    } else {
        state.buffer -= dl;
    }
    state.buffer += config.chunk_seconds;
    state.time += dl;
    state.last_throughput_kbps = kilobits / dl;
    state.last_level = level;
    ++state.next_chunk;
    if (more_chunks && state.buffer + config.chunk_seconds > config.buffer_capacity_seconds) {
        step.idle_seconds = state.buffer + config.chunk_seconds - config.buffer_capacity_seconds;
        state.time += step.idle_seconds;
        state.buffer -= step.idle_seconds;
    }
    return step;
}

namespace {

// QoE contribution of one chunk given the state before it and the step taken.
double chunk_reward(const SimulationConfig &config, const std::optional<std::size_t> &previous, std::size_t level,
                    const ChunkStep &step) {
    double r = config.quality_of(level);
    if (previous) r -= config.switch_penalty * std::abs(config.quality_of(level) - config.quality_of(*previous));
    return r - config.rebuffer_penalty * step.rebuffer_seconds - config.startup_penalty * step.startup_seconds;
}

struct MpcSearch {
    const ThroughputProfile &forecast;
    const SimulationConfig &config;
    std::size_t total_chunks;
    std::size_t horizon;
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_first = 0;

    void run(const PlayerState &state, std::size_t depth, double score, std::size_t first) {
        if (depth == horizon) {
            if (score > best_score) {
                best_score = score;
                best_first = first;
            }
            return;
        }
        for (std::size_t level = 0; level < config.levels(); ++level) {
            PlayerState next = state;
            const auto step = advance_player(next, level, forecast, config, next.next_chunk + 1 < total_chunks);
            run(next, depth + 1, score + chunk_reward(config, state.last_level, level, step),
                depth == 0 ? level : first);
        }
    }
};

std::size_t remaining_chunks(const PlayerState &state, std::size_t total_chunks) {
    return total_chunks > state.next_chunk ? total_chunks - state.next_chunk : 0;
}

} // namespace

std::size_t policy_buffer_based(double buffer_seconds, const SimulationConfig &config) {
    const std::size_t top = config.levels() - 1;
    if (buffer_seconds <= config.bb_reservoir_seconds) return 0;
    if (buffer_seconds >= config.bb_cushion_seconds) return top;
    const double frac =
        (buffer_seconds - config.bb_reservoir_seconds) / (config.bb_cushion_seconds - config.bb_reservoir_seconds);
    return std::min(static_cast<std::size_t>(std::floor(frac * static_cast<double>(top))), top);
}

double plan_score(const ThroughputProfile &forecast, const PlayerState &state, const SimulationConfig &config,
                  std::span<const std::size_t> levels, std::size_t total_chunks) {
    PlayerState s = state;
    double score = 0.0;
    for (std::size_t level : levels) {
        const auto previous = s.last_level;
        const auto step = advance_player(s, level, forecast, config, s.next_chunk + 1 < total_chunks);
        score += chunk_reward(config, previous, level, step);
    }
    return score;
}

std::size_t policy_mpc(const ThroughputProfile &forecast, const PlayerState &state, const SimulationConfig &config,
                       std::size_t horizon, std::size_t total_chunks) {
    const std::size_t h = std::min(horizon, remaining_chunks(state, total_chunks));
    if (h == 0) return 0;
    MpcSearch search{forecast, config, total_chunks, h};
    search.run(state, 0, 0.0, 0);
    return search.best_first;
}

std::size_t BufferBasedPolicy::choose(const DecisionContext &context) {
    return policy_buffer_based(context.state.buffer, context.config);
}

std::string FixedPolicy::name() const { return "fixed:" + format_double(kbps_); }

MpcPolicy::MpcPolicy(std::shared_ptr<const Predictor> predictor) : predictor_(std::move(predictor)) {
    if (!predictor_) throw ArgumentError("MPC needs a predictor");
}

std::size_t MpcPolicy::choose(const DecisionContext &context) {
    const auto &state = context.state;
    const auto &config = context.config;
    const double epoch_seconds = context.trace.epoch_seconds();
    const auto current_epoch = static_cast<std::size_t>(std::floor(state.time / epoch_seconds));
    const std::size_t completed = std::min(current_epoch, context.trace.size());

    HistoryWindow history;
    if (completed == 0) {
        if (state.last_throughput_kbps <= 0.0) return 0;
        history.values = {state.last_throughput_kbps};
    } else {
        const auto samples = context.trace.samples();
        history.values.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(completed));
    }
    // One extra epoch covers a horizon that straddles an epoch boundary.
    history.horizon = static_cast<int>(std::ceil(config.mpc_horizon_chunks * config.chunk_seconds / epoch_seconds)) + 1;
    const auto predictions = predictor_->predict(history);
    const ThroughputProfile forecast{epoch_seconds, completed, predictions};
    return policy_mpc(forecast, state, config, static_cast<std::size_t>(config.mpc_horizon_chunks),
                      context.total_chunks);
}

std::size_t PerfectForesightMpcPolicy::choose(const DecisionContext &context) {
    const ThroughputProfile truth{static_cast<double>(context.trace.epoch_seconds()), 0, context.trace.samples()};
    const std::size_t remaining = remaining_chunks(context.state, context.total_chunks);
    const std::size_t h = horizon_ == 0 ? remaining : std::min(horizon_, remaining);
    return policy_mpc(truth, context.state, context.config, h, context.total_chunks);
}

std::size_t PlanPolicy::choose(const DecisionContext &context) {
    if (context.state.next_chunk >= levels_.size()) throw ArgumentError("plan is shorter than the video");
    return levels_[context.state.next_chunk];
}

std::size_t video_chunks(const SessionTrace &trace, const SimulationConfig &config) {
    auto chunks = static_cast<std::size_t>(std::floor(trace.duration_seconds() / config.chunk_seconds));
    if (config.max_chunks > 0) chunks = std::min(chunks, config.max_chunks);
    return chunks;
}

double qoe_value(const SimulationConfig &config, double quality_sum, double quality_variation_sum,
                 double rebuffer_seconds, double startup_seconds) {
    return quality_sum - config.switch_penalty * quality_variation_sum - config.rebuffer_penalty * rebuffer_seconds -
           config.startup_penalty * startup_seconds;
}

PlaybackOutcome simulate(const SessionTrace &trace, Policy &policy, const SimulationConfig &config) {
    config.validate();
    const std::size_t total = video_chunks(trace, config);
    if (total == 0)
        throw InfeasibleTraceError("session " + trace.session_id() + " is shorter than one chunk");
    const ThroughputProfile profile{static_cast<double>(trace.epoch_seconds()), 0, trace.samples()};

    PlaybackOutcome out;
    PlayerState state;
    out.chosen_levels.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        const DecisionContext context{state, trace, config, total};
        const std::size_t level = policy.choose(context);
        if (level >= config.levels())
            throw ArgumentError("policy " + policy.name() + " chose level " + std::to_string(level) +
                                " outside the ladder");
        if (k > 0) out.min_buffer_seconds = std::min(out.min_buffer_seconds, state.buffer);
        advance_player(state, level, profile, config, k + 1 < total);
        out.max_buffer_seconds = std::max(out.max_buffer_seconds, state.buffer);
        out.chosen_levels.push_back(level);
        out.chosen_bitrates.push_back(config.ladder_kbps[level]);
    }

    for (std::size_t k = 0; k < total; ++k) {
        out.quality_sum += config.quality_of(out.chosen_levels[k]);
        if (k > 0)
            out.quality_variation_sum +=
                std::abs(config.quality_of(out.chosen_levels[k]) - config.quality_of(out.chosen_levels[k - 1]));
    }
    out.avg_quality = out.quality_sum / static_cast<double>(total);
    out.total_rebuffer_seconds = state.rebuffer_seconds;
    out.startup_seconds = state.startup_seconds;
    out.qoe_value =
        qoe_value(config, out.quality_sum, out.quality_variation_sum, out.total_rebuffer_seconds, out.startup_seconds);
    return out;
}

namespace {

struct Label {
    PlayerState state;
    double score = 0.0;
    double sunk = 0.0; ///< score with the stall-and-startup delay added back at the rebuffer rate
    std::uint32_t parent = 0;
    std::uint8_t level = 0;
};

struct Backlink {
    std::uint32_t parent;
    std::uint8_t level;
};

// With a positive resolution, first keeps one label per (buffer, delay) cell. Then drops labels dominated by another label with an earlier
// clock, a smaller delay and at least as much sunk value. Chunk finish times and delays are monotone in
// (clock, delay) for any fixed continuation, so a dominated label can never overtake its dominator.
void prune(std::vector<Label> &group, double resolution, std::vector<Label> &out) {
    const auto delay = [](const Label &l) { return l.state.startup_seconds + l.state.rebuffer_seconds; };
    const auto cell = [&](const Label &l) {
        return std::pair{static_cast<std::int64_t>(std::floor(l.state.buffer / resolution)),
                         static_cast<std::int64_t>(std::floor(delay(l) / resolution))};
    };
    if (resolution > 0.0) std::stable_sort(group.begin(), group.end(), [&](const Label &a, const Label &b) {
        const auto ca = cell(a), cb = cell(b);
        if (ca != cb) return ca < cb;
        return a.score > b.score;
    });
    std::vector<Label> reps;
    for (std::size_t i = 0; i < group.size(); ++i)
        if (resolution <= 0.0 || i == 0 || cell(group[i]) != cell(group[i - 1])) reps.push_back(group[i]);

    std::stable_sort(reps.begin(), reps.end(), [&](const Label &a, const Label &b) {
        if (a.state.time != b.state.time) return a.state.time < b.state.time;
        if (delay(a) != delay(b)) return delay(a) < delay(b);
        return a.sunk > b.sunk;
    });
    std::map<double, double> stairs; // delay -> best sunk value, sunk increasing with delay
    for (const auto &l : reps) {
        auto it = stairs.upper_bound(delay(l));
        if (it != stairs.begin() && std::prev(it)->second >= l.sunk) continue;
        it = stairs.insert_or_assign(delay(l), l.sunk).first;
        for (auto next = std::next(it); next != stairs.end() && next->second <= l.sunk;) next = stairs.erase(next);
        out.push_back(l);
    }
}

} // namespace

std::vector<std::size_t> offline_optimal_plan(const SessionTrace &trace, const SimulationConfig &config) {
    config.validate();
    const std::size_t total = video_chunks(trace, config);
    if (total == 0)
        throw InfeasibleTraceError("session " + trace.session_id() + " is shorter than one chunk");
    if (config.levels() > 255) throw ArgumentError("ladder too large for the offline planner");
    const ThroughputProfile truth{static_cast<double>(trace.epoch_seconds()), 0, trace.samples()};

    std::vector<Label> frontier(1);
    std::vector<std::vector<Backlink>> links;
    links.reserve(total);
    std::vector<std::vector<Label>> by_level(config.levels());
    double resolution = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        for (auto &g : by_level) g.clear();
        const bool more = k + 1 < total;
        for (std::uint32_t i = 0; i < frontier.size(); ++i) {
            const Label &from = frontier[i];
            for (std::size_t level = 0; level < config.levels(); ++level) {
                Label child;
                child.state = from.state;
                const auto step = advance_player(child.state, level, truth, config, more);
                child.score = from.score + chunk_reward(config, from.state.last_level, level, step);
                child.sunk = child.score +
                             config.rebuffer_penalty * (child.state.startup_seconds + child.state.rebuffer_seconds);
                child.parent = i;
                child.level = static_cast<std::uint8_t>(level);
                by_level[level].push_back(child);
            }
        }
        // Exact dominance first; coarsen the cells only while the stage is over budget.
        resolution = resolution > config.dp_resolution_seconds ? resolution / 2.0 : 0.0;
        for (;; resolution = resolution > 0.0 ? 2.0 * resolution : config.dp_resolution_seconds) {
            frontier.clear();
            for (auto &g : by_level) prune(g, resolution, frontier);
            if (frontier.size() <= config.dp_label_budget) break;
        }
        std::vector<Backlink> stage;
        stage.reserve(frontier.size());
        for (const auto &l : frontier) stage.push_back({l.parent, l.level});
        links.push_back(std::move(stage));
    }

    std::uint32_t best = 0;
    for (std::uint32_t i = 1; i < frontier.size(); ++i)
        if (frontier[i].score > frontier[best].score) best = i;
    std::vector<std::size_t> plan(total);
    for (std::size_t k = total; k-- > 0;) {
        plan[k] = links[k][best].level;
        best = links[k][best].parent;
    }
    return plan;
}

PlaybackOutcome offline_optimal(const SessionTrace &trace, const SimulationConfig &config) {
    PlanPolicy replay(offline_optimal_plan(trace, config), "optimal");
    return simulate(trace, replay, config);
}

std::size_t OfflineOptimalPolicy::choose(const DecisionContext &context) {
    if (context.state.next_chunk == 0) plan_ = offline_optimal_plan(context.trace, context.config);
    return plan_.at(context.state.next_chunk);
}

std::vector<QoeRow> evaluate_qoe(std::span<const SessionTrace> sessions,
                                 std::span<const std::shared_ptr<Policy>> policies, const SimulationConfig &config) {
    std::vector<QoeRow> rows;
    rows.reserve(sessions.size() * policies.size());
    for (const auto &session : sessions) {
        const auto optimal = offline_optimal(session, config);
        for (const auto &policy : policies) {
            const bool replay = dynamic_cast<const OfflineOptimalPolicy *>(policy.get()) != nullptr;
            QoeRow row{session.session_id(), policy->name(), replay ? optimal : simulate(session, *policy, config), false};
            if (optimal.qoe_value > 0.0) {
                row.outcome.normalized_qoe = row.outcome.qoe_value / optimal.qoe_value;
                row.normalized = true;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_qoe_csv(std::ostream &out, std::span<const QoeRow> rows) {
    out << "session_id,policy,qoe_value,normalized_qoe,avg_quality,quality_variation_sum,rebuffer_seconds,"
           "startup_seconds\n";
    for (const auto &r : rows) {
        const auto &o = r.outcome;
        out << r.session_id << ',' << r.policy << ',' << format_double(o.qoe_value) << ','
            << (o.normalized_qoe ? format_double(*o.normalized_qoe) : std::string()) << ','
            << format_double(o.avg_quality) << ',' << format_double(o.quality_variation_sum) << ','
            << format_double(o.total_rebuffer_seconds) << ',' << format_double(o.startup_seconds) << '\n';
    }
}

} // namespace tputlab
