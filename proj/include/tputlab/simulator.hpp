#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tputlab/predictors.hpp"
#include "tputlab/trace.hpp"

namespace tputlab {

/// Player, ladder and QoE weights. Quality is q(R) = R / 1000 unless `quality` is
/// given explicitly (one value per ladder level).
struct SimulationConfig {
    double chunk_seconds = 4.0;
    std::vector<double> ladder_kbps{350.0, 600.0, 1000.0, 2000.0, 3000.0};
    std::vector<double> quality;
    double buffer_capacity_seconds = 30.0;
    double switch_penalty = 1.0;
    double rebuffer_penalty = 3.0; ///< per second of stall
    double startup_penalty = 3.0;  ///< per second before playback starts
    int mpc_horizon_chunks = 5;
    double bb_reservoir_seconds = 5.0;
    double bb_cushion_seconds = 20.0;
    std::size_t dp_label_budget = 2000;  ///< offline planner labels per chunk before cells are merged
    double dp_resolution_seconds = 0.05; ///< first cell size for buffer and accumulated delay, doubled as needed
    std::size_t max_chunks = 0; ///< 0 = as many as the trace duration allows

    /// Throws ValidationError on an inconsistent configuration.
    void validate() const;
    std::size_t levels() const { return ladder_kbps.size(); }
    double quality_of(std::size_t level) const;
    /// Highest level whose bitrate equals kbps exactly; nullopt if absent.
    std::optional<std::size_t> level_of(double kbps) const;
};

/// Per-epoch throughput held piecewise-constant; epochs past the end repeat the
/// last value and epochs before `first_epoch` repeat the first.
struct ThroughputProfile {
    double epoch_seconds = kDefaultEpochSeconds;
    std::size_t first_epoch = 0;
    std::span<const double> kbps;

    double rate_at(double time) const;
    /// Time needed to move `kilobits` starting at `start`, consuming each epoch's rate in turn.
    double download_seconds(double start, double kilobits) const;
};

struct PlayerState {
    std::size_t next_chunk = 0;
    double time = 0.0;   ///< wall clock, seconds since the session started
    double buffer = 0.0; ///< seconds of video buffered
    bool playing = false;
    std::optional<std::size_t> last_level;
    double rebuffer_seconds = 0.0;
    double startup_seconds = 0.0;
    double last_throughput_kbps = 0.0; ///< measured on the previous chunk download, 0 before any
};

struct ChunkStep {
    double download_seconds = 0.0;
    double rebuffer_seconds = 0.0;
    double startup_seconds = 0.0;
    double idle_seconds = 0.0;
};

/// Downloads chunk `state.next_chunk` at `level` and advances the player:
/// the buffer drains during the download (stalling at zero), gains one chunk on
/// completion, and when `more_chunks` the player idles until a chunk of room exists.
ChunkStep advance_player(PlayerState &state, std::size_t level, const ThroughputProfile &profile,
                         const SimulationConfig &config, bool more_chunks);

struct DecisionContext {
    const PlayerState &state;
    const SessionTrace &trace; ///< policies other than the oracle only read completed epochs
    const SimulationConfig &config;
    std::size_t total_chunks;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual std::size_t choose(const DecisionContext &context) = 0;
};

/// Reservoir/cushion rule mapping buffer level linearly onto ladder indices.
std::size_t policy_buffer_based(double buffer_seconds, const SimulationConfig &config);

/// Receding-horizon choice: enumerates every level sequence of length `horizon`
/// (lexicographic order, first strictly-best wins), simulates it against the
/// forecast and returns the first level of the best one.
std::size_t policy_mpc(const ThroughputProfile &forecast, const PlayerState &state,
                       const SimulationConfig &config, std::size_t horizon, std::size_t total_chunks);

/// QoE of a level sequence planned from `state` against `forecast`, counting only the
/// chunks of the sequence. Shares the dynamics with advance_player.
double plan_score(const ThroughputProfile &forecast, const PlayerState &state, const SimulationConfig &config,
                  std::span<const std::size_t> levels, std::size_t total_chunks);

class BufferBasedPolicy final : public Policy {
public:
    std::string name() const override { return "bb"; }
    std::size_t choose(const DecisionContext &context) override;
};

class FixedPolicy final : public Policy {
public:
    FixedPolicy(std::size_t level, double kbps) : level_(level), kbps_(kbps) {}
    std::string name() const override;
    std::size_t choose(const DecisionContext &) override { return level_; }

private:
    std::size_t level_;
    double kbps_;
};

/// MPC driven by an epoch-level predictor. At a decision in epoch e the predictor
/// sees the completed epochs W_0..W_{e-1}; in the first epoch it sees the throughput
/// measured on the previous chunk, and the very first chunk takes the lowest level.
class MpcPolicy final : public Policy {
public:
    explicit MpcPolicy(std::shared_ptr<const Predictor> predictor);
    std::string name() const override { return "mpc:" + predictor_->name(); }
    std::size_t choose(const DecisionContext &context) override;

private:
    std::shared_ptr<const Predictor> predictor_;
};

/// MPC fed the true future trace. horizon = 0 plans over all remaining chunks.
class PerfectForesightMpcPolicy final : public Policy {
public:
    explicit PerfectForesightMpcPolicy(std::size_t horizon = 0) : horizon_(horizon) {}
    std::string name() const override { return "mpc:oracle"; }
    std::size_t choose(const DecisionContext &context) override;

private:
    std::size_t horizon_;
};

/// Replays a fixed level sequence.
class PlanPolicy final : public Policy {
public:
    explicit PlanPolicy(std::vector<std::size_t> levels, std::string name = "plan")
        : levels_(std::move(levels)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::size_t choose(const DecisionContext &context) override;

private:
    std::vector<std::size_t> levels_;
    std::string name_;
};

/// Replays the offline-optimal plan of the session being simulated.
class OfflineOptimalPolicy final : public Policy {
public:
    std::string name() const override { return "optimal"; }
    std::size_t choose(const DecisionContext &context) override;

private:
    std::vector<std::size_t> plan_;
};

struct PlaybackOutcome {
    std::vector<std::size_t> chosen_levels;
    std::vector<double> chosen_bitrates;
    double total_rebuffer_seconds = 0.0;
    double startup_seconds = 0.0;
    double quality_sum = 0.0;
    double avg_quality = 0.0;
    double quality_variation_sum = 0.0;
    double qoe_value = 0.0;
    std::optional<double> normalized_qoe;
    /// Largest buffer level seen at any event boundary.
    double max_buffer_seconds = 0.0;
    double min_buffer_seconds = 0.0;
};

/// Number of chunks simulated for a trace: floor(duration / chunk), capped at max_chunks.
std::size_t video_chunks(const SessionTrace &trace, const SimulationConfig &config);

/// The linear QoE: quality_sum - lambda * variation - mu_rb * rebuffer - mu_s * startup.
double qoe_value(const SimulationConfig &config, double quality_sum, double quality_variation_sum,
                 double rebuffer_seconds, double startup_seconds);

PlaybackOutcome simulate(const SessionTrace &trace, Policy &policy, const SimulationConfig &config);

/// Best plan found by dynamic programming over (chunk, previous level, buffer) with
/// perfect knowledge of the trace, replayed through simulate().
///
/// Labels at each chunk are pruned by dominance on (clock, accumulated delay, score
/// with delay added back) within each previous level. When more than dp_label_budget
/// survive, labels sharing a (buffer, delay) cell are merged first, with the cell
/// doubling from dp_resolution_seconds until the budget holds. Labels carry exact
/// continuous state, so the returned value is always achievable.
PlaybackOutcome offline_optimal(const SessionTrace &trace, const SimulationConfig &config);
std::vector<std::size_t> offline_optimal_plan(const SessionTrace &trace, const SimulationConfig &config);

struct QoeRow {
    std::string session_id;
    std::string policy;
    PlaybackOutcome outcome;
    /// Set false when the optimal QoE is not positive; normalized_qoe is then empty.
    bool normalized = false;
};

/// Runs every policy on every session and normalises against offline_optimal.
std::vector<QoeRow> evaluate_qoe(std::span<const SessionTrace> sessions,
                                 std::span<const std::shared_ptr<Policy>> policies, const SimulationConfig &config);

/// session_id,policy,qoe_value,normalized_qoe,avg_quality,quality_variation_sum,rebuffer_seconds,startup_seconds
void write_qoe_csv(std::ostream &out, std::span<const QoeRow> rows);

} // namespace tputlab
