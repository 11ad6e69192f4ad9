#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tputlab {

inline constexpr int kDefaultEpochSeconds = 60;
inline constexpr int kDefaultMinEpochs = 6;
inline constexpr double kDefaultBinWidthKbps = 800.0;

/// One session's per-epoch average throughput, in kbps.
///
/// Construction validates the invariants (non-empty, every sample finite and
/// strictly positive, positive epoch length); instances are immutable afterwards.
class SessionTrace {
public:
    SessionTrace(std::string session_id, std::vector<double> samples_kbps,
                 int epoch_seconds = kDefaultEpochSeconds);

    const std::string &session_id() const noexcept { return session_id_; }
    int epoch_seconds() const noexcept { return epoch_seconds_; }
    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double duration_seconds() const noexcept {
        return static_cast<double>(epoch_seconds_) * static_cast<double>(samples_.size());
    }

    friend bool operator==(const SessionTrace &, const SessionTrace &) = default;

private:
    std::string session_id_;
    int epoch_seconds_;
    std::vector<double> samples_;
};

/// Reads the trace CSV format (`session_id,epoch_index,throughput_kbps` with a
/// header row). Sessions are returned in order of first appearance.
std::vector<SessionTrace> parse_traces(std::istream &in, int epoch_seconds = kDefaultEpochSeconds);
std::vector<SessionTrace> load_traces(const std::string &path, int epoch_seconds = kDefaultEpochSeconds);

/// Writes traces in the same CSV format; numbers use the shortest representation
/// that parses back to the identical double.
void serialize_traces(std::ostream &out, std::span<const SessionTrace> traces);

/// Keeps sessions with strictly more than min_epochs samples, preserving order.
std::vector<SessionTrace> filter_by_duration(std::span<const SessionTrace> sessions,
                                             int min_epochs = kDefaultMinEpochs);

struct StabilityReport {
    std::string session_id;
    std::size_t num_samples = 0;
    double mean_kbps = 0.0;
    double stddev_kbps = 0.0;
    double coeff_variation = 0.0;
    double iqr_spread_kbps = 0.0;
    std::vector<double> autocorr; ///< R(1)..R(max_lag)
    bool degenerate = false;      ///< zero variance; autocorr reported as zeros
};

/// Mean, population stddev, coefficient of variation, 75th-25th percentile spread
/// and the divide-by-T autocorrelation R(1)..R(max_lag).
///
/// All sums are accumulated in sorted order, so the permutation-invariant fields
/// are bit-identical for any reordering of the samples and the autocorrelation is
/// bit-identical for the time-reversed trace.
StabilityReport compute_stability(const SessionTrace &trace, std::size_t max_lag);

struct BinSummary {
    double bin_low_kbps = 0.0;
    double bin_width_kbps = kDefaultBinWidthKbps;
    double mean_coeff_variation = 0.0;
    std::size_t session_count = 0;
};

/// Groups sessions by mean throughput into [k*width, (k+1)*width) bins and
/// averages their coefficients of variation. Empty bins are omitted; output is
/// ascending by bin.
std::vector<BinSummary> bin_normalized_stddev(std::span<const SessionTrace> sessions,
                                              double bin_width_kbps = kDefaultBinWidthKbps);

/// Fixed-column CSV writers for the analytics above.
void write_stability_csv(std::ostream &out, std::span<const StabilityReport> reports, std::size_t max_lag);
void write_bins_csv(std::ostream &out, std::span<const BinSummary> bins);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double value);

} // namespace tputlab
