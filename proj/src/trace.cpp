#include "tputlab/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <utility>

#include "tputlab/errors.hpp"
#include "tputlab/stats.hpp"

namespace tputlab {

namespace {

constexpr std::string_view kTraceHeader = "session_id,epoch_index,throughput_kbps";

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <class T>
bool parse_number(std::string_view text, T &out) {
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

// Sum of lag-`lag` products of the deviations, in sorted order.
double lag_product_sum(std::span<const double> dev, std::size_t lag) {
    std::vector<double> terms;
    terms.reserve(dev.size() - lag);
    for (std::size_t t = 0; t + lag < dev.size(); ++t) terms.push_back(dev[t] * dev[t + lag]);
    return ordered_sum(std::move(terms));
}

} // namespace

SessionTrace::SessionTrace(std::string session_id, std::vector<double> samples_kbps, int epoch_seconds)
    : session_id_(std::move(session_id)), epoch_seconds_(epoch_seconds), samples_(std::move(samples_kbps)) {
    if (session_id_.empty() || session_id_.find_first_of(",\r\n") != std::string::npos)
        throw ValidationError("session id '" + session_id_ + "' must be non-empty without commas or newlines");
    if (epoch_seconds_ <= 0) throw ValidationError("session " + session_id_ + ": epoch_seconds must be positive");
    if (samples_.empty()) throw ValidationError("session " + session_id_ + ": no samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i]) || samples_[i] <= 0.0)
            throw ValidationError("session " + session_id_ + ", epoch " + std::to_string(i) +
                                  ": throughput must be finite and positive");
    }
}

std::vector<SessionTrace> parse_traces(std::istream &in, int epoch_seconds) {
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line != kTraceHeader) throw ParseError(0, "expected header '" + std::string(kTraceHeader) + "'");
        have_header = true;
        break;
    }
    if (!have_header) throw ParseError(0, "missing header");

    struct Pending {
        std::string id;
        std::vector<std::pair<std::uint64_t, double>> rows;
    };
    std::vector<Pending> sessions;
    std::unordered_map<std::string, std::size_t> index;

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = split_commas(line);
        if (fields.size() != 3) throw ParseError(row, "expected 3 columns, found " + std::to_string(fields.size()));
        if (fields[0].empty()) throw ParseError(row, "empty session_id");
        std::uint64_t epoch = 0;
        if (!parse_number(fields[1], epoch)) throw ParseError(row, "epoch_index is not a nonnegative integer");
        double kbps = 0.0;
        if (!parse_number(fields[2], kbps)) throw ParseError(row, "throughput_kbps is not numeric");

        std::string id(fields[0]);
        if (!std::isfinite(kbps) || kbps <= 0.0)
            throw ValidationError("session " + id + ", epoch " + std::to_string(epoch) +
                                  ": throughput must be finite and positive");
        auto [it, inserted] = index.try_emplace(id, sessions.size());
        if (inserted) sessions.push_back({id, {}});
        sessions[it->second].rows.emplace_back(epoch, kbps);
    }

    std::vector<SessionTrace> traces;
    traces.reserve(sessions.size());
    for (auto &s : sessions) {
        std::stable_sort(s.rows.begin(), s.rows.end(),
                         [](const auto &a, const auto &b) { return a.first < b.first; });
        std::vector<double> samples;
        samples.reserve(s.rows.size());
        for (std::size_t i = 0; i < s.rows.size(); ++i) {
            if (i > 0 && s.rows[i].first == s.rows[i - 1].first)
                throw ValidationError("session " + s.id + ": duplicate epoch " + std::to_string(s.rows[i].first));
            if (s.rows[i].first != i)
                throw ValidationError("session " + s.id + ": epoch indices are not contiguous from 0 (missing " +
                                      std::to_string(i) + ")");
            samples.push_back(s.rows[i].second);
        }
        traces.emplace_back(s.id, std::move(samples), epoch_seconds);
    }
    return traces;
}

std::vector<SessionTrace> load_traces(const std::string &path, int epoch_seconds) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open trace file " + path);
    return parse_traces(in, epoch_seconds);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void serialize_traces(std::ostream &out, std::span<const SessionTrace> traces) {
    out << kTraceHeader << '\n';
    for (const auto &trace : traces) {
        const auto samples = trace.samples();
        for (std::size_t i = 0; i < samples.size(); ++i)
            out << trace.session_id() << ',' << i << ',' << format_double(samples[i]) << '\n';
    }
}

std::vector<SessionTrace> filter_by_duration(std::span<const SessionTrace> sessions, int min_epochs) {
    if (min_epochs < 1) throw ArgumentError("min_epochs must be at least 1");
    std::vector<SessionTrace> kept;
    for (const auto &s : sessions)
        if (s.size() > static_cast<std::size_t>(min_epochs)) kept.push_back(s);
    return kept;
}

StabilityReport compute_stability(const SessionTrace &trace, std::size_t max_lag) {
    const auto x = trace.samples();
    if (max_lag >= x.size())
        throw ArgumentError("max_lag " + std::to_string(max_lag) + " needs more than " + std::to_string(x.size()) +
                            " samples");

    StabilityReport report;
    report.session_id = trace.session_id();
    report.num_samples = x.size();
    report.mean_kbps = mean(x);

    std::vector<double> dev(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) dev[t] = x[t] - report.mean_kbps;
    const double n = static_cast<double>(x.size());
    const double variance = lag_product_sum(dev, 0) / n;
    const double sigma = std::sqrt(variance);

    report.iqr_spread_kbps = percentile(x, 75.0) - percentile(x, 25.0);
    report.autocorr.assign(max_lag, 0.0);

    // Summing n copies of a constant can leave a deviation of a few ulps.
    report.degenerate = sigma <= 1e-12 * std::abs(report.mean_kbps);
    if (report.degenerate) return report;

    report.stddev_kbps = sigma;
    report.coeff_variation = sigma / report.mean_kbps;
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
        report.autocorr[lag - 1] = (lag_product_sum(dev, lag) / n) / variance;
    return report;
}

std::vector<BinSummary> bin_normalized_stddev(std::span<const SessionTrace> sessions, double bin_width_kbps) {
    if (!(bin_width_kbps > 0.0)) throw ArgumentError("bin width must be positive");
    struct Acc {
        std::vector<double> covs;
    };
    std::vector<std::pair<long long, Acc>> bins;
    for (const auto &s : sessions) {
        const auto report = compute_stability(s, 0);
        const auto bin = static_cast<long long>(std::floor(report.mean_kbps / bin_width_kbps));
        auto it = std::find_if(bins.begin(), bins.end(), [&](const auto &b) { return b.first == bin; });
        if (it == bins.end()) {
            bins.push_back({bin, {}});
            it = std::prev(bins.end());
        }
        it->second.covs.push_back(report.coeff_variation);
    }
    std::sort(bins.begin(), bins.end(), [](const auto &a, const auto &b) { return a.first < b.first; });

    std::vector<BinSummary> out;
    out.reserve(bins.size());
    for (const auto &[bin, acc] : bins) {
        BinSummary summary;
        summary.bin_low_kbps = static_cast<double>(bin) * bin_width_kbps;
        summary.bin_width_kbps = bin_width_kbps;
        summary.session_count = acc.covs.size();
        summary.mean_coeff_variation = mean(acc.covs);
        out.push_back(summary);
    }
    return out;
}

void write_stability_csv(std::ostream &out, std::span<const StabilityReport> reports, std::size_t max_lag) {
    out << "session_id,num_samples,mean_kbps,stddev_kbps,coeff_variation,iqr_spread_kbps,degenerate";
    for (std::size_t lag = 1; lag <= max_lag; ++lag) out << ",acf_" << lag;
    out << '\n';
    for (const auto &r : reports) {
        out << r.session_id << ',' << r.num_samples << ',' << format_double(r.mean_kbps) << ','
            << format_double(r.stddev_kbps) << ',' << format_double(r.coeff_variation) << ','
            << format_double(r.iqr_spread_kbps) << ',' << (r.degenerate ? 1 : 0);
        for (std::size_t lag = 1; lag <= max_lag; ++lag) {
            out << ',';
            if (lag <= r.autocorr.size()) out << format_double(r.autocorr[lag - 1]);
        }
        out << '\n';
    }
}

void write_bins_csv(std::ostream &out, std::span<const BinSummary> bins) {
    out << "bin_low_kbps,bin_width_kbps,mean_coeff_variation,session_count\n";
    for (const auto &b : bins)
        out << format_double(b.bin_low_kbps) << ',' << format_double(b.bin_width_kbps) << ','
            << format_double(b.mean_coeff_variation) << ',' << b.session_count << '\n';
}

} // namespace tputlab
