#include "tputlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "tputlab/errors.hpp"

namespace tputlab {

double ordered_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

double mean(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("mean of an empty sequence");
    return ordered_sum({values.begin(), values.end()}) / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
    const double mu = mean(values);
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - mu) * (v - mu));
    return ordered_sum(std::move(sq)) / static_cast<double>(values.size());
}

double percentile(std::span<const double> values, double pct) {
    if (values.empty()) throw ArgumentError("percentile of an empty sequence");
    if (!(pct >= 0.0 && pct <= 100.0)) throw ArgumentError("percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace tputlab
