#pragma once

#include <span>
#include <vector>

namespace tputlab {

/// Sum whose result does not depend on the order of the inputs: terms are
/// accumulated in ascending order.
double ordered_sum(std::vector<double> terms);

double mean(std::span<const double> values);

/// Population (divide-by-n) variance.
double population_variance(std::span<const double> values);

/// Percentile with linear interpolation between closest ranks, rank = pct/100 * (n - 1).
/// pct must lie in [0, 100] and values must be non-empty.
double percentile(std::span<const double> values, double pct);

} // namespace tputlab
