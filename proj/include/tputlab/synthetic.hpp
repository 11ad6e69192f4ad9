#pragma once

#include <cstdint>
#include <vector>

#include "tputlab/hmm.hpp"
#include "tputlab/trace.hpp"

namespace tputlab {

/// Emissions are clamped below at this value so every sample is a valid throughput.
inline constexpr double kSyntheticFloorKbps = 1.0;

/// Samples sessions from the model: a state path from (initial, transition) and a
/// Gaussian emission per step. Session ids are "syn<index>". A pure function of its
/// arguments.
std::vector<SessionTrace> generate_synthetic(const HmmModel &model, int num_sessions, int length,
                                             std::uint64_t seed, int epoch_seconds = kDefaultEpochSeconds);

/// Six-state ground truth used by the bundled experiments: geometrically spaced
/// means from 400 to 5000 kbps, 8% relative noise, sticky states that move to
/// neighbouring levels.
HmmModel reference_six_state_model();

/// Two-state model with the given means, common standard deviation and self-transition.
HmmModel two_state_model(double low_kbps, double high_kbps, double stddev_kbps, double stay);

} // namespace tputlab
