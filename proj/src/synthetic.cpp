#include "tputlab/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "tputlab/errors.hpp"
#include "tputlab/random.hpp"

namespace tputlab {

std::vector<SessionTrace> generate_synthetic(const HmmModel &model, int num_sessions, int length, std::uint64_t seed,
                                             int epoch_seconds) {
    model.validate();
    if (num_sessions < 1) throw ArgumentError("num_sessions must be at least 1");
    if (length < 1) throw ArgumentError("length must be at least 1");

    const auto m = static_cast<std::size_t>(model.num_states);
    Rng rng(seed);
    std::vector<SessionTrace> sessions;
    sessions.reserve(static_cast<std::size_t>(num_sessions));
    for (int s = 0; s < num_sessions; ++s) {
        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(length));
        std::size_t state = rng.categorical(model.initial);
        for (int t = 0; t < length; ++t) {
            if (t > 0) state = rng.categorical(std::span<const double>(model.transition).subspan(state * m, m));
            const double draw =
                model.emission_means[state] + std::sqrt(model.emission_variances[state]) * rng.normal();
            samples.push_back(std::max(draw, kSyntheticFloorKbps));
        }
        sessions.emplace_back("syn" + std::to_string(s), std::move(samples), epoch_seconds);
    }
    return sessions;
}

HmmModel reference_six_state_model() {
    HmmModel model;
    model.num_states = 6;
    model.emission_means = {400.0, 650.0, 1100.0, 1800.0, 3000.0, 5000.0};
    for (double mu : model.emission_means) model.emission_variances.push_back((0.08 * mu) * (0.08 * mu));
    model.initial.assign(6, 1.0 / 6.0);
    model.transition.assign(36, 0.0);
    constexpr double stay = 0.9;
    for (int i = 0; i < 6; ++i) {
        model.transition[static_cast<std::size_t>(i * 6 + i)] = stay;
        const bool has_down = i > 0;
        const bool has_up = i < 5;
        const double move = (1.0 - stay) / ((has_down ? 1 : 0) + (has_up ? 1 : 0));
        if (has_down) model.transition[static_cast<std::size_t>(i * 6 + i - 1)] = move;
        if (has_up) model.transition[static_cast<std::size_t>(i * 6 + i + 1)] = move;
    }
    return model;
}

HmmModel two_state_model(double low_kbps, double high_kbps, double stddev_kbps, double stay) {
    HmmModel model;
    model.num_states = 2;
    model.initial = {0.5, 0.5};
    model.transition = {stay, 1.0 - stay, 1.0 - stay, stay};
    model.emission_means = {low_kbps, high_kbps};
    model.emission_variances = {stddev_kbps * stddev_kbps, stddev_kbps * stddev_kbps};
    return model;
}

} // namespace tputlab
