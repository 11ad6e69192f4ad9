#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <variant>

#include "tputlab/hmm.hpp"
#include "tputlab/predictors.hpp"
#include "tputlab/simulator.hpp"

namespace tputlab {

/// Any fitted model that can live in a model file.
using FittedModel = std::variant<ArModel, ArmaModel, HmmModel>;

/// "ar", "arma" or "hmm".
std::string model_type(const FittedModel &model);

/// JSON object with a "model_type" key plus the model's documented keys:
///   ar/arma: order_p, order_q, intercept, coeffs, ma_coeffs, noise_variance
///   hmm:     num_states, initial, transition (row-major), emission_means, emission_variances
/// Extra keys (e.g. "manifest") are written when `manifest` is non-empty and ignored on read.
std::string model_to_json(const FittedModel &model, const std::string &manifest = {});
FittedModel model_from_json(const std::string &text);
FittedModel load_model(const std::string &path);

std::shared_ptr<const Predictor> make_predictor(const FittedModel &model);

/// JSON object whose keys mirror SimulationConfig field names. Missing keys keep defaults.
std::string config_to_json(const SimulationConfig &config);
SimulationConfig config_from_json(const std::string &text);
SimulationConfig load_config(const std::string &path);

} // namespace tputlab
