#include "tputlab/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tputlab/errors.hpp"

namespace tputlab {

using nlohmann::json;

namespace {

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class T>
T required(const json &j, const char *key) {
    if (!j.contains(key)) throw ValidationError(std::string("model file is missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ValidationError(std::string("model file key '") + key + "': " + e.what());
    }
}

} // namespace

std::string model_type(const FittedModel &model) {
    static constexpr const char *names[] = {"ar", "arma", "hmm"};
    return names[model.index()];
}

std::string model_to_json(const FittedModel &model, const std::string &manifest) {
    json j;
    j["model_type"] = model_type(model);
    if (const auto *ar = std::get_if<ArModel>(&model)) {
        j["order_p"] = ar->order_p;
        j["order_q"] = 0;
        j["intercept"] = ar->intercept;
        j["coeffs"] = ar->coeffs;
        j["ma_coeffs"] = json::array();
        j["noise_variance"] = ar->noise_variance;
    } else if (const auto *arma = std::get_if<ArmaModel>(&model)) {
        j["order_p"] = arma->order_p;
        j["order_q"] = arma->order_q;
        j["intercept"] = arma->intercept;
        j["coeffs"] = arma->ar_coeffs;
        j["ma_coeffs"] = arma->ma_coeffs;
        j["noise_variance"] = arma->noise_variance;
    } else {
        const auto &hmm = std::get<HmmModel>(model);
        j["num_states"] = hmm.num_states;
        j["initial"] = hmm.initial;
        j["transition"] = hmm.transition;
        j["emission_means"] = hmm.emission_means;
        j["emission_variances"] = hmm.emission_variances;
    }
    if (!manifest.empty()) j["manifest"] = manifest;
    return j.dump(2) + "\n";
}

FittedModel model_from_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ParseError(0, std::string("model file is not valid JSON: ") + e.what());
    }
    const auto type = required<std::string>(j, "model_type");
    if (type == "ar") {
        ArModel m;
        m.order_p = required<int>(j, "order_p");
        m.intercept = required<double>(j, "intercept");
        m.coeffs = required<std::vector<double>>(j, "coeffs");
        m.noise_variance = required<double>(j, "noise_variance");
        if (m.order_p < 1 || m.coeffs.size() != static_cast<std::size_t>(m.order_p) || m.noise_variance < 0.0)
            throw ValidationError("inconsistent AR model");
        return m;
    }
    if (type == "arma") {
        ArmaModel m;
        m.order_p = required<int>(j, "order_p");
        m.order_q = required<int>(j, "order_q");
        m.intercept = required<double>(j, "intercept");
        m.ar_coeffs = required<std::vector<double>>(j, "coeffs");
        m.ma_coeffs = required<std::vector<double>>(j, "ma_coeffs");
        m.noise_variance = required<double>(j, "noise_variance");
        if (m.order_p < 1 || m.order_q < 1 || m.ar_coeffs.size() != static_cast<std::size_t>(m.order_p) ||
            m.ma_coeffs.size() != static_cast<std::size_t>(m.order_q) || m.noise_variance < 0.0)
            throw ValidationError("inconsistent ARMA model");
        return m;
    }
    if (type == "hmm") {
        HmmModel m;
        m.num_states = required<int>(j, "num_states");
        m.initial = required<std::vector<double>>(j, "initial");
        m.transition = required<std::vector<double>>(j, "transition");
        m.emission_means = required<std::vector<double>>(j, "emission_means");
        m.emission_variances = required<std::vector<double>>(j, "emission_variances");
        m.validate();
        return m;
    }
    throw ValidationError("unknown model_type '" + type + "'");
}

FittedModel load_model(const std::string &path) { return model_from_json(read_file(path)); }

std::shared_ptr<const Predictor> make_predictor(const FittedModel &model) {
    if (const auto *ar = std::get_if<ArModel>(&model)) return std::make_shared<ArPredictor>(*ar);
    if (const auto *arma = std::get_if<ArmaModel>(&model)) return std::make_shared<ArmaPredictor>(*arma);
    return std::make_shared<HmmPredictor>(std::get<HmmModel>(model));
}

std::string config_to_json(const SimulationConfig &c) {
    json j;
    j["chunk_seconds"] = c.chunk_seconds;
    j["ladder_kbps"] = c.ladder_kbps;
    j["quality"] = c.quality;
    j["buffer_capacity_seconds"] = c.buffer_capacity_seconds;
    j["switch_penalty"] = c.switch_penalty;
    j["rebuffer_penalty"] = c.rebuffer_penalty;
    j["startup_penalty"] = c.startup_penalty;
    j["mpc_horizon_chunks"] = c.mpc_horizon_chunks;
    j["bb_reservoir_seconds"] = c.bb_reservoir_seconds;
    j["bb_cushion_seconds"] = c.bb_cushion_seconds;
    j["max_chunks"] = c.max_chunks;
    j["dp_label_budget"] = c.dp_label_budget;
    j["dp_resolution_seconds"] = c.dp_resolution_seconds;
    return j.dump(2) + "\n";
}

SimulationConfig config_from_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ParseError(0, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    SimulationConfig c;
    const auto take = [&](const char *key, auto &field) {
        if (j.contains(key)) {
            try {
                j.at(key).get_to(field);
            } catch (const json::exception &e) {
                throw ValidationError(std::string("config key '") + key + "': " + e.what());
            }
        }
    };
    take("chunk_seconds", c.chunk_seconds);
    take("ladder_kbps", c.ladder_kbps);
    take("quality", c.quality);
    take("buffer_capacity_seconds", c.buffer_capacity_seconds);
    take("switch_penalty", c.switch_penalty);
    take("rebuffer_penalty", c.rebuffer_penalty);
    // Startup defaults to the rebuffer weight when only the latter is given.
    c.startup_penalty = c.rebuffer_penalty;
    take("startup_penalty", c.startup_penalty);
    take("mpc_horizon_chunks", c.mpc_horizon_chunks);
    take("bb_reservoir_seconds", c.bb_reservoir_seconds);
    take("bb_cushion_seconds", c.bb_cushion_seconds);
    take("max_chunks", c.max_chunks);
    take("dp_label_budget", c.dp_label_budget);
    take("dp_resolution_seconds", c.dp_resolution_seconds);
    for (const auto &[key, value] : j.items()) {
        static const std::vector<std::string> known{
            "chunk_seconds",        "ladder_kbps",        "quality",         "buffer_capacity_seconds",
            "switch_penalty",       "rebuffer_penalty",   "startup_penalty", "mpc_horizon_chunks",
            "bb_reservoir_seconds", "bb_cushion_seconds", "max_chunks",      "dp_label_budget",
            "dp_resolution_seconds"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

SimulationConfig load_config(const std::string &path) { return config_from_json(read_file(path)); }

} // namespace tputlab
