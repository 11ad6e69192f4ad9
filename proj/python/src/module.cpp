#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tputlab/errors.hpp"
#include "tputlab/evaluation.hpp"
#include "tputlab/hmm.hpp"
#include "tputlab/model_io.hpp"
#include "tputlab/predictors.hpp"
#include "tputlab/simulator.hpp"
#include "tputlab/synthetic.hpp"
#include "tputlab/trace.hpp"

namespace py = pybind11;
using namespace tputlab;

namespace {

std::shared_ptr<const Predictor> baseline(const std::string &name) {
    if (name == "ls") return std::make_shared<LastSamplePredictor>();
    if (name == "am") return std::make_shared<ArithmeticMeanPredictor>();
    if (name == "hm") return std::make_shared<HarmonicMeanPredictor>();
    throw ArgumentError("unknown predictor " + name);
}

std::shared_ptr<const Predictor> predictor_for(const std::string &name, const std::optional<FittedModel> &model) {
    if (name == "ar" || name == "arma" || name == "hmm") {
        if (!model || model_type(*model) != name) throw ArgumentError("predictor " + name + " needs a " + name + " model");
        return make_predictor(*model);
    }
    return baseline(name);
}

// bb, optimal, fixed:<kbps>, mpc:<predictor> or mpc:oracle.
std::shared_ptr<Policy> policy_for(const std::string &spec, const SimulationConfig &config,
                                   const std::optional<FittedModel> &model) {
    if (spec == "bb") return std::make_shared<BufferBasedPolicy>();
    if (spec == "optimal") return std::make_shared<OfflineOptimalPolicy>();
    if (spec.rfind("fixed:", 0) == 0) {
        const double kbps = std::stod(spec.substr(6));
        const auto level = config.level_of(kbps);
        if (!level) throw ArgumentError("fixed bitrate " + spec.substr(6) + " is not on the ladder");
        return std::make_shared<FixedPolicy>(*level, kbps);
    }
    if (spec == "mpc:oracle") return std::make_shared<PerfectForesightMpcPolicy>(config.mpc_horizon_chunks);
    if (spec.rfind("mpc:", 0) == 0) return std::make_shared<MpcPolicy>(predictor_for(spec.substr(4), model));
    throw ArgumentError("unknown policy " + spec);
}

py::dict outcome_dict(const PlaybackOutcome &o) {
    py::dict d;
    d["chosen_levels"] = o.chosen_levels;
    d["chosen_bitrates"] = o.chosen_bitrates;
    d["qoe_value"] = o.qoe_value;
    d["normalized_qoe"] = o.normalized_qoe;
    d["avg_quality"] = o.avg_quality;
    d["quality_variation_sum"] = o.quality_variation_sum;
    d["rebuffer_seconds"] = o.total_rebuffer_seconds;
    d["startup_seconds"] = o.startup_seconds;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Throughput analysis, prediction and playback simulation";

    auto base = py::register_exception<Error>(m, "TputlabError");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
    py::register_exception<InfeasibleTraceError>(m, "InfeasibleTraceError", base.ptr());

    py::class_<SessionTrace>(m, "SessionTrace")
        .def(py::init<std::string, std::vector<double>, int>(), py::arg("session_id"), py::arg("samples_kbps"),
             py::arg("epoch_seconds") = kDefaultEpochSeconds)
        .def_property_readonly("session_id", &SessionTrace::session_id)
        .def_property_readonly("epoch_seconds", &SessionTrace::epoch_seconds)
        .def_property_readonly("samples",
                               [](const SessionTrace &t) { return std::vector<double>(t.samples().begin(), t.samples().end()); })
        .def("__len__", &SessionTrace::size)
        .def(py::self == py::self)
        .def("__repr__", [](const SessionTrace &t) {
            return "SessionTrace('" + t.session_id() + "', " + std::to_string(t.size()) + " epochs)";
        });

    m.def("load_traces", &load_traces, py::arg("path"), py::arg("epoch_seconds") = kDefaultEpochSeconds);
    m.def(
        "parse_traces",
        [](const std::string &text, int epoch_seconds) {
            std::istringstream in(text);
            return parse_traces(in, epoch_seconds);
        },
        py::arg("text"), py::arg("epoch_seconds") = kDefaultEpochSeconds);
    m.def("serialize_traces", [](const std::vector<SessionTrace> &traces) {
        std::ostringstream out;
        serialize_traces(out, traces);
        return out.str();
    });
    m.def(
        "filter_by_duration",
        [](const std::vector<SessionTrace> &s, int min_epochs) { return filter_by_duration(s, min_epochs); },
        py::arg("sessions"), py::arg("min_epochs") = kDefaultMinEpochs);
    m.def(
        "split_sessions",
        [](const std::vector<SessionTrace> &s, std::uint64_t seed) {
            auto split = split_sessions(s, seed);
            return py::make_tuple(split.train, split.test);
        },
        py::arg("sessions"), py::arg("seed"));

    m.def(
        "compute_stability",
        [](const SessionTrace &t, std::size_t max_lag) {
            const auto r = compute_stability(t, max_lag);
            py::dict d;
            d["session_id"] = r.session_id;
            d["num_samples"] = r.num_samples;
            d["mean_kbps"] = r.mean_kbps;
            d["stddev_kbps"] = r.stddev_kbps;
            d["coeff_variation"] = r.coeff_variation;
            d["iqr_spread_kbps"] = r.iqr_spread_kbps;
            d["autocorr"] = r.autocorr;
            d["degenerate"] = r.degenerate;
            return d;
        },
        py::arg("trace"), py::arg("max_lag") = 1);

    py::class_<ArModel>(m, "ArModel")
        .def_readonly("order_p", &ArModel::order_p)
        .def_readonly("intercept", &ArModel::intercept)
        .def_readonly("coeffs", &ArModel::coeffs)
        .def_readonly("noise_variance", &ArModel::noise_variance);
    py::class_<ArmaModel>(m, "ArmaModel")
        .def_readonly("order_p", &ArmaModel::order_p)
        .def_readonly("order_q", &ArmaModel::order_q)
        .def_readonly("intercept", &ArmaModel::intercept)
        .def_readonly("ar_coeffs", &ArmaModel::ar_coeffs)
        .def_readonly("ma_coeffs", &ArmaModel::ma_coeffs)
        .def_readonly("noise_variance", &ArmaModel::noise_variance);
    py::class_<HmmModel>(m, "HmmModel")
        .def(py::init<>())
        .def_readwrite("num_states", &HmmModel::num_states)
        .def_readwrite("initial", &HmmModel::initial)
        .def_readwrite("transition", &HmmModel::transition)
        .def_readwrite("emission_means", &HmmModel::emission_means)
        .def_readwrite("emission_variances", &HmmModel::emission_variances)
        .def("validate", &HmmModel::validate);

    m.def("fit_ar", [](const std::vector<SessionTrace> &s, int p) { return fit_ar(s, p); }, py::arg("sessions"),
          py::arg("p") = kDefaultArOrder);
    m.def(
        "fit_arma", [](const std::vector<SessionTrace> &s, int p, int q) { return fit_arma(s, p, q); },
        py::arg("sessions"), py::arg("p") = kDefaultArmaP, py::arg("q") = kDefaultArmaQ);
    m.def(
        "fit_hmm",
        [](const std::vector<SessionTrace> &s, int states, int max_iters, double tol, int restarts, std::uint64_t seed) {
            HmmFitOptions o;
            o.num_states = states;
            o.max_iters = max_iters;
            o.tol = tol;
            o.restarts = restarts;
            o.seed = seed;
            auto r = fit_hmm(s, o);
            return py::make_tuple(r.model, r.log_likelihood);
        },
        py::arg("sessions"), py::arg("states") = kDefaultHmmStates, py::arg("max_iters") = 200, py::arg("tol") = 1e-4,
        py::arg("restarts") = 1, py::arg("seed") = 0);
    m.def(
        "forward_filter",
        [](const HmmModel &model, const std::vector<double> &obs) {
            auto r = forward_filter_with_likelihood(model, obs);
            return py::make_tuple(r.posterior.probs, r.log_likelihood);
        },
        py::arg("model"), py::arg("observations"));

    m.def("model_to_json", [](const FittedModel &model) { return model_to_json(model); });
    m.def("model_from_json", &model_from_json);
    m.def("reference_six_state_model", &reference_six_state_model);
    m.def("generate_synthetic", &generate_synthetic, py::arg("model"), py::arg("num_sessions"), py::arg("length"),
          py::arg("seed"), py::arg("epoch_seconds") = kDefaultEpochSeconds);

    m.def(
        "predict",
        [](const std::string &predictor, const std::vector<double> &history, int horizon,
           const std::optional<FittedModel> &model) {
            return predictor_for(predictor, model)->predict(HistoryWindow{history, horizon});
        },
        py::arg("predictor"), py::arg("history"), py::arg("horizon") = kDefaultHorizon, py::arg("model") = py::none());
    m.def(
        "evaluate",
        [](const std::string &predictor, const std::vector<SessionTrace> &sessions, double within_pct,
           double across_pct, const std::optional<FittedModel> &model) {
            const auto records = evaluate_corpus(*predictor_for(predictor, model), sessions);
            return aggregate_errors(records, within_pct, across_pct);
        },
        py::arg("predictor"), py::arg("sessions"), py::arg("within_pct") = 90.0, py::arg("across_pct") = 50.0,
        py::arg("model") = py::none());

    py::class_<SimulationConfig>(m, "SimulationConfig")
        .def(py::init<>())
        .def_readwrite("chunk_seconds", &SimulationConfig::chunk_seconds)
        .def_readwrite("ladder_kbps", &SimulationConfig::ladder_kbps)
        .def_readwrite("quality", &SimulationConfig::quality)
        .def_readwrite("buffer_capacity_seconds", &SimulationConfig::buffer_capacity_seconds)
        .def_readwrite("switch_penalty", &SimulationConfig::switch_penalty)
        .def_readwrite("rebuffer_penalty", &SimulationConfig::rebuffer_penalty)
        .def_readwrite("startup_penalty", &SimulationConfig::startup_penalty)
        .def_readwrite("mpc_horizon_chunks", &SimulationConfig::mpc_horizon_chunks)
        .def_readwrite("bb_reservoir_seconds", &SimulationConfig::bb_reservoir_seconds)
        .def_readwrite("bb_cushion_seconds", &SimulationConfig::bb_cushion_seconds)
        .def_readwrite("dp_label_budget", &SimulationConfig::dp_label_budget)
        .def_readwrite("dp_resolution_seconds", &SimulationConfig::dp_resolution_seconds)
        .def_readwrite("max_chunks", &SimulationConfig::max_chunks)
        .def("to_json", &config_to_json)
        .def_static("from_json", &config_from_json);

    m.def(
        "simulate",
        [](const SessionTrace &trace, const std::string &policy, const SimulationConfig &config,
           const std::optional<FittedModel> &model) {
            auto p = policy_for(policy, config, model);
            return outcome_dict(simulate(trace, *p, config));
        },
        py::arg("trace"), py::arg("policy"), py::arg("config") = SimulationConfig{}, py::arg("model") = py::none());
    m.def(
        "offline_optimal",
        [](const SessionTrace &trace, const SimulationConfig &config) {
            return outcome_dict(offline_optimal(trace, config));
        },
        py::arg("trace"), py::arg("config") = SimulationConfig{});
}
