#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "tputlab/errors.hpp"
#include "tputlab/evaluation.hpp"
#include "tputlab/hmm.hpp"
#include "tputlab/model_io.hpp"
#include "tputlab/predictors.hpp"
#include "tputlab/simulator.hpp"
#include "tputlab/stats.hpp"
#include "tputlab/synthetic.hpp"
#include "tputlab/trace.hpp"

namespace tputlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string &bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to a sibling temporary and renames it into place.
void write_atomic(const fs::path &path, const std::string &content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArgumentError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct Common {
    std::string trace;
    std::vector<std::string> models;
    std::string config;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string split = "all";
    int epoch_seconds = kDefaultEpochSeconds;
    int min_epochs = kDefaultMinEpochs;
};

/// Artifacts of one command, written together with their manifest at the end.
class Run {
public:
    Run(std::string command, const Common &common, const CLI::App &sub)
        : command_(std::move(command)), common_(common) {
        manifest_["command"] = command_;
        manifest_["seed"] = common.seed;
        manifest_["options"] = sub.config_to_str(true, false);
        manifest_["inputs"] = json::array();
    }

    std::string manifest_name() const { return command_ + ".manifest.json"; }

    void input(const std::string &path) {
        manifest_["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(read_file(path))}});
    }

    void output(const fs::path &path, std::string content) { outputs_.emplace_back(path, std::move(content)); }

    fs::path in_out_dir(const std::string &name) const { return fs::path(common_.out_dir) / name; }

    void commit(std::ostream &out) {
        json listed = json::array();
        for (const auto &[path, content] : outputs_)
            listed.push_back({{"path", path.string()}, {"sha256", sha256_hex(content)}});
        manifest_["outputs"] = listed;
        for (const auto &[path, content] : outputs_) write_atomic(path, content);
        write_atomic(in_out_dir(manifest_name()), manifest_.dump(2) + "\n");
        for (const auto &[path, content] : outputs_) out << "wrote " << path.string() << '\n';
    }

private:
    std::string command_;
    const Common &common_;
    json manifest_;
    std::vector<std::pair<fs::path, std::string>> outputs_;
};

void add_common(CLI::App *sub, Common &c, const std::string &default_split, bool needs_trace = true) {
    auto *trace = sub->add_option("--trace", c.trace, "Trace CSV (session_id,epoch_index,throughput_kbps)");
    if (needs_trace) trace->required();
    sub->add_option("--config", c.config, "Simulation config (JSON)");
    sub->add_option("--seed", c.seed, "Seed for the train/test split and model initialisation")->capture_default_str();
    sub->add_option("--out-dir", c.out_dir, "Directory for outputs")->capture_default_str();
    c.split = default_split;
    sub->add_option("--split", c.split, "Sessions to use")
        ->check(CLI::IsMember({"train", "test", "all"}))
        ->capture_default_str();
    sub->add_option("--epoch-seconds", c.epoch_seconds, "Epoch length of the trace")->capture_default_str();
    sub->add_option("--min-epochs", c.min_epochs, "Keep sessions with more than this many epochs")
        ->capture_default_str();
}

std::vector<SessionTrace> load_sessions(const Common &c, Run &run) {
    run.input(c.trace);
    auto all = filter_by_duration(load_traces(c.trace, c.epoch_seconds), c.min_epochs);
    if (all.empty()) throw ValidationError("no sessions with more than " + std::to_string(c.min_epochs) + " epochs");
    if (c.split == "all") return all;
    auto split = split_sessions(all, c.seed);
    auto chosen = c.split == "train" ? std::move(split.train) : std::move(split.test);
    if (chosen.empty()) throw ValidationError("the " + c.split + " split is empty");
    return chosen;
}

std::string to_csv(const auto &writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
    std::size_t max_lag = 10;
    double bin_width = kDefaultBinWidthKbps;
};

void cmd_analyze(const Common &c, const AnalyzeOptions &o, Run &run) {
    const auto sessions = load_sessions(c, run);
    std::vector<StabilityReport> reports;
    for (const auto &s : sessions) reports.push_back(compute_stability(s, std::min(o.max_lag, s.size() - 1)));
    const auto bins = bin_normalized_stddev(sessions, o.bin_width);

    std::ostringstream acf;
    acf << "lag,sessions,min,p25,p50,p75,max\n";
    for (std::size_t lag = 1; lag <= o.max_lag; ++lag) {
        std::vector<double> values;
        for (const auto &r : reports)
            if (!r.degenerate && lag <= r.autocorr.size()) values.push_back(r.autocorr[lag - 1]);
        if (values.empty()) continue;
        acf << lag << ',' << values.size();
        for (double pct : {0.0, 25.0, 50.0, 75.0, 100.0}) acf << ',' << format_double(percentile(values, pct));
        acf << '\n';
    }

    run.output(run.in_out_dir("stability.csv"),
               to_csv([&](std::ostream &os) { write_stability_csv(os, reports, o.max_lag); }));
    run.output(run.in_out_dir("bins.csv"), to_csv([&](std::ostream &os) { write_bins_csv(os, bins); }));
    run.output(run.in_out_dir("autocorr.csv"), acf.str());
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    std::string model_type = "hmm";
    int states = kDefaultHmmStates;
    int max_iters = 200;
    double tol = 1e-4;
    int restarts = 1;
    int order_p = 0;
    int order_q = kDefaultArmaQ;
    std::string output;
};

void cmd_train(const Common &c, const TrainOptions &o, Run &run) {
    const auto sessions = load_sessions(c, run);
    const fs::path model_path = o.output.empty() ? run.in_out_dir("model_" + o.model_type + ".json") : fs::path(o.output);
    if (o.model_type == "hmm") {
        HmmFitOptions fit;
        fit.num_states = o.states;
        fit.max_iters = o.max_iters;
        fit.tol = o.tol;
        fit.restarts = o.restarts;
        fit.seed = c.seed;
        const auto result = fit_hmm(sessions, fit);
        run.output(model_path, model_to_json(result.model, run.manifest_name()));
        std::ostringstream ll;
        ll << "iteration,log_likelihood\n";
        for (std::size_t i = 0; i < result.log_likelihood.size(); ++i)
            ll << i << ',' << format_double(result.log_likelihood[i]) << '\n';
        run.output(run.in_out_dir("loglik.csv"), ll.str());
    } else if (o.model_type == "ar") {
        run.output(model_path, model_to_json(fit_ar(sessions, o.order_p > 0 ? o.order_p : kDefaultArOrder),
                                             run.manifest_name()));
    } else if (o.model_type == "arma") {
        run.output(model_path,
                   model_to_json(fit_arma(sessions, o.order_p > 0 ? o.order_p : kDefaultArmaP, o.order_q),
                                 run.manifest_name()));
    } else {
        throw ArgumentError("unknown model type '" + o.model_type + "' (expected hmm, ar or arma)");
    }
}

// ---------------------------------------------------------------- predictors

std::map<std::string, FittedModel> load_models(const Common &c, Run &run) {
    std::map<std::string, FittedModel> models;
    for (const auto &path : c.models) {
        run.input(path);
        auto model = load_model(path);
        models.insert_or_assign(model_type(model), std::move(model));
    }
    return models;
}

std::shared_ptr<const Predictor> predictor_by_name(const std::string &name, int window,
                                                   const std::map<std::string, FittedModel> &models) {
    if (name == "ls") return std::make_shared<LastSamplePredictor>();
    if (name == "am") return std::make_shared<ArithmeticMeanPredictor>(window);
    if (name == "hm") return std::make_shared<HarmonicMeanPredictor>(window);
    if (name == "ar" || name == "arma" || name == "hmm") {
        const auto it = models.find(name);
        if (it == models.end()) throw ArgumentError("predictor '" + name + "' needs a --model file of that type");
        return make_predictor(it->second);
    }
    throw ArgumentError("unknown predictor '" + name + "' (expected ls, am, hm, ar, arma or hmm)");
}

struct PredictOptions {
    std::string predictor;
    int window = kDefaultWindow;
    int horizon = kDefaultHorizon;
    std::size_t warmup = kDefaultWarmup;
    std::string output;
};

void cmd_predict(const Common &c, const PredictOptions &o, Run &run) {
    const auto models = load_models(c, run);
    std::string name = o.predictor;
    if (name.empty()) {
        if (models.size() != 1) throw ArgumentError("give exactly one --model or choose --predictor");
        name = models.begin()->first;
    }
    const auto predictor = predictor_by_name(name, o.window, models);
    const auto sessions = load_sessions(c, run);
    const auto records = evaluate_corpus(*predictor, sessions, o.warmup, o.horizon);
    run.output(o.output.empty() ? run.in_out_dir("predictions.csv") : fs::path(o.output),
               to_csv([&](std::ostream &os) { write_predictions_csv(os, records); }));
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    int states = kDefaultHmmStates;
    std::vector<int> sweep{2, 4, 6, 8};
    int ar_order = kDefaultArOrder;
    int arma_p = kDefaultArmaP;
    int arma_q = kDefaultArmaQ;
    int window = kDefaultWindow;
    int horizon = kDefaultHorizon;
    std::size_t warmup = kDefaultWarmup;
    int max_iters = 200;
    double tol = 1e-4;
};

void cmd_eval(Common c, const EvalOptions &o, Run &run) {
    c.split = "all";
    const auto split = split_sessions(load_sessions(c, run), c.seed);
    if (split.train.empty() || split.test.empty()) throw ValidationError("need at least two sessions to evaluate");

    HmmFitOptions fit;
    fit.num_states = o.states;
    fit.max_iters = o.max_iters;
    fit.tol = o.tol;
    fit.seed = c.seed;
    std::map<std::string, FittedModel> models{{"ar", fit_ar(split.train, o.ar_order)},
                                              {"arma", fit_arma(split.train, o.arma_p, o.arma_q)},
                                              {"hmm", fit_hmm(split.train, fit).model}};

    std::ostringstream errors;
    std::ostringstream distribution;
    errors << "predictor,scheme,within_pct,across_pct,error\n";
    distribution << "predictor,p25,p50,p75,p90\n";
    for (const std::string name : {"ls", "am", "hm", "ar", "arma", "hmm"}) {
        const auto records = evaluate_corpus(*predictor_by_name(name, o.window, models), split.test, o.warmup, o.horizon);
        for (const auto &scheme : default_schemes())
            errors << name << ',' << scheme.name << ',' << format_double(scheme.within_pct) << ','
                   << format_double(scheme.across_pct) << ','
                   << format_double(aggregate_errors(records, scheme.within_pct, scheme.across_pct)) << '\n';
        std::vector<double> errs;
        for (const auto &r : records) errs.push_back(r.err);
        distribution << name;
        for (double pct : {25.0, 50.0, 75.0, 90.0}) distribution << ',' << format_double(percentile(errs, pct));
        distribution << '\n';
    }
    run.output(run.in_out_dir("errors.csv"), errors.str());
    run.output(run.in_out_dir("error_distribution.csv"), distribution.str());

    if (!o.sweep.empty()) {
        SweepConfig sweep;
        sweep.fit = fit;
        sweep.warmup = o.warmup;
        sweep.horizon = o.horizon;
        std::ostringstream rows;
        rows << "num_states,scheme,error\n";
        for (const auto &row : sweep_model_size(split.train, split.test, o.sweep, sweep))
            rows << row.num_states << ',' << sweep.scheme.name << ',' << format_double(row.error) << '\n';
        run.output(run.in_out_dir("sweep.csv"), rows.str());
    }
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::vector<std::string> policies{"bb", "mpc:hm"};
    int window = kDefaultWindow;
    std::string output;
};

std::shared_ptr<Policy> policy_by_name(const std::string &spec, const SimulateOptions &o, const SimulationConfig &config,
                                       const std::map<std::string, FittedModel> &models) {
    if (spec == "bb") return std::make_shared<BufferBasedPolicy>();
    if (spec == "optimal") return std::make_shared<OfflineOptimalPolicy>();
    if (spec.rfind("fixed:", 0) == 0) {
        double kbps = 0.0;
        try {
            kbps = std::stod(spec.substr(6));
        } catch (const std::exception &) {
            throw ArgumentError("bad fixed bitrate in '" + spec + "'");
        }
        const auto level = config.level_of(kbps);
        if (!level) throw ArgumentError("fixed bitrate " + spec.substr(6) + " is not on the ladder");
        return std::make_shared<FixedPolicy>(*level, kbps);
    }
    if (spec.rfind("mpc:", 0) == 0) {
        const auto name = spec.substr(4);
        if (name == "oracle") return std::make_shared<PerfectForesightMpcPolicy>(config.mpc_horizon_chunks);
        return std::make_shared<MpcPolicy>(predictor_by_name(name, o.window, models));
    }
    throw ArgumentError("unknown policy '" + spec + "' (expected bb, optimal, fixed:<kbps> or mpc:<predictor>)");
}

void cmd_simulate(const Common &c, const SimulateOptions &o, Run &run) {
    SimulationConfig config;
    if (!c.config.empty()) {
        run.input(c.config);
        config = load_config(c.config);
    }
    const auto models = load_models(c, run);
    std::vector<std::shared_ptr<Policy>> policies;
    for (const auto &spec : o.policies) policies.push_back(policy_by_name(spec, o, config, models));
    const auto sessions = load_sessions(c, run);
    const auto rows = evaluate_qoe(sessions, policies, config);
    run.output(o.output.empty() ? run.in_out_dir("qoe.csv") : fs::path(o.output),
               to_csv([&](std::ostream &os) { write_qoe_csv(os, rows); }));
}

// ---------------------------------------------------------------- report

struct ReportOptions {
    std::string input;
    std::string column;
    std::string group_by;
    std::string output;
};

std::vector<std::string> split_row(const std::string &line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

void cmd_report(const ReportOptions &o, Run &run) {
    run.input(o.input);
    std::istringstream in(read_file(o.input));
    std::string line;
    if (!std::getline(in, line)) throw ParseError(0, "empty CSV " + o.input);
    const auto header = split_row(line);
    const auto find = [&](const std::string &name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };

    std::string column = o.column;
    std::string group = o.group_by;
    if (column.empty()) {
        for (const char *candidate : {"normalized_qoe", "err", "error", "coeff_variation"})
            if (find(candidate) >= 0) {
                column = candidate;
                break;
            }
        if (column.empty()) throw ArgumentError("cannot guess the value column; pass --column");
        if (group.empty()) {
            if (find("policy") >= 0)
                group = "policy";
            else if (find("predictor") >= 0)
                group = "predictor";
        }
    }
    const auto value_idx = find(column);
    if (value_idx < 0) throw ArgumentError("column '" + column + "' not in " + o.input);
    const auto group_idx = group.empty() ? -1 : find(group);
    if (!group.empty() && group_idx < 0) throw ArgumentError("column '" + group + "' not in " + o.input);

    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = split_row(line);
        if (fields.size() != header.size()) throw ParseError(row, "expected " + std::to_string(header.size()) + " columns");
        const auto &text = fields[static_cast<std::size_t>(value_idx)];
        if (text.empty()) continue;
        double v = 0.0;
        try {
            v = std::stod(text);
        } catch (const std::exception &) {
            throw ParseError(row, "'" + text + "' is not numeric");
        }
        const std::string key = group_idx >= 0 ? fields[static_cast<std::size_t>(group_idx)] : "all";
        auto [it, inserted] = values.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(v);
    }

    std::ostringstream out;
    out << "group,value,cdf\n";
    for (const auto &key : order) {
        auto &v = values[key];
        std::sort(v.begin(), v.end());
        for (std::size_t i = 0; i < v.size(); ++i)
            out << key << ',' << format_double(v[i]) << ','
                << format_double(static_cast<double>(i + 1) / static_cast<double>(v.size())) << '\n';
    }
    run.output(o.output.empty() ? run.in_out_dir("cdf.csv") : fs::path(o.output), out.str());
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
    std::string preset = "six-state";
    int sessions = 500;
    int length = 30;
    std::string output;
};

void cmd_synth(const Common &c, const SynthOptions &o, Run &run) {
    HmmModel model;
    if (!c.models.empty()) {
        run.input(c.models.front());
        const auto loaded = load_model(c.models.front());
        if (!std::holds_alternative<HmmModel>(loaded)) throw ArgumentError("synth needs an hmm model file");
        model = std::get<HmmModel>(loaded);
    } else if (o.preset == "six-state") {
        model = reference_six_state_model();
    } else if (o.preset == "two-state") {
        model = two_state_model(1000.0, 3000.0, 100.0, 0.9);
    } else {
        throw ArgumentError("unknown preset '" + o.preset + "' (expected six-state or two-state)");
    }
    const auto traces = generate_synthetic(model, o.sessions, o.length, c.seed, c.epoch_seconds);
    run.output(o.output.empty() ? run.in_out_dir("traces.csv") : fs::path(o.output),
               to_csv([&](std::ostream &os) { serialize_traces(os, traces); }));
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"tputlab: throughput stability analysis, prediction and ABR simulation"};
    app.require_subcommand(1);

    Common common;
    AnalyzeOptions analyze_opts;
    TrainOptions train_opts;
    PredictOptions predict_opts;
    EvalOptions eval_opts;
    SimulateOptions simulate_opts;
    ReportOptions report_opts;
    SynthOptions synth_opts;

    auto *analyze = app.add_subcommand("analyze", "Per-session stability metrics, CoV bins and autocorrelation quantiles");
    add_common(analyze, common, "all");
    analyze->add_option("--max-lag", analyze_opts.max_lag, "Largest autocorrelation lag")->capture_default_str();
    analyze->add_option("--bin-width", analyze_opts.bin_width, "Throughput bin width (kbps)")->capture_default_str();

    auto *train = app.add_subcommand("train", "Fit an hmm, ar or arma model");
    add_common(train, common, "train");
    train->add_option("--model-type", train_opts.model_type, "hmm | ar | arma")->capture_default_str();
    train->add_option("--states", train_opts.states, "HMM states")->capture_default_str();
    train->add_option("--max-iters", train_opts.max_iters, "EM iteration cap")->capture_default_str();
    train->add_option("--tol", train_opts.tol, "EM log-likelihood tolerance")->capture_default_str();
    train->add_option("--restarts", train_opts.restarts, "EM restarts")->capture_default_str();
    train->add_option("--order-p", train_opts.order_p, "AR order (default 5 for ar, 2 for arma)");
    train->add_option("--order-q", train_opts.order_q, "MA order for arma")->capture_default_str();
    train->add_option("--output", train_opts.output, "Model file path (default <out-dir>/model_<type>.json)");
    train->add_option("--model", common.models, "unused")->group("");

    auto *predict = app.add_subcommand("predict", "Online one-step predictions as PredictionRecord CSV");
    add_common(predict, common, "all");
    predict->add_option("--model", common.models, "Model file (ar, arma or hmm)");
    predict->add_option("--predictor", predict_opts.predictor, "ls | am | hm | ar | arma | hmm (default: the model's type)");
    predict->add_option("--window", predict_opts.window, "AM/HM window")->capture_default_str();
    predict->add_option("--horizon", predict_opts.horizon, "Forecast horizon in epochs")->capture_default_str();
    predict->add_option("--warmup", predict_opts.warmup, "Slots skipped before scoring")->capture_default_str();
    predict->add_option("--output", predict_opts.output, "Output CSV (default <out-dir>/predictions.csv)");

    auto *eval = app.add_subcommand("eval", "Compare all predictors on a seeded 50/50 split and sweep HMM sizes");
    add_common(eval, common, "all");
    eval->add_option("--states", eval_opts.states, "HMM states")->capture_default_str();
    eval->add_option("--sweep", eval_opts.sweep, "HMM sizes to sweep (empty to skip)")->delimiter(',')->capture_default_str();
    eval->add_option("--ar-order", eval_opts.ar_order, "AR order")->capture_default_str();
    eval->add_option("--arma-p", eval_opts.arma_p, "ARMA AR order")->capture_default_str();
    eval->add_option("--arma-q", eval_opts.arma_q, "ARMA MA order")->capture_default_str();
    eval->add_option("--window", eval_opts.window, "AM/HM window")->capture_default_str();
    eval->add_option("--horizon", eval_opts.horizon, "Forecast horizon in epochs")->capture_default_str();
    eval->add_option("--warmup", eval_opts.warmup, "Slots skipped before scoring")->capture_default_str();
    eval->add_option("--max-iters", eval_opts.max_iters, "EM iteration cap")->capture_default_str();
    eval->add_option("--tol", eval_opts.tol, "EM log-likelihood tolerance")->capture_default_str();

    auto *simulate = app.add_subcommand("simulate", "Trace-driven playback with normalized QoE");
    add_common(simulate, common, "all");
    simulate->add_option("--model", common.models, "Model files for mpc:ar, mpc:arma, mpc:hmm");
    simulate->add_option("--policy", simulate_opts.policies, "bb | optimal | fixed:<kbps> | mpc:<ls|am|hm|ar|arma|hmm|oracle>")
        ->capture_default_str();
    simulate->add_option("--window", simulate_opts.window, "AM/HM window")->capture_default_str();
    simulate->add_option("--output", simulate_opts.output, "Output CSV (default <out-dir>/qoe.csv)");

    auto *report = app.add_subcommand("report", "Turn a CSV column into CDF points for plotting");
    report->add_option("--input", report_opts.input, "CSV produced by another command")->required();
    report->add_option("--column", report_opts.column, "Value column (guessed when omitted)");
    report->add_option("--group-by", report_opts.group_by, "Grouping column");
    report->add_option("--output", report_opts.output, "Output CSV (default <out-dir>/cdf.csv)");
    report->add_option("--out-dir", common.out_dir, "Directory for outputs")->capture_default_str();

    auto *synth = app.add_subcommand("synth", "Generate a synthetic trace corpus from an HMM");
    add_common(synth, common, "all", false);
    synth->add_option("--model", common.models, "HMM model file (overrides --preset)");
    synth->add_option("--preset", synth_opts.preset, "six-state | two-state")->capture_default_str();
    synth->add_option("--sessions", synth_opts.sessions, "Number of sessions")->capture_default_str();
    synth->add_option("--length", synth_opts.length, "Epochs per session")->capture_default_str();
    synth->add_option("--output", synth_opts.output, "Output CSV (default <out-dir>/traces.csv)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        if (code != 0) err << '\n' << app.help();
        return code;
    }

    CLI::App *active = app.get_subcommands().front();
    try {
        Run run(active->get_name(), common, *active);
        if (active == analyze) cmd_analyze(common, analyze_opts, run);
        else if (active == train) cmd_train(common, train_opts, run);
        else if (active == predict) cmd_predict(common, predict_opts, run);
        else if (active == eval) cmd_eval(common, eval_opts, run);
        else if (active == simulate) cmd_simulate(common, simulate_opts, run);
        else if (active == report) cmd_report(report_opts, run);
        else cmd_synth(common, synth_opts, run);
        run.commit(out);
    } catch (const ArgumentError &e) {
        err << "error: " << e.what() << "\n\n" << active->help();
        return 2;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace tputlab::cli
