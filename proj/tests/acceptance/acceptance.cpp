// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "cli_harness.hpp"
#include "oracles.hpp"
#include "tputlab/evaluation.hpp"
#include "tputlab/hmm.hpp"
#include "tputlab/model_io.hpp"
#include "tputlab/predictors.hpp"
#include "tputlab/simulator.hpp"
#include "tputlab/stats.hpp"
#include "tputlab/synthetic.hpp"
#include "tputlab/trace.hpp"

using namespace tputlab;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    std::string violations;

    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            violations += " [violated: " + what + "]";
        }
    }
    std::string text() const { return detail.str() + violations; }
};

// Every EM run made here, for the monotonicity criterion.
std::vector<std::pair<std::string, std::vector<double>>> g_em_runs;

HmmFitResult tracked_fit(const std::string &label, std::span<const SessionTrace> data, const HmmFitOptions &opt) {
    auto result = fit_hmm(data, opt);
    g_em_runs.emplace_back(label, result.log_likelihood);
    return result;
}

// ------------------------------------------------------------------ 1

void stability_math(Verdict &v) {
    const auto spike = compute_stability(SessionTrace("spike", {2, 2, 2, 2, 20}), 1);
    const auto a = compute_stability(SessionTrace("s1", {1, 1, 1, 0.5, 0.5, 0.5}), 1);
    const auto b = compute_stability(SessionTrace("s2", {1, 0.5, 1, 0.5, 1, 0.5}), 1);
    v.require(std::abs(spike.stddev_kbps - 7.2) < 1e-9, "stddev 7.2");
    v.require(std::abs(spike.iqr_spread_kbps) < 1e-9, "iqr_spread 0");
    v.require(std::abs(a.autocorr[0] - 0.5) < 1e-9, "R(1)=+0.5");
    v.require(std::abs(b.autocorr[0] - (-5.0 / 6.0)) < 1e-9, "R(1)=-5/6");
    v.require(a.mean_kbps == b.mean_kbps && std::abs(a.stddev_kbps - b.stddev_kbps) < 1e-12, "equal moments");
    v.detail << std::setprecision(12) << "stddev=" << spike.stddev_kbps << " iqr=" << spike.iqr_spread_kbps
             << " R1=" << a.autocorr[0] << " vs " << b.autocorr[0];
}

// ------------------------------------------------------------------ 2

void forward_oracle(Verdict &v) {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.05, 1.0), obs(100.0, 5000.0);
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int M = 1 + static_cast<int>(gen() % 3);
        const std::size_t T = 1 + gen() % 8;
        HmmModel m;
        m.num_states = M;
        double s = 0;
        for (int i = 0; i < M; ++i) s += m.initial.emplace_back(u(gen));
        for (auto &x : m.initial) x /= s;
        for (int i = 0; i < M; ++i) {
            std::vector<double> row;
            double rs = 0;
            for (int j = 0; j < M; ++j) rs += row.emplace_back(u(gen));
            for (double x : row) m.transition.push_back(x / rs);
            m.emission_means.push_back(300.0 + 4000.0 * u(gen));
            m.emission_variances.push_back(std::pow(100.0 + 900.0 * u(gen), 2));
        }
        std::vector<double> o(T);
        for (auto &x : o) x = obs(gen);
        const auto brute = oracle::enumerate_paths(m, o);
        const auto post = forward_filter(m, o);
        for (int x = 0; x < M; ++x) worst = std::max(worst, std::abs(post.probs[x] - brute.posterior[x]));
    }
    v.require(worst <= 1e-9, "posterior within 1e-9");
    v.detail << "200 instances, max |diff|=" << std::scientific << std::setprecision(2) << worst << std::defaultfloat;
}

// ------------------------------------------------------------------ 4

void recovery(Verdict &v) {
    const auto ar_data = oracle::as_traces(oracle::simulate_arma(200, {0.8}, {}, 10, 100, 200, 41));
    const double a1 = fit_ar(ar_data, 1).coeffs[0];
    v.require(std::abs(a1 - 0.8) <= 0.05, "AR(1) a1 within 0.05");

    const auto arma_data = oracle::as_traces(oracle::simulate_arma(400, {0.6}, {0.3}, 20, 100, 500, 42));
    const auto arma = fit_arma(arma_data, 1, 1);
    v.require(std::abs(arma.ar_coeffs[0] - 0.6) <= 0.1, "ARMA a1 within 0.1");
    v.require(std::abs(arma.ma_coeffs[0] - 0.3) <= 0.1, "ARMA b1 within 0.1");

    const auto hmm_data = generate_synthetic(two_state_model(1000, 3000, 100, 0.9), 100, 50, 43);
    HmmFitOptions opt;
    opt.num_states = 2;
    opt.seed = 44;
    const auto m = sort_states_by_mean(tracked_fit("two-state recovery", hmm_data, opt).model);
    const double e0 = std::abs(m.emission_means[0] / 1000 - 1), e1 = std::abs(m.emission_means[1] / 3000 - 1);
    v.require(e0 <= 0.05 && e1 <= 0.05, "HMM means within 5%");
    v.require(std::abs(m.transition_at(0, 0) - 0.9) <= 0.05 && std::abs(m.transition_at(1, 1) - 0.9) <= 0.05,
              "HMM self-transitions within 0.05");
    v.detail << std::setprecision(4) << "AR a1=" << a1 << "; ARMA a1=" << arma.ar_coeffs[0]
             << " b1=" << arma.ma_coeffs[0] << "; HMM means " << m.emission_means[0] << "/" << m.emission_means[1]
             << " stay " << m.transition_at(0, 0) << "/" << m.transition_at(1, 1);
}

// ------------------------------------------------------------------ 5, 6

struct SixStateStudy {
    Split split;
    std::vector<std::pair<int, double>> sweep;
    HmmModel six;
};

SixStateStudy run_sweep(Verdict &v) {
    SixStateStudy study;
    const auto corpus = generate_synthetic(reference_six_state_model(), 500, 30, 7);
    study.split = split_sessions(corpus, 11);
    std::map<int, double> err;
    for (int M : {2, 4, 6, 8}) {
        HmmFitOptions opt;
        opt.num_states = M;
        opt.seed = 3;
        const auto fit = tracked_fit("sweep M=" + std::to_string(M), study.split.train, opt);
        if (M == 6) study.six = fit.model;
        const auto records = evaluate_corpus(HmmPredictor(fit.model), study.split.test);
        err[M] = aggregate_errors(records, 90, 50);
        study.sweep.emplace_back(M, err[M]);
    }
    v.require(err[2] > err[4] && err[4] > err[6], "error decreases up to M=6");
    const double rel = std::abs(err[8] - err[6]) / err[6];
    v.require(rel < 0.2, "relative change 6->8 below 20%");
    v.detail << std::setprecision(4) << "p90/median error:";
    for (const auto &[M, e] : study.sweep) v.detail << " M" << M << "=" << e;
    v.detail << "; |e8-e6|/e6=" << rel;
    return study;
}

void predictor_comparison(Verdict &v, const SixStateStudy &study) {
    const auto &train = study.split.train;
    const auto &test = study.split.test;
    std::vector<std::shared_ptr<const Predictor>> baselines{
        std::make_shared<LastSamplePredictor>(), std::make_shared<ArithmeticMeanPredictor>(),
        std::make_shared<HarmonicMeanPredictor>(), std::make_shared<ArPredictor>(fit_ar(train, kDefaultArOrder)),
        std::make_shared<ArmaPredictor>(fit_arma(train, kDefaultArmaP, kDefaultArmaQ))};
    const auto hmm_records = evaluate_corpus(HmmPredictor(study.six), test);
    const double hmm_med = aggregate_errors(hmm_records, 50, 50);
    const double hmm_p90 = aggregate_errors(hmm_records, 90, 50);
    double ar_p90 = 0.0;
    v.detail << std::setprecision(4) << "median/median hmm=" << hmm_med;
    for (const auto &p : baselines) {
        const auto records = evaluate_corpus(*p, test);
        const double med = aggregate_errors(records, 50, 50);
        v.detail << " " << p->name() << "=" << med;
        v.require(hmm_med < med, "HMM below " + p->name() + " on median/median");
        if (p->name() == "ar") ar_p90 = aggregate_errors(records, 90, 50);
    }
    v.require(hmm_p90 < ar_p90, "HMM below AR on p90/median");
    v.detail << "; p90/median hmm=" << hmm_p90 << " ar=" << ar_p90;
}

// ------------------------------------------------------------------ 7

SessionTrace random_trace(std::mt19937_64 &gen, int epochs, int epoch_seconds, double centre) {
    std::lognormal_distribution<double> d(std::log(centre), 0.6);
    std::vector<double> x(static_cast<std::size_t>(epochs));
    for (auto &s : x) s = std::max(80.0, d(gen));
    return SessionTrace("t", x, epoch_seconds);
}

void simulator_soundness(Verdict &v) {
    std::mt19937_64 gen(707);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<double> rungs{300, 500, 800, 1200, 1800, 2500, 3500, 5000};
    double worst_gap = 0;
    int dominance_pairs = 0;
    for (int pair = 0; pair < 100; ++pair) {
        SimulationConfig cfg;
        std::vector<double> ladder = rungs;
        std::shuffle(ladder.begin(), ladder.end(), gen);
        ladder.resize(3 + gen() % 3);
        std::sort(ladder.begin(), ladder.end());
        cfg.ladder_kbps = ladder;
        cfg.chunk_seconds = (gen() % 2) ? 2.0 : 4.0;
        cfg.buffer_capacity_seconds = 20.0 + 10.0 * static_cast<double>(gen() % 3);
        cfg.switch_penalty = 2.0 * u(gen);
        cfg.rebuffer_penalty = 1.0 + 5.0 * u(gen);
        cfg.startup_penalty = cfg.rebuffer_penalty;
        cfg.max_chunks = 20 + gen() % 21;
        const auto trace = random_trace(gen, 2 + static_cast<int>(gen() % 3), 30, 600.0 + 2400.0 * u(gen));
        const double opt = offline_optimal(trace, cfg).qoe_value;
        std::vector<std::unique_ptr<Policy>> policies;
        policies.push_back(std::make_unique<BufferBasedPolicy>());
        policies.push_back(std::make_unique<MpcPolicy>(std::make_shared<HarmonicMeanPredictor>()));
        policies.push_back(std::make_unique<MpcPolicy>(std::make_shared<LastSamplePredictor>()));
        policies.push_back(std::make_unique<PerfectForesightMpcPolicy>(cfg.mpc_horizon_chunks));
        const std::size_t level = gen() % cfg.levels();
        policies.push_back(std::make_unique<FixedPolicy>(level, cfg.ladder_kbps[level]));
        for (auto &p : policies) {
            const double gap = simulate(trace, *p, cfg).qoe_value - opt;
            worst_gap = std::max(worst_gap, gap);
            if (gap > 0.1 * cfg.rebuffer_penalty) v.require(false, "optimum dominates " + p->name());
        }
        ++dominance_pairs;
    }

    int exact = 0;
    for (int inst = 0; inst < 100; ++inst) {
        SimulationConfig cfg;
        std::vector<double> ladder = rungs;
        std::shuffle(ladder.begin(), ladder.end(), gen);
        ladder.resize(2 + gen() % 2);
        std::sort(ladder.begin(), ladder.end());
        cfg.ladder_kbps = ladder;
        cfg.switch_penalty = 2.0 * u(gen);
        cfg.rebuffer_penalty = 1.0 + 5.0 * u(gen);
        cfg.startup_penalty = cfg.rebuffer_penalty;
        cfg.max_chunks = 1 + gen() % 8;
        const auto trace = random_trace(gen, 12, 3, 400.0 + 2400.0 * u(gen));
        PerfectForesightMpcPolicy full;
        const double mpc = simulate(trace, full, cfg).qoe_value;
        const double opt = offline_optimal(trace, cfg).qoe_value;
        const double brute = oracle::enumerate_plans(trace, cfg).qoe;
        if (mpc == opt && opt == brute) ++exact;
    }
    v.require(exact == 100, "full-horizon perfect-foresight MPC equals the optimum");
    v.detail << std::setprecision(4) << dominance_pairs << " pairs x 5 policies, max(policy-opt)=" << worst_gap
             << "; exact matches " << exact << "/100 (also equal to plan enumeration)";
}

// ------------------------------------------------------------------ 8

void qoe_direction(Verdict &v, const SixStateStudy &study) {
    SimulationConfig cfg;
    const auto sessions = generate_synthetic(reference_six_state_model(), 40, 20, 99);
    std::vector<std::shared_ptr<Policy>> policies{
        std::make_shared<MpcPolicy>(std::make_shared<HmmPredictor>(study.six)),
        std::make_shared<MpcPolicy>(std::make_shared<HarmonicMeanPredictor>()), std::make_shared<BufferBasedPolicy>()};
    std::map<std::string, std::vector<double>> norm;
    int flagged = 0;
    for (const auto &row : evaluate_qoe(sessions, policies, cfg)) {
        if (row.normalized)
            norm[row.policy].push_back(*row.outcome.normalized_qoe);
        else
            ++flagged;
    }
    const double hmm = percentile(norm["mpc:hmm"], 50), hm = percentile(norm["mpc:hm"], 50),
                 bb = percentile(norm["bb"], 50);
    v.require(hmm >= hm, "MPC+HMM >= MPC+HM");
    v.require(hm >= bb, "MPC+HM >= buffer-based");
    v.require(hmm >= 0.85, "MPC+HMM median >= 0.85");
    v.detail << std::setprecision(4) << "median normalized QoE mpc:hmm=" << hmm << " mpc:hm=" << hm << " bb=" << bb
             << " (40 sessions, " << flagged << " flagged rows)";
}

// ------------------------------------------------------------------ 3

void em_monotone(Verdict &v) {
    double worst = 0;
    std::size_t iterations = 0;
    for (const auto &[label, ll] : g_em_runs) {
        iterations += ll.size();
        for (std::size_t i = 1; i < ll.size(); ++i) {
            worst = std::max(worst, ll[i - 1] - ll[i]);
            if (ll[i] < ll[i - 1] - 1e-6) v.require(false, label + " decreases at iteration " + std::to_string(i));
        }
    }
    v.require(!g_em_runs.empty(), "at least one EM run");
    v.detail << g_em_runs.size() << " runs, " << iterations << " log-likelihood values, largest drop "
             << std::scientific << std::setprecision(2) << std::max(worst, 0.0) << std::defaultfloat;
}

void extra_em_runs() {
    const auto data = generate_synthetic(reference_six_state_model(), 120, 30, 5);
    for (int M : {1, 3, 5, 10}) {
        HmmFitOptions opt;
        opt.num_states = M;
        opt.seed = static_cast<std::uint64_t>(100 + M);
        opt.restarts = 2;
        tracked_fit("extra M=" + std::to_string(M), data, opt);
    }
}

// ------------------------------------------------------------------ 9

void determinism(Verdict &v) {
    const auto corpus = generate_synthetic(reference_six_state_model(), 50, 25, 21);
    std::ostringstream text;
    serialize_traces(text, corpus);
    std::istringstream in(text.str());
    v.require(parse_traces(in) == corpus, "trace round-trip");

    const auto split = split_sessions(corpus, 1);
    HmmFitOptions opt;
    opt.seed = 9;
    const std::vector<FittedModel> models{fit_ar(split.train, 5), fit_arma(split.train, 2, 1),
                                          tracked_fit("round-trip", split.train, opt).model};
    for (const auto &m : models) v.require(model_from_json(model_to_json(m)) == m, model_type(m) + " model round-trip");

    harness::ScratchDir dir("acceptance");
    const std::string out = dir / "run";
    const auto traces = out + "/traces.csv";
    const std::vector<std::vector<std::string>> steps{
        {"synth", "--sessions", "60", "--length", "15", "--seed", "8", "--out-dir", out},
        {"analyze", "--trace", traces, "--out-dir", out},
        {"train", "--trace", traces, "--model-type", "hmm", "--seed", "5", "--out-dir", out},
        {"train", "--trace", traces, "--model-type", "ar", "--seed", "5", "--out-dir", out},
        {"train", "--trace", traces, "--model-type", "arma", "--seed", "5", "--out-dir", out},
        {"predict", "--trace", traces, "--model", out + "/model_hmm.json", "--split", "test", "--seed", "5", "--out-dir", out},
        {"eval", "--trace", traces, "--sweep", "2,6", "--seed", "5", "--out-dir", out},
        {"simulate", "--trace", traces, "--split", "test", "--seed", "5", "--model", out + "/model_hmm.json",
         "--policy", "bb", "--policy", "mpc:hmm", "--policy", "mpc:hm", "--policy", "optimal", "--out-dir", out},
        {"report", "--input", out + "/qoe.csv", "--out-dir", out},
    };
    std::map<std::string, std::string> first;
    bool ok = true;
    for (int pass = 0; pass < 2 && ok; ++pass) {
        harness::fs::remove_all(out);
        for (const auto &args : steps) {
            const auto r = harness::run(args);
            if (r.code != 0) {
                v.require(false, args[0] + " failed: " + r.err.substr(0, r.err.find('\n')));
                ok = false;
                break;
            }
        }
        if (pass == 0) first = harness::snapshot(out);
        else v.require(harness::snapshot(out) == first, "CLI outputs byte-identical across runs");
    }
    v.detail << "traces + 3 model types round-trip; " << steps.size() << " CLI commands, " << first.size()
             << " files compared byte-for-byte";
}

} // namespace

int main() {
    struct Row {
        int id;
        std::string name;
        bool pass;
        std::string detail;
        double seconds;
    };
    std::vector<Row> rows;
    const auto timed = [&](int id, const std::string &name, const std::function<void(Verdict &)> &body) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            body(v);
        } catch (const std::exception &e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << "criterion " << id << " done in " << std::fixed << std::setprecision(1) << s << "s\n"
                  << std::defaultfloat;
        rows.push_back({id, name, v.pass, v.text(), s});
    };

    SixStateStudy study;
    timed(1, "stability math", stability_math);
    timed(2, "forward filter vs path enumeration", forward_oracle);
    timed(4, "parameter recovery", recovery);
    timed(5, "error vs HMM size plateau", [&](Verdict &v) { study = run_sweep(v); });
    timed(6, "HMM beats baselines", [&](Verdict &v) { predictor_comparison(v, study); });
    timed(7, "simulator dominance and exactness", simulator_soundness);
    timed(8, "normalized QoE ordering", [&](Verdict &v) { qoe_direction(v, study); });
    timed(9, "determinism and round-trips", determinism);
    timed(3, "EM monotonicity", [&](Verdict &v) {
        extra_em_runs();
        em_monotone(v);
    });

    std::sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) { return a.id < b.id; });
    int failed = 0;
    for (const auto &r : rows) {
        failed += r.pass ? 0 : 1;
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name << "): " << r.detail << " ["
                  << std::fixed << std::setprecision(1) << r.seconds << "s]" << std::defaultfloat << '\n';
    }
    std::cout << (rows.size() - static_cast<std::size_t>(failed)) << "/" << rows.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
