#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "tputlab/errors.hpp"
#include "tputlab/stats.hpp"
#include "tputlab/synthetic.hpp"
#include "tputlab/trace.hpp"

using namespace tputlab;

namespace {

SessionTrace make(std::vector<double> v, std::string id = "s") { return SessionTrace(std::move(id), std::move(v)); }

std::vector<SessionTrace> parse(const std::string &text) {
    std::istringstream in(text);
    return parse_traces(in);
}

} // namespace

TEST_SUITE("trace") {

TEST_CASE("SessionTrace rejects invalid samples") {
    CHECK_THROWS_AS(make({}), ValidationError);
    CHECK_THROWS_AS(make({1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(make({1.0, -3.0}), ValidationError);
    CHECK_THROWS_AS(make({NAN}), ValidationError);
    CHECK_THROWS_AS(make({1.0}, ""), ValidationError);
    CHECK_THROWS_AS(make({1.0}, "a,b"), ValidationError);
    CHECK(make({1.0, 2.0}).duration_seconds() == 120.0);
}

TEST_CASE("interleaved rows group by session in first-appearance order") {
    const auto traces = load_traces(TPUTLAB_TEST_DATA "/interleaved.csv");
    REQUIRE(traces.size() == 2);
    CHECK(traces[0] == make({500, 600, 700}, "b"));
    CHECK(traces[1] == make({1000, 1100.5, 900}, "a"));
}

TEST_CASE("rows may arrive out of epoch order") {
    const auto t = parse("session_id,epoch_index,throughput_kbps\nx,1,20\nx,0,10\n");
    REQUIRE(t.size() == 1);
    CHECK(t[0] == make({10, 20}, "x"));
}

TEST_CASE("parse errors") {
    const std::string header = "session_id,epoch_index,throughput_kbps\n";
    CHECK_THROWS_AS(parse("a,0,1\n"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse(header + "a,0\n"), ParseError);
    CHECK_THROWS_AS(parse(header + "a,zero,1\n"), ParseError);
    CHECK_THROWS_AS(parse(header + "a,0,fast\n"), ParseError);
    CHECK_THROWS_AS(parse(header + "a,-1,5\n"), ParseError);
    CHECK_THROWS_AS(parse(header + "a,0,1\na,0,2\n"), ValidationError);
    CHECK_THROWS_AS(parse(header + "a,0,1\na,2,2\n"), ValidationError);
    CHECK_THROWS_AS(parse(header + "a,0,0\n"), ValidationError);
    try {
        parse(header + "a,0,1\na,1,1\na,2,oops\n");
        FAIL("expected a parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 3);
    }
    try {
        parse(header + "a,0,1\na,1,-4\n");
        FAIL("expected a validation error");
    } catch (const ValidationError &e) {
        CHECK(std::string(e.what()).find("a") != std::string::npos);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("serialize then parse is the identity") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.001, 1e7);
    std::vector<SessionTrace> traces;
    for (int s = 0; s < 20; ++s) {
        std::vector<double> v;
        for (int t = 0; t < 1 + s; ++t) v.push_back(u(gen));
        traces.push_back(make(v, "sess" + std::to_string(s)));
    }
    traces.push_back(make({0.1, 1.0 / 3.0, 1e-300, 5e300}, "edge"));
    std::ostringstream out;
    serialize_traces(out, traces);
    CHECK(parse(out.str()) == traces);
}

TEST_CASE("filter_by_duration keeps strictly longer sessions") {
    std::vector<SessionTrace> s{make(std::vector<double>(5, 1.0), "a"), make(std::vector<double>(6, 1.0), "b"),
                                make(std::vector<double>(7, 1.0), "c")};
    const auto kept = filter_by_duration(s, 6);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].session_id() == "c");
    CHECK(filter_by_duration(std::vector<SessionTrace>{}, 6).empty());
    CHECK_THROWS_AS(filter_by_duration(s, 0), ArgumentError);
    const auto syn = generate_synthetic(reference_six_state_model(), 200, 10, 1);
    CHECK(filter_by_duration(syn, 6).size() == 200);
}

TEST_CASE("stability of the outlier example") {
    const auto r = compute_stability(make({2, 2, 2, 2, 20}), 1);
    CHECK(r.stddev_kbps == doctest::Approx(7.2).epsilon(1e-12));
    CHECK(r.iqr_spread_kbps == 0.0);
    CHECK(r.mean_kbps == doctest::Approx(5.6));
}

TEST_CASE("two sessions with equal moments differ in autocorrelation") {
    const auto a = compute_stability(make({1, 1, 1, 0.5, 0.5, 0.5}), 1);
    const auto b = compute_stability(make({1, 0.5, 1, 0.5, 1, 0.5}), 1);
    CHECK(a.mean_kbps == doctest::Approx(0.75));
    CHECK(b.mean_kbps == doctest::Approx(0.75));
    CHECK(a.stddev_kbps == doctest::Approx(0.25));
    CHECK(b.stddev_kbps == doctest::Approx(0.25));
    CHECK(a.iqr_spread_kbps == doctest::Approx(b.iqr_spread_kbps));
    CHECK(std::abs(a.autocorr[0] - 0.5) < 1e-9);
    CHECK(std::abs(b.autocorr[0] + 5.0 / 6.0) < 1e-9);
}

TEST_CASE("constant trace is degenerate") {
    const auto r = compute_stability(make({5, 5, 5, 5}), 3);
    CHECK(r.degenerate);
    CHECK(r.stddev_kbps == 0.0);
    CHECK(r.coeff_variation == 0.0);
    CHECK(r.autocorr == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(compute_stability(make({1, 2, 3}), 3), ArgumentError);
}

TEST_CASE("permutation invariance and time reversal") {
    std::mt19937_64 gen(17);
    std::lognormal_distribution<double> d(7.0, 0.6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(3 + trial % 20);
        for (auto &x : v) x = d(gen);
        const auto base = compute_stability(make(v), v.size() - 1);
        auto shuffled = v;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const auto s = compute_stability(make(shuffled), v.size() - 1);
        CHECK(s.mean_kbps == base.mean_kbps);
        CHECK(s.stddev_kbps == base.stddev_kbps);
        CHECK(s.iqr_spread_kbps == base.iqr_spread_kbps);
        auto reversed = v;
        std::reverse(reversed.begin(), reversed.end());
        const auto r = compute_stability(make(reversed), v.size() - 1);
        CHECK(r.autocorr == base.autocorr);
        for (double rho : base.autocorr) {
            CHECK(rho <= 1.0 + 1e-9);
            CHECK(rho >= -1.0 - 1e-9);
        }
    }
}

TEST_CASE("coefficient-of-variation bins") {
    const auto one = bin_normalized_stddev(std::vector<SessionTrace>{make({800, 1000})}, 800);
    REQUIRE(one.size() == 1);
    CHECK(one[0].bin_low_kbps == 800);
    // CoV 0.2 and 0.4 in the same bin.
    const auto two = bin_normalized_stddev(std::vector<SessionTrace>{make({800, 1200}, "a"), make({600, 1400}, "b")}, 800);
    REQUIRE(two.size() == 1);
    CHECK(two[0].mean_coeff_variation == doctest::Approx(0.3));
    CHECK(two[0].session_count == 2);
}

TEST_CASE("CoV falls with mean when relative noise shrinks") {
    HmmModel m;
    m.num_states = 1;
    m.initial = {1.0};
    m.transition = {1.0};
    std::vector<SessionTrace> all;
    const double means[] = {400, 1200, 2000, 2800, 3600};
    const double rel_sd[] = {0.5, 0.35, 0.25, 0.15, 0.08};
    for (int i = 0; i < 5; ++i) {
        m.emission_means = {means[i]};
        m.emission_variances = {std::pow(rel_sd[i] * means[i], 2)};
        auto batch = generate_synthetic(m, 40, 200, 100 + i);
        all.insert(all.end(), batch.begin(), batch.end());
    }
    const auto bins = bin_normalized_stddev(all, 800);
    REQUIRE(bins.size() >= 5);
    for (std::size_t i = 1; i < bins.size(); ++i) CHECK(bins[i].mean_coeff_variation < bins[i - 1].mean_coeff_variation);
}

TEST_CASE("synthetic generator") {
    const auto six = reference_six_state_model();
    CHECK(generate_synthetic(six, 10, 30, 4) == generate_synthetic(six, 10, 30, 4));
    CHECK(generate_synthetic(six, 10, 30, 4) != generate_synthetic(six, 10, 30, 5));

    HmmModel flat;
    flat.num_states = 1;
    flat.initial = {1.0};
    flat.transition = {1.0};
    flat.emission_means = {1000.0};
    flat.emission_variances = {1e-6};
    for (const auto &s : generate_synthetic(flat, 3, 20, 9))
        for (double v : s.samples()) CHECK(v == doctest::Approx(1000.0).epsilon(1e-5));

    const auto two = generate_synthetic(two_state_model(1000, 3000, 100, 0.9), 20, 500, 3);
    double lo = 0, hi = 0;
    int nlo = 0, nhi = 0;
    for (const auto &s : two)
        for (double v : s.samples()) {
            if (v < 2000) {
                lo += v;
                ++nlo;
            } else {
                hi += v;
                ++nhi;
            }
        }
    CHECK(std::abs(lo / nlo - 1000) < 20);
    CHECK(std::abs(hi / nhi - 3000) < 60);
}

TEST_CASE("percentile interpolates between ranks") {
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(percentile(v, 0) == 1);
    CHECK(percentile(v, 100) == 4);
    CHECK(percentile(v, 50) == doctest::Approx(2.5));
    CHECK(percentile(v, 25) == doctest::Approx(1.75));
    CHECK(ordered_sum({1e16, 1.0, -1e16}) == ordered_sum({-1e16, 1e16, 1.0}));
}

TEST_CASE("stability CSV has a fixed column order") {
    std::ostringstream out;
    const std::vector<StabilityReport> reports{compute_stability(make({1, 2, 3}, "q"), 2)};
    write_stability_csv(out, reports, 2);
    const auto text = out.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "session_id,num_samples,mean_kbps,stddev_kbps,coeff_variation,iqr_spread_kbps,degenerate,acf_1,acf_2");
}

}
