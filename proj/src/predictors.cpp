#include "tputlab/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "tputlab/errors.hpp"

namespace tputlab {

namespace {

void check_history(const HistoryWindow &history) {
    if (history.values.empty()) throw ArgumentError("history is empty");
    if (history.horizon < 1) throw ArgumentError("horizon must be at least 1");
}

std::vector<double> repeat(double value, int horizon) {
    return std::vector<double>(static_cast<std::size_t>(horizon), std::max(value, kMinPredictionKbps));
}

std::span<const double> tail(const std::vector<double> &values, int p) {
    if (p < 1) throw ArgumentError("window must be at least 1");
    const auto k = std::min(values.size(), static_cast<std::size_t>(p));
    return std::span<const double>(values).last(k);
}

HistoryWindow front_padded(const HistoryWindow &history, int order) {
    HistoryWindow padded = history;
    if (padded.values.size() < static_cast<std::size_t>(order))
        padded.values.insert(padded.values.begin(), static_cast<std::size_t>(order) - padded.values.size(),
                             padded.values.front());
    return padded;
}

double pooled_mean(std::span<const SessionTrace> sequences) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &s : sequences)
        for (double v : s.samples()) sum += v, ++n;
    return sum / static_cast<double>(n);
}

// Autocovariances gamma(0..max_lag) of the pooled, mean-centred data.
std::vector<double> pooled_autocovariance(std::span<const SessionTrace> sequences, double mu, int max_lag) {
    std::vector<double> gamma(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::size_t n = 0;
    for (const auto &s : sequences) {
        const auto x = s.samples();
        n += x.size();
        for (int k = 0; k <= max_lag; ++k) {
            double acc = 0.0;
            for (std::size_t t = 0; t + static_cast<std::size_t>(k) < x.size(); ++t)
                acc += (x[t] - mu) * (x[t + static_cast<std::size_t>(k)] - mu);
            gamma[static_cast<std::size_t>(k)] += acc;
        }
    }
    for (double &g : gamma) g /= static_cast<double>(n);
    return gamma;
}

void check_training_set(std::span<const SessionTrace> sequences, int p) {
    if (p < 1) throw ArgumentError("AR order must be at least 1");
    if (sequences.empty()) throw ArgumentError("no training sequences");
    std::size_t usable = 0;
    for (const auto &s : sequences) {
        if (s.size() <= static_cast<std::size_t>(p))
            throw ArgumentError("sequence " + s.session_id() + " has " + std::to_string(s.size()) +
                                " samples, need more than " + std::to_string(p));
        usable += s.size() - static_cast<std::size_t>(p);
    }
    if (usable < 10 * static_cast<std::size_t>(p))
        throw ArgumentError("need at least " + std::to_string(10 * p) + " usable training points, have " +
                            std::to_string(usable));
}

} // namespace

std::vector<double> predict_last_sample(const HistoryWindow &history) {
    check_history(history);
    return repeat(history.values.back(), history.horizon);
}

std::vector<double> predict_arithmetic_mean(const HistoryWindow &history, int p) {
    check_history(history);
    const auto window = tail(history.values, p);
    const double sum = std::accumulate(window.begin(), window.end(), 0.0);
    return repeat(sum / static_cast<double>(window.size()), history.horizon);
}

std::vector<double> predict_harmonic_mean(const HistoryWindow &history, int p) {
    check_history(history);
    const auto window = tail(history.values, p);
    double inv = 0.0;
    for (double v : window) {
        if (!(v > 0.0)) throw ArgumentError("harmonic mean needs strictly positive history");
        inv += 1.0 / v;
    }
    return repeat(static_cast<double>(window.size()) / inv, history.horizon);
}

double ArModel::stationary_mean() const {
    const double s = std::accumulate(coeffs.begin(), coeffs.end(), 0.0);
    return intercept / (1.0 - s);
}

ArModel fit_ar(std::span<const SessionTrace> sequences, int p) {
    check_training_set(sequences, p);
    const double mu = pooled_mean(sequences);
    const auto gamma = pooled_autocovariance(sequences, mu, p);
    if (!(gamma[0] > 1e-12 * mu * mu))
        throw DegenerateFitError("autocovariance matrix is singular: training data has zero variance");

    Eigen::MatrixXd toeplitz(p, p);
    Eigen::VectorXd rhs(p);
    for (int i = 0; i < p; ++i) {
        rhs(i) = gamma[static_cast<std::size_t>(i) + 1];
        for (int j = 0; j < p; ++j) toeplitz(i, j) = gamma[static_cast<std::size_t>(std::abs(i - j))];
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(toeplitz);
    const double min_pivot = ldlt.vectorD().minCoeff();
    if (ldlt.info() != Eigen::Success || !(min_pivot > 1e-12 * gamma[0]))
        throw DegenerateFitError("autocovariance matrix is singular");
    const Eigen::VectorXd a = ldlt.solve(rhs);

    ArModel model;
    model.order_p = p;
    model.coeffs.assign(a.data(), a.data() + p);
    const double coeff_sum = a.sum();
    model.intercept = mu * (1.0 - coeff_sum);
    model.noise_variance = std::max(0.0, gamma[0] - a.dot(rhs));
    return model;
}

ArmaModel fit_arma(std::span<const SessionTrace> sequences, int p, int q, int long_order) {
    if (q < 1) throw ArgumentError("ARMA needs q >= 1; use fit_ar for a pure AR model");
    check_training_set(sequences, p);

    std::size_t shortest = sequences.front().size();
    for (const auto &s : sequences) shortest = std::min(shortest, s.size());
    int m = long_order;
    if (m <= 0) {
        const int fit_room = static_cast<int>(shortest) - q - 1;
        m = std::max(std::max(p, q) + 1, std::min(10, fit_room));
    }

    std::vector<SessionTrace> long_enough;
    for (const auto &s : sequences)
        if (s.size() > static_cast<std::size_t>(m + q)) long_enough.push_back(s);
    if (long_enough.empty())
        throw ArgumentError("no sequence is long enough for a long-AR order of " + std::to_string(m));

    // Stage 1: long autoregression approximates the innovations.
    const ArModel long_ar = fit_ar(long_enough, m);

    // Stage 2: regress W_t on its own lags and the lagged innovation estimates.
    const int cols = 1 + p + q;
    std::vector<double> design;
    std::vector<double> target;
    const auto first = static_cast<std::size_t>(std::max(p, m + q));
    for (const auto &s : long_enough) {
        const auto x = s.samples();
        std::vector<double> innov(x.size(), 0.0);
        for (std::size_t t = static_cast<std::size_t>(m); t < x.size(); ++t) {
            double fit = long_ar.intercept;
            for (int j = 1; j <= m; ++j) fit += long_ar.coeffs[static_cast<std::size_t>(j - 1)] * x[t - j];
            innov[t] = x[t] - fit;
        }
        for (std::size_t t = first; t < x.size(); ++t) {
            design.push_back(1.0);
            for (int j = 1; j <= p; ++j) design.push_back(x[t - static_cast<std::size_t>(j)]);
            for (int j = 1; j <= q; ++j) design.push_back(innov[t - static_cast<std::size_t>(j)]);
            target.push_back(x[t]);
        }
    }
    const auto rows = static_cast<Eigen::Index>(target.size());
    if (rows < 2 * cols) throw DegenerateFitError("too few regression rows for ARMA stage 2");

    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        design.data(), rows, cols);
    const Eigen::Map<const Eigen::VectorXd> y(target.data(), rows);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) throw DegenerateFitError("ARMA regression is rank deficient");
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * beta;

    ArmaModel model;
    model.order_p = p;
    model.order_q = q;
    model.intercept = beta(0);
    model.ar_coeffs.assign(beta.data() + 1, beta.data() + 1 + p);
    model.ma_coeffs.assign(beta.data() + 1 + p, beta.data() + cols);
    model.noise_variance = resid.squaredNorm() / static_cast<double>(rows);
    return model;
}

std::vector<double> predict_with_model(const ArModel &model, const HistoryWindow &history) {
    check_history(history);
    const auto p = static_cast<std::size_t>(model.order_p);
    if (history.values.size() < p)
        throw ArgumentError("history has " + std::to_string(history.values.size()) + " values, model order is " +
                            std::to_string(p));
    std::vector<double> series = history.values;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(history.horizon));
    for (int h = 0; h < history.horizon; ++h) {
        double y = model.intercept;
        for (std::size_t j = 1; j <= p; ++j) y += model.coeffs[j - 1] * series[series.size() - j];
        series.push_back(y);
        out.push_back(std::max(y, kMinPredictionKbps));
    }
    return out;
}

std::vector<double> predict_with_model(const ArmaModel &model, const HistoryWindow &history) {
    check_history(history);
    const auto p = static_cast<std::size_t>(model.order_p);
    const auto q = static_cast<std::size_t>(model.order_q);
    const auto &x = history.values;
    if (x.size() < p)
        throw ArgumentError("history has " + std::to_string(x.size()) + " values, model order is " +
                            std::to_string(p));

    // Innovations recovered along the history; pre-sample ones are zero.
    std::vector<double> series = x;
    std::vector<double> innov(x.size(), 0.0);
    auto one_step = [&](std::size_t t) {
        double y = model.intercept;
        for (std::size_t j = 1; j <= p; ++j) y += model.ar_coeffs[j - 1] * series[t - j];
        for (std::size_t j = 1; j <= q && j <= t; ++j) y += model.ma_coeffs[j - 1] * innov[t - j];
        return y;
    };
    for (std::size_t t = p; t < x.size(); ++t) innov[t] = x[t] - one_step(t);

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(history.horizon));
    for (int h = 0; h < history.horizon; ++h) {
        const double y = one_step(series.size());
        series.push_back(y);
        innov.push_back(0.0);
        out.push_back(std::max(y, kMinPredictionKbps));
    }
    return out;
}

std::vector<double> LastSamplePredictor::predict(const HistoryWindow &history) const {
    return predict_last_sample(history);
}

ArithmeticMeanPredictor::ArithmeticMeanPredictor(int window) : window_(window) {
    if (window < 1) throw ArgumentError("window must be at least 1");
}

std::vector<double> ArithmeticMeanPredictor::predict(const HistoryWindow &history) const {
    return predict_arithmetic_mean(history, window_);
}

HarmonicMeanPredictor::HarmonicMeanPredictor(int window) : window_(window) {
    if (window < 1) throw ArgumentError("window must be at least 1");
}

std::vector<double> HarmonicMeanPredictor::predict(const HistoryWindow &history) const {
    return predict_harmonic_mean(history, window_);
}

ArPredictor::ArPredictor(ArModel model) : model_(std::move(model)) {}

std::vector<double> ArPredictor::predict(const HistoryWindow &history) const {
    check_history(history);
    return predict_with_model(model_, front_padded(history, model_.order_p));
}

ArmaPredictor::ArmaPredictor(ArmaModel model) : model_(std::move(model)) {}

std::vector<double> ArmaPredictor::predict(const HistoryWindow &history) const {
    check_history(history);
    return predict_with_model(model_, front_padded(history, model_.order_p));
}

std::vector<double> ConstantPredictor::predict(const HistoryWindow &history) const {
    if (history.horizon < 1) throw ArgumentError("horizon must be at least 1");
    return repeat(kbps_, history.horizon);
}

} // namespace tputlab
