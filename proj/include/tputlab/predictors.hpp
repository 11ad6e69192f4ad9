#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tputlab/trace.hpp"

namespace tputlab {

inline constexpr int kDefaultArOrder = 5;
inline constexpr int kDefaultWindow = 5;
inline constexpr int kDefaultArmaP = 2;
inline constexpr int kDefaultArmaQ = 1;
/// Lower clamp on every throughput prediction, in kbps.
inline constexpr double kMinPredictionKbps = 1.0;

/// Past throughputs W_{t-p}..W_{t-1} (oldest first) and the number of future
/// epochs to predict.
struct HistoryWindow {
    std::vector<double> values;
    int horizon = 1;
};

std::vector<double> predict_last_sample(const HistoryWindow &history);
/// Mean of the last min(p, available) values.
std::vector<double> predict_arithmetic_mean(const HistoryWindow &history, int p);
/// Harmonic mean k / sum(1/W) of the last k = min(p, available) values.
std::vector<double> predict_harmonic_mean(const HistoryWindow &history, int p);

/// W_t = intercept + sum_j coeffs[j-1] * W_{t-j} + e_t
struct ArModel {
    int order_p = 0;
    double intercept = 0.0;
    std::vector<double> coeffs;
    double noise_variance = 0.0;

    /// Mean of the stationary process, intercept / (1 - sum coeffs).
    double stationary_mean() const;
    friend bool operator==(const ArModel &, const ArModel &) = default;
};

/// W_t = intercept + sum_j ar_coeffs[j-1] W_{t-j} + sum_j ma_coeffs[j-1] S_{t-j} + S_t
struct ArmaModel {
    int order_p = 0;
    int order_q = 0;
    double intercept = 0.0;
    std::vector<double> ar_coeffs;
    std::vector<double> ma_coeffs;
    double noise_variance = 0.0;

    friend bool operator==(const ArmaModel &, const ArmaModel &) = default;
};

/// Yule-Walker fit of one global AR(p) model. Autocovariances are pooled across
/// sequences around the pooled mean (each sequence contributes its lag products,
/// the total is divided by the pooled sample count).
ArModel fit_ar(std::span<const SessionTrace> sequences, int p);

/// Hannan-Rissanen ARMA(p, q) fit: a long AR model estimates the innovations, then
/// W_t is regressed by least squares on its lags and the lagged innovation estimates.
/// long_order = 0 selects max(10, p + q + 1).
ArmaModel fit_arma(std::span<const SessionTrace> sequences, int p, int q, int long_order = 0);

/// Multi-step forecasts with future innovations at zero, clamped below at 1 kbps.
/// History must hold at least order_p values.
std::vector<double> predict_with_model(const ArModel &model, const HistoryWindow &history);
std::vector<double> predict_with_model(const ArmaModel &model, const HistoryWindow &history);

/// Common interface for everything that turns a throughput history into forecasts.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string name() const = 0;
    /// `history` is non-empty and strictly positive. Returns history.horizon values.
    virtual std::vector<double> predict(const HistoryWindow &history) const = 0;
};

class LastSamplePredictor final : public Predictor {
public:
    std::string name() const override { return "ls"; }
    std::vector<double> predict(const HistoryWindow &history) const override;
};

class ArithmeticMeanPredictor final : public Predictor {
public:
    explicit ArithmeticMeanPredictor(int window = kDefaultWindow);
    std::string name() const override { return "am"; }
    std::vector<double> predict(const HistoryWindow &history) const override;

private:
    int window_;
};

class HarmonicMeanPredictor final : public Predictor {
public:
    explicit HarmonicMeanPredictor(int window = kDefaultWindow);
    std::string name() const override { return "hm"; }
    std::vector<double> predict(const HistoryWindow &history) const override;

private:
    int window_;
};

/// Histories shorter than the model order are front-padded with their oldest value.
class ArPredictor final : public Predictor {
public:
    explicit ArPredictor(ArModel model);
    std::string name() const override { return "ar"; }
    std::vector<double> predict(const HistoryWindow &history) const override;
    const ArModel &model() const { return model_; }

private:
    ArModel model_;
};

class ArmaPredictor final : public Predictor {
public:
    explicit ArmaPredictor(ArmaModel model);
    std::string name() const override { return "arma"; }
    std::vector<double> predict(const HistoryWindow &history) const override;
    const ArmaModel &model() const { return model_; }

private:
    ArmaModel model_;
};

/// Constant forecast, independent of history.
class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(double kbps) : kbps_(kbps) {}
    std::string name() const override { return "const"; }
    std::vector<double> predict(const HistoryWindow &history) const override;

private:
    double kbps_;
};

} // namespace tputlab
