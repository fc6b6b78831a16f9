#ifndef MARTS_MODELS_HPP
#define MARTS_MODELS_HPP

#include <cstdint>
#include <optional>

#include "marts/tensor.hpp"
#include "marts/types.hpp"

namespace marts {

enum class TransitionKind { Logistic, Indicator };

/// Scalar regime weight g(s) in [0, 1]. Logistic uses slope gamma and
/// location c; Indicator is the hard threshold 1{s >= c}.
struct TransitionFunction {
    TransitionKind kind = TransitionKind::Logistic;
    double gamma = 1.0;  // Logistic only
    double c = 0.0;

    static TransitionFunction logistic(double gamma, double c) {
        return {TransitionKind::Logistic, gamma, c};
    }
    static TransitionFunction indicator(double c) { return {TransitionKind::Indicator, 0.0, c}; }

    void validate() const {
        if (kind == TransitionKind::Logistic && !(gamma > 0.0))
            throw ModelError("logistic transition needs gamma > 0");
        if (!std::isfinite(c)) throw ModelError("transition threshold must be finite");
    }
};

double eval_transition(const TransitionFunction& tf, double s);

/// One regime's coefficient pair: left m-by-m row-effect matrix, right
/// n-by-n column-effect matrix. Conditional mean contribution left*Y*right'.
struct CoefficientSet {
    Matrix left;
    Matrix right;

    int m() const { return static_cast<int>(left.rows()); }
    int n() const { return static_cast<int>(right.rows()); }

    void validate() const {
        if (left.rows() != left.cols()) throw DimensionError("left factor must be square");
        if (right.rows() != right.cols()) throw DimensionError("right factor must be square");
        require_finite(left, "left factor");
        require_finite(right, "right factor");
    }
};

enum class ModelKind { MAR, MTAR, MSTAR };

/// Where the transition variable comes from when simulating or forecasting.
struct TransitionSource {
    enum class Kind { NormalizedTrend, LaggedEntry, Exogenous };
    Kind kind = Kind::NormalizedTrend;
    // LaggedEntry only: s_t = Y_{t-lag}(row, col), zero-based indices
    int row = 0;
    int col = 0;
    int lag = 1;

    static TransitionSource trend() { return {}; }
    static TransitionSource lagged_entry(int row, int col, int lag = 1) {
        return {Kind::LaggedEntry, row, col, lag};
    }
    static TransitionSource exogenous() { return {Kind::Exogenous, 0, 0, 1}; }
};

struct ModelSpec {
    ModelKind kind = ModelKind::MAR;
    CoefficientSet regime1;
    std::optional<CoefficientSet> regime2;       // MTAR / MSTAR
    std::optional<TransitionFunction> transition;  // Indicator for MTAR, Logistic for MSTAR
    MatrixNormalSpec noise;
    TransitionSource transition_source;

    int m() const { return regime1.m(); }
    int n() const { return regime1.n(); }

    void validate() const;

    static ModelSpec mar(CoefficientSet coeffs, MatrixNormalSpec noise);
    static ModelSpec mtar(CoefficientSet r1, CoefficientSet r2, double c, MatrixNormalSpec noise,
                          TransitionSource src = TransitionSource::trend());
    static ModelSpec mstar(CoefficientSet r1, CoefficientSet r2, double gamma, double c,
                           MatrixNormalSpec noise,
                           TransitionSource src = TransitionSource::trend());
};

/// Conditional mean of Y_t given Y_{t-1} = y_prev and transition value s.
Matrix conditional_mean(const ModelSpec& model, const Matrix& y_prev, double s);

struct StationarityReport {
    bool stationary = false;
    double radius_regime1 = 0.0;
    std::optional<double> radius_regime2;
};

/// Spectral-radius products rho(A)rho(B) (and rho(C)rho(D) when a second
/// regime exists); stationary iff every product is strictly below one.
StationarityReport check_stationarity(const ModelSpec& model);

struct SimulationOptions {
    int burn_in = 100;  // must be 0 for the trend source; ignored meaning per source
    std::uint64_t seed = 0;
    bool random_init = false;  // standard-normal initial frame instead of zeros
    bool allow_nonstationary = false;
    // Exogenous source: transition values, length burn_in + T
    std::optional<std::vector<double>> exogenous;
};

/// Recursive simulation Y_t = conditional_mean(Y_{t-1}, s_t) + E_t.
/// The returned series carries the transition values used at each step.
MatrixSeries simulate_path(const ModelSpec& model, int T, const SimulationOptions& opts = {});

/// One-step-ahead residual frames Y_t - conditional_mean(Y_{t-1}, s_t) for
/// t = 2..T; the result has length T-1 and transition s_2..s_T.
MatrixSeries residuals(const ModelSpec& model, const MatrixSeries& series);

/// Conditional-mean predictor from the last observed frame.
Matrix one_step_forecast(const ModelSpec& model, const MatrixSeries& series, double s_next);

namespace detail {
/// Transition value used by the model at step t, or 0.5 placeholder for MAR
/// (the MAR mean ignores s entirely).
double transition_value_at(const ModelSpec& model, const MatrixSeries& series, int t);
}  // namespace detail

}  // namespace marts

#endif
