#include "marts/models.hpp"

#include <cmath>
#include <sstream>

namespace marts {

double eval_transition(const TransitionFunction& tf, double s) {
    tf.validate();
    if (tf.kind == TransitionKind::Indicator) return s >= tf.c ? 1.0 : 0.0;
    // 0.5*(1 + tanh(x/2)) == 1/(1 + exp(-x)); saturates instead of overflowing
    return 0.5 * (1.0 + std::tanh(0.5 * tf.gamma * (s - tf.c)));
}

ModelSpec ModelSpec::mar(CoefficientSet coeffs, MatrixNormalSpec noise) {
    ModelSpec spec;
    spec.kind = ModelKind::MAR;
    spec.regime1 = std::move(coeffs);
    spec.noise = std::move(noise);
    spec.validate();
    return spec;
}

ModelSpec ModelSpec::mtar(CoefficientSet r1, CoefficientSet r2, double c, MatrixNormalSpec noise,
                          TransitionSource src) {
    ModelSpec spec;
    spec.kind = ModelKind::MTAR;
    spec.regime1 = std::move(r1);
    spec.regime2 = std::move(r2);
    spec.transition = TransitionFunction::indicator(c);
    spec.noise = std::move(noise);
    spec.transition_source = src;
    spec.validate();
    return spec;
}

ModelSpec ModelSpec::mstar(CoefficientSet r1, CoefficientSet r2, double gamma, double c,
                           MatrixNormalSpec noise, TransitionSource src) {
    ModelSpec spec;
    spec.kind = ModelKind::MSTAR;
    spec.regime1 = std::move(r1);
    spec.regime2 = std::move(r2);
    spec.transition = TransitionFunction::logistic(gamma, c);
    spec.noise = std::move(noise);
    spec.transition_source = src;
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    regime1.validate();
    if (kind == ModelKind::MAR) {
        if (regime2 || transition)
            throw ModelError("MAR model must not carry a second regime or transition function");
    } else {
        if (!regime2 || !transition)
            throw ModelError("regime-switching model needs a second regime and a transition function");
        regime2->validate();
        transition->validate();
        if (regime2->m() != regime1.m() || regime2->n() != regime1.n())
            throw DimensionError("regime dimensions disagree");
        const auto want =
            kind == ModelKind::MTAR ? TransitionKind::Indicator : TransitionKind::Logistic;
        if (transition->kind != want)
            throw ModelError(kind == ModelKind::MTAR ? "MTAR uses the indicator transition"
                                                     : "MSTAR uses the logistic transition");
    }
    if (noise.rows() != m() || noise.cols() != n())
        throw DimensionError("noise dimensions disagree with coefficients");
    noise.validate();
    if (transition_source.kind == TransitionSource::Kind::LaggedEntry) {
        if (transition_source.lag < 1) throw ModelError("lagged-entry transition needs lag >= 1");
        if (transition_source.row < 0 || transition_source.row >= m() ||
            transition_source.col < 0 || transition_source.col >= n())
            throw ModelError("lagged-entry transition indices out of range");
    }
}

Matrix conditional_mean(const ModelSpec& model, const Matrix& y_prev, double s) {
    if (y_prev.rows() != model.m() || y_prev.cols() != model.n())
        throw DimensionError("conditional_mean: previous frame has wrong dimensions");
    const auto& r1 = model.regime1;
    switch (model.kind) {
        case ModelKind::MAR:
            return r1.left * y_prev * r1.right.transpose();
        case ModelKind::MTAR: {
            const auto& reg = s < model.transition->c ? r1 : *model.regime2;
            return reg.left * y_prev * reg.right.transpose();
        }
        case ModelKind::MSTAR: {
            const double g = eval_transition(*model.transition, s);
            return r1.left * y_prev * r1.right.transpose() +
                   g * (model.regime2->left * y_prev * model.regime2->right.transpose());
        }
    }
    throw Error("unreachable");
}

StationarityReport check_stationarity(const ModelSpec& model) {
    model.validate();
    StationarityReport rep;
    rep.radius_regime1 = spectral_radius(model.regime1.left) * spectral_radius(model.regime1.right);
    rep.stationary = rep.radius_regime1 < 1.0;
    if (model.regime2) {
        rep.radius_regime2 =
            spectral_radius(model.regime2->left) * spectral_radius(model.regime2->right);
        rep.stationary = rep.stationary && *rep.radius_regime2 < 1.0;
    }
    return rep;
}

namespace detail {

double transition_value_at(const ModelSpec& model, const MatrixSeries& series, int t) {
    if (model.kind == ModelKind::MAR) return 0.5;
    if (!series.transition) throw ModelError("model needs a transition series but none is present");
    return (*series.transition)[t];
}

}  // namespace detail

MatrixSeries simulate_path(const ModelSpec& model, int T, const SimulationOptions& opts) {
    model.validate();
    if (T < 2) throw ModelError("simulate_path needs T >= 2");
    const auto rep = check_stationarity(model);
    if (!rep.stationary && !opts.allow_nonstationary) {
        std::ostringstream msg;
        msg << "model is not stationary: spectral-radius products must be < 1 per regime, got "
            << rep.radius_regime1;
        if (rep.radius_regime2) msg << " and " << *rep.radius_regime2;
        throw ModelError(msg.str());
    }

    const bool trend = model.transition_source.kind == TransitionSource::Kind::NormalizedTrend;
    const bool exo = model.transition_source.kind == TransitionSource::Kind::Exogenous;
    int burn = opts.burn_in;
    if (burn < 0) throw ModelError("burn_in must be non-negative");
    if (trend && burn > 0)
        throw ModelError("normalized-trend transition is tied to the sample index; burn_in must be 0");
    if (exo) {
        if (!opts.exogenous) throw ModelError("exogenous transition source needs a transition series");
        if (static_cast<int>(opts.exogenous->size()) != burn + T)
            throw ModelError("exogenous transition series must have length burn_in + T");
    }

    const int m = model.m(), n = model.n();
    const int total = burn + T;
    Rng rng(opts.seed);
    const Matrix init = opts.random_init ? rng.normal_matrix(m, n) : Matrix::Zero(m, n);
    Matrix y_prev = init;

    std::vector<Matrix> all;
    all.reserve(total);
    std::vector<double> s_all(total, 0.0);
    for (int k = 0; k < total; ++k) {
        double s = 0.0;
        switch (model.transition_source.kind) {
            case TransitionSource::Kind::NormalizedTrend:
                s = static_cast<double>(k + 1) / static_cast<double>(T);
                break;
            case TransitionSource::Kind::Exogenous:
                s = (*opts.exogenous)[k];
                break;
            case TransitionSource::Kind::LaggedEntry: {
                // pre-sample lags fall back to the initial frame
                const int src = k - model.transition_source.lag;
                const Matrix& frame = src >= 0 ? all[src] : init;
                s = frame(model.transition_source.row, model.transition_source.col);
                break;
            }
        }
        Matrix y = conditional_mean(model, y_prev, s) + sample_matrix_normal(model.noise, rng);
        all.push_back(y);
        s_all[k] = s;
        y_prev = std::move(y);
    }

    MatrixSeries out;
    out.frames.assign(all.begin() + burn, all.end());
    out.transition = std::vector<double>(s_all.begin() + burn, s_all.end());
    out.validate();
    return out;
}

MatrixSeries residuals(const ModelSpec& model, const MatrixSeries& series) {
    model.validate();
    series.validate();
    if (series.rows() != model.m() || series.cols() != model.n())
        throw DimensionError("residuals: series dimensions disagree with model");
    const int T = series.length();
    if (T < 2) throw DimensionError("residuals need at least two frames");
    MatrixSeries out;
    out.frames.reserve(T - 1);
    std::vector<double> s_out;
    s_out.reserve(T - 1);
    for (int t = 1; t < T; ++t) {
        const double s = detail::transition_value_at(model, series, t);
        out.frames.push_back(series.frames[t] - conditional_mean(model, series.frames[t - 1], s));
        s_out.push_back(s);
    }
    out.transition = std::move(s_out);
    out.row_labels = series.row_labels;
    out.col_labels = series.col_labels;
    return out;
}

Matrix one_step_forecast(const ModelSpec& model, const MatrixSeries& series, double s_next) {
    model.validate();
    series.validate();
    return conditional_mean(model, series.frames.back(), s_next);
}

}  // namespace marts
