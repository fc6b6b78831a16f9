#ifndef MARTS_BASELINES_HPP
#define MARTS_BASELINES_HPP

#include <optional>

#include "marts/estimation.hpp"
#include "marts/types.hpp"

namespace marts {

/// Stacked vectorized fit: vec(Y_t) regressed on vec(Y_{t-1}) with an
/// optional second-regime block. Comparison arm against the structured
/// estimators; no intercepts anywhere (zero-mean convention).
struct VecModelFit {
    Matrix phi0;
    std::optional<Matrix> phi1;
    std::optional<TransitionFunction> tf;
    double ssq = 0.0;
    std::vector<GridPoint> grid_profile;
    int n_parameters = 0;
    double sample_energy = 0.0;
    bool flat_profile = false;
    double grid_relative_range = std::numeric_limits<double>::quiet_NaN();

    std::optional<double> c_hat() const {
        if (!tf) return std::nullopt;
        return tf->c;
    }
    std::optional<double> gamma_hat() const {
        if (!tf || tf->kind != TransitionKind::Logistic) return std::nullopt;
        return tf->gamma;
    }
};

/// Plain first-order VAR by OLS.
VecModelFit estimate_var(const MatrixSeries& series);

/// Threshold VAR: per-candidate split OLS in both regimes, candidate with the
/// smallest pooled SSQ wins. Uses the same grid and trimming as
/// estimate_mtar; candidates with fewer than mn + 2 observations in either
/// regime are skipped.
VecModelFit estimate_vtar(const MatrixSeries& series, const ThresholdGrid& grid);

/// Logistic smooth-transition VAR: per-pair OLS of vec(Y_t) on
/// [vec(Y_{t-1}), g_t vec(Y_{t-1})], best pair refined by the same
/// coordinate-wise golden-section search as estimate_mstar. Collinear pairs
/// (g_t nearly constant) are skipped.
VecModelFit estimate_vlstar(const MatrixSeries& series, const SlopeThresholdGrid& grid);

}  // namespace marts

#endif
