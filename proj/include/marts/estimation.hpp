#ifndef MARTS_ESTIMATION_HPP
#define MARTS_ESTIMATION_HPP

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "marts/models.hpp"
#include "marts/types.hpp"

namespace marts {

/// Controls for the alternating-least-squares loops. The defaults mirror the
/// usual simulation setup: right factor starts at 0.2*I, second-regime
/// factors at 0.5*I; random_init draws them from U(0, 0.2) and U(0, 0.5)
/// instead, seeded so fits stay reproducible.
struct IlsOptions {
    int max_sweeps = 200;
    double rel_tol = 1e-8;  // relative SSQ change between sweeps
    // sweep cap while scanning grid candidates; the refit at the selected
    // candidate always gets the full max_sweeps budget
    int grid_max_sweeps = 60;
    std::optional<Matrix> init_right;
    std::optional<CoefficientSet> init_regime2;
    bool random_init = false;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_sweeps < 1) throw ModelError("max_sweeps must be >= 1");
        if (!(rel_tol > 0)) throw ModelError("rel_tol must be > 0");
        if (grid_max_sweeps < 1) throw ModelError("grid_max_sweeps must be >= 1");
    }
};

/// Candidate thresholds drawn from the observed transition values, trimmed to
/// the central [q, 1-q] quantile window.
struct ThresholdGrid {
    double trim_q = 0.1;
    std::vector<double> candidates;  // sorted, subset of observed s_t

    /// Interior percentiles (1..99, nearest-rank) of s_t intersected with the
    /// trim window.
    static ThresholdGrid percentiles(const MatrixSeries& series, double trim_q = 0.1);
    /// Every distinct trimmed s_t value.
    static ThresholdGrid dense(const MatrixSeries& series, double trim_q = 0.1);
    static ThresholdGrid explicit_candidates(std::vector<double> values);
};

/// Grid of (gamma, c) pairs for the smooth-transition search. Defaults:
/// gamma log-spaced on [1, 50], c evenly spaced over the trimmed range of
/// the observed transition values. The phase-2 refinement is confined to the
/// envelope of this grid.
struct SlopeThresholdGrid {
    std::vector<double> gamma_values;
    std::vector<double> c_values;

    static SlopeThresholdGrid defaults(const MatrixSeries& series, double trim_q = 0.1,
                                       int gamma_points = 24, int c_points = 25,
                                       double gamma_min = 1.0, double gamma_max = 50.0);
    void validate() const;
};

/// One grid candidate and its minimized objective. gamma is NaN for pure
/// threshold grids; objective is NaN when the candidate was skipped.
struct GridPoint {
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double c = std::numeric_limits<double>::quiet_NaN();
    double objective = std::numeric_limits<double>::quiet_NaN();
    bool admissible = false;
};

/// Entrywise two-sided normal p-values aligned with the coefficient
/// matrices; NaN marks entries whose standard error is unavailable.
struct PValueMatrices {
    Matrix left1, right1;
    std::optional<Matrix> left2, right2;
};

struct FitResult {
    ModelSpec model;
    double ssq = 0.0;
    int sweeps_used = 0;
    bool converged = false;
    std::vector<double> ssq_trace;  // one value per completed sweep of the final fit
    std::vector<GridPoint> grid_profile;
    std::optional<PValueMatrices> pvalues;
    int n_parameters = 0;       // free coefficient entries, transition params excluded
    double sample_energy = 0.0;  // sum of squared response frames over t = 2..T
    bool flat_profile = false;
    double grid_relative_range = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;

    std::optional<double> c_hat() const {
        if (!model.transition) return std::nullopt;
        return model.transition->c;
    }
    std::optional<double> gamma_hat() const {
        if (!model.transition || model.transition->kind != TransitionKind::Logistic)
            return std::nullopt;
        return model.transition->gamma;
    }
};

/// Alternating least squares for the linear matrix autoregression.
FitResult estimate_mar(const MatrixSeries& series, const IlsOptions& opts = {});

/// Threshold model: per-candidate regime split, per-regime alternating least
/// squares, candidate minimizing the pooled residual trace wins (ties go to
/// the smallest candidate). Candidates whose regimes fall below m + n + 2
/// observations are skipped and recorded as inadmissible in grid_profile.
FitResult estimate_mtar(const MatrixSeries& series, const ThresholdGrid& grid,
                        const IlsOptions& opts = {});

/// Smooth-transition model: phase 1 scans the (gamma, c) grid with
/// conditional alternating least squares; phase 2 alternates matrix sweeps
/// with coordinate-wise golden-section refinement of (gamma, c) inside the
/// grid envelope.
FitResult estimate_mstar(const MatrixSeries& series, const SlopeThresholdGrid& grid,
                         const IlsOptions& opts = {});

/// Residual sum of squares of the smooth-transition model at the given
/// parameters over t = 2..T.
double mstar_loss(const CoefficientSet& regime1, const CoefficientSet& regime2,
                  const MatrixSeries& series, const TransitionFunction& tf);

/// Pooled per-regime residual sum of squares of the threshold model.
double mtar_loss(const CoefficientSet& regime1, const CoefficientSet& regime2,
                 const MatrixSeries& series, double c);

struct GradientSet {
    Matrix dA, dB, dC, dD;
};

/// Analytic gradients of mstar_loss with respect to the four coefficient
/// matrices, derived from the update equations' normal equations.
GradientSet mstar_gradients(const CoefficientSet& regime1, const CoefficientSet& regime2,
                            const MatrixSeries& series, const TransitionFunction& tf);

/// Analytic gradients of mtar_loss; regime-2 gradients are zero when no
/// observation falls at or above c.
GradientSet mtar_gradients(const CoefficientSet& regime1, const CoefficientSet& regime2,
                           const MatrixSeries& series, double c);

/// Rescale each regime so the left factor has unit Frobenius norm, moving the
/// scale into the right factor, and fix signs so the first nonzero entry of
/// each left factor (column-major scan) is positive. Kronecker products and
/// fitted values are unchanged.
CoefficientSet normalize_identification(const CoefficientSet& coeffs);
FitResult normalize_identification(FitResult fit);

/// Per-entry p-values for the fitted coefficients. Each coefficient matrix is
/// treated as the unknown of the linear regression obtained by freezing the
/// other matrices and the transition parameters at their estimates, giving
/// OLS covariance sigma^2 * (Gram)^{-1} with the same Gram matrices the
/// alternating updates use. sigma^2 divides the fit's residual sum of squares
/// by (#scalar observations - #identified coefficients); p-values are
/// two-sided normal.
PValueMatrices coefficient_inference(const FitResult& fit, const MatrixSeries& series);

}  // namespace marts

#endif
