#include "marts/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "marts/tensor.hpp"
#include "moments.hpp"

namespace marts {

using detail::golden_min;
using detail::inner;
using detail::MomentSet;
using detail::PairData;
using detail::solve_gram;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRelTol = 1e-8;  // matches the structured estimators' default

double ols_ssq(const MomentSet& ms, const Matrix& phi) {
    return std::max(ms.yy - 2.0 * inner(phi, ms.C) + inner(phi, phi * ms.G), 0.0);
}

void set_profile_diagnostics(VecModelFit& fit) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : fit.grid_profile) {
        if (!p.admissible) continue;
        lo = std::min(lo, p.objective);
        hi = std::max(hi, p.objective);
    }
    if (!std::isfinite(lo)) return;
    fit.grid_relative_range = (hi - lo) / std::max(lo, 1e-300);
    fit.flat_profile = (hi - lo) <= 1e-2 * std::max(lo, 1e-12 * fit.sample_energy);
}

}  // namespace

VecModelFit estimate_var(const MatrixSeries& series) {
    const PairData pd = PairData::build(series, false);
    const int d = pd.dim();
    if (series.length() < d + 2) throw DimensionError("estimate_var needs T >= mn + 2");
    const MomentSet ms = pd.total();
    VecModelFit fit;
    fit.phi0 = solve_gram(ms.G, ms.C, "vectorized lag design");
    fit.ssq = ols_ssq(ms, fit.phi0);
    fit.n_parameters = d * d;
    fit.sample_energy = ms.yy;
    return fit;
}

VecModelFit estimate_vtar(const MatrixSeries& series, const ThresholdGrid& grid) {
    if (grid.candidates.empty()) throw RankError("threshold grid has no candidates");
    PairData pd = PairData::build(series, true);
    const int d = pd.dim();
    pd.build_split_index();
    const int min_obs = d + 2;

    VecModelFit fit;
    fit.sample_energy = pd.total().yy;

    double best_q = std::numeric_limits<double>::infinity();
    int best_k = -1;
    double best_c = kNaN;
    for (double c : grid.candidates) {
        const int k = pd.count_below(c);
        GridPoint point;
        point.c = c;
        if (k < min_obs || pd.N - k < min_obs) {
            fit.grid_profile.push_back(point);
            continue;
        }
        try {
            const MomentSet ms1 = pd.below(k);
            const MomentSet ms2 = pd.at_or_above(k);
            const Matrix p1 = solve_gram(ms1.G, ms1.C, "first-regime vectorized design");
            const Matrix p2 = solve_gram(ms2.G, ms2.C, "second-regime vectorized design");
            point.objective = ols_ssq(ms1, p1) + ols_ssq(ms2, p2);
            point.admissible = true;
        } catch (const RankError&) {
            fit.grid_profile.push_back(point);
            continue;
        }
        fit.grid_profile.push_back(point);
        if (point.objective < best_q) {
            best_q = point.objective;
            best_k = k;
            best_c = c;
        }
    }
    if (best_k < 0)
        throw RankError(
            "no admissible threshold candidate: each regime needs at least mn + 2 observations "
            "and a non-singular design");

    const MomentSet ms1 = pd.below(best_k);
    const MomentSet ms2 = pd.at_or_above(best_k);
    fit.phi0 = solve_gram(ms1.G, ms1.C, "first-regime vectorized design");
    fit.phi1 = solve_gram(ms2.G, ms2.C, "second-regime vectorized design");
    fit.tf = TransitionFunction::indicator(best_c);
    fit.ssq = ols_ssq(ms1, fit.phi0) + ols_ssq(ms2, *fit.phi1);
    fit.n_parameters = 2 * d * d;
    set_profile_diagnostics(fit);
    return fit;
}

VecModelFit estimate_vlstar(const MatrixSeries& series, const SlopeThresholdGrid& grid) {
    grid.validate();
    const PairData pd = PairData::build(series, true);
    const int d = pd.dim();
    const MomentSet base = pd.total();
    if (base.yy <= 0.0 && base.G.trace() <= 0.0)
        throw RankError("all-zero series: transition parameters are not identified");

    // Joint design z_t = [x_t; g_t x_t]; blocks of its Gram and cross moments
    // are the unit-, g- and g^2-weighted moments of the lag pairs.
    const auto stacked_fit = [&](const std::vector<double>& g, Matrix& theta,
                                 double& ssq) {
        std::vector<double> g2(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
        const MomentSet wg = pd.weighted(g);
        const MomentSet wg2 = pd.weighted(g2);
        Matrix gram(2 * d, 2 * d);
        gram.topLeftCorner(d, d) = base.G;
        gram.topRightCorner(d, d) = wg.G;
        gram.bottomLeftCorner(d, d) = wg.G;
        gram.bottomRightCorner(d, d) = wg2.G;
        Matrix cross(d, 2 * d);
        cross.leftCols(d) = base.C;
        cross.rightCols(d) = wg.C;
        theta = solve_gram(gram, cross, "stacked smooth-transition design (collinear regressors?)");
        ssq = std::max(base.yy - 2.0 * inner(theta, cross) + inner(theta, theta * gram), 0.0);
    };

    VecModelFit fit;
    fit.sample_energy = base.yy;

    double best_ssq = std::numeric_limits<double>::infinity();
    Matrix best_theta;
    double best_gamma = kNaN, best_c = kNaN;
    bool have_best = false;
    for (double gamma : grid.gamma_values) {
        for (double c : grid.c_values) {
            GridPoint point;
            point.gamma = gamma;
            point.c = c;
            const TransitionFunction tf = TransitionFunction::logistic(gamma, c);
            std::vector<double> g(pd.s.size());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = eval_transition(tf, pd.s[i]);
            try {
                Matrix theta;
                double ssq = 0.0;
                stacked_fit(g, theta, ssq);
                point.objective = ssq;
                point.admissible = true;
                if (ssq < best_ssq) {
                    best_ssq = ssq;
                    best_theta = theta;
                    best_gamma = gamma;
                    best_c = c;
                    have_best = true;
                }
            } catch (const RankError&) {
            }
            fit.grid_profile.push_back(point);
        }
    }
    if (!have_best)
        throw RankError(
            "smooth-transition baseline failed on every grid pair: transition regressors are "
            "collinear (is the transition series constant?)");

    // Same coordinate-wise refinement as the structured estimator.
    const double gamma_lo = grid.gamma_values.front(), gamma_hi = grid.gamma_values.back();
    const double c_lo = grid.c_values.front(), c_hi = grid.c_values.back();
    constexpr double kCoordTol = 1e-6;
    constexpr int kMaxRefine = 100;

    double gamma = best_gamma, c = best_c, cur = best_ssq;
    Matrix theta = best_theta;
    for (int iter = 0; iter < kMaxRefine; ++iter) {
        const double iter_start = cur;
        const Matrix phi0 = theta.leftCols(d);
        const Matrix phi1 = theta.rightCols(d);
        std::vector<double> u(pd.N), p(pd.N), v(pd.N);
        for (int t = 0; t < pd.N; ++t) {
            const Vector x = pd.X.row(t).transpose();
            const Vector r0 = pd.Y.row(t).transpose() - phi0 * x;
            const Vector r1 = phi1 * x;
            u[t] = r0.squaredNorm();
            v[t] = r1.squaredNorm();
            p[t] = r0.dot(r1);
        }
        const auto ssq_at = [&](double gamma_v, double c_v) {
            const TransitionFunction tf = TransitionFunction::logistic(gamma_v, c_v);
            double acc = 0.0;
            for (int t = 0; t < pd.N; ++t) {
                const double gt = eval_transition(tf, pd.s[t]);
                acc += u[t] - 2.0 * gt * p[t] + gt * gt * v[t];
            }
            return std::max(acc, 0.0);
        };
        auto [gamma_new, f_gamma] =
            golden_min([&](double x) { return ssq_at(x, c); }, gamma_lo, gamma_hi, kCoordTol);
        if (f_gamma < cur) {
            gamma = gamma_new;
            cur = f_gamma;
        }
        auto [c_new, f_c] =
            golden_min([&](double x) { return ssq_at(gamma, x); }, c_lo, c_hi, kCoordTol);
        if (f_c < cur) {
            c = c_new;
            cur = f_c;
        }

        const TransitionFunction tf = TransitionFunction::logistic(gamma, c);
        std::vector<double> g(pd.s.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = eval_transition(tf, pd.s[i]);
        double ssq = 0.0;
        stacked_fit(g, theta, ssq);
        cur = std::min(cur, ssq);

        if (std::abs(cur - iter_start) / std::max(iter_start, 1e-300) < kRelTol) break;
    }

    fit.phi0 = theta.leftCols(d);
    fit.phi1 = theta.rightCols(d);
    fit.tf = TransitionFunction::logistic(gamma, c);
    fit.ssq = cur;
    fit.n_parameters = 2 * d * d;
    set_profile_diagnostics(fit);
    return fit;
}

}  // namespace marts
