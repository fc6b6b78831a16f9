#include "marts/estimation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "marts/tensor.hpp"
#include "moments.hpp"

namespace marts {

using detail::contract_left;
using detail::contract_right;
using detail::golden_min;
using detail::inner;
using detail::MomentSet;
using detail::PairData;
using detail::solve_gram;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double nearest_rank(const std::vector<double>& sorted, double p) {
    const int n = static_cast<int>(sorted.size());
    int idx = static_cast<int>(std::ceil(p * n));
    idx = std::clamp(idx, 1, n);
    return sorted[idx - 1];
}

std::vector<double> sorted_pair_transition(const PairData& pd) {
    std::vector<double> s = pd.s;
    std::sort(s.begin(), s.end());
    return s;
}

Matrix initial_right(const IlsOptions& opts, int n, Rng& rng) {
    if (opts.init_right) {
        if (opts.init_right->rows() != n || opts.init_right->cols() != n)
            throw DimensionError("init_right has wrong dimensions");
        return *opts.init_right;
    }
    if (opts.random_init) return rng.uniform_matrix(n, n, 0.0, 0.2);
    return 0.2 * Matrix::Identity(n, n);
}

CoefficientSet initial_regime2(const IlsOptions& opts, int m, int n, Rng& rng) {
    if (opts.init_regime2) {
        auto r2 = *opts.init_regime2;
        r2.validate();
        if (r2.m() != m || r2.n() != n) throw DimensionError("init_regime2 has wrong dimensions");
        return r2;
    }
    if (opts.random_init)
        return {rng.uniform_matrix(m, m, 0.0, 0.5), rng.uniform_matrix(n, n, 0.0, 0.5)};
    return {0.5 * Matrix::Identity(m, m), 0.5 * Matrix::Identity(n, n)};
}

// ---------------------------------------------------------------------------
// Single-regime alternating least squares on a moment set.

struct RegimeFit {
    Matrix A, B;
    double ssq = 0.0;
    int sweeps = 0;
    bool converged = false;
    std::vector<double> trace;
};

double regime_moment_ssq(const MomentSet& ms, const Matrix& A, const Matrix& B, int m, int n) {
    const double val = ms.yy - 2.0 * inner(A, contract_left(ms.C, B, m, n)) +
                       inner(A, A * contract_left(ms.G, B.transpose() * B, m, n));
    return std::max(val, 0.0);
}

RegimeFit regime_ils(const MomentSet& ms, int m, int n, Matrix b0, int max_sweeps, double rel_tol,
                     const std::string& ctx) {
    RegimeFit fit;
    fit.B = std::move(b0);
    double prev = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        fit.A = solve_gram(contract_left(ms.G, fit.B.transpose() * fit.B, m, n),
                           contract_left(ms.C, fit.B, m, n), ctx + " left-factor update");
        fit.B = solve_gram(contract_right(ms.G, fit.A.transpose() * fit.A, m, n),
                           contract_right(ms.C, fit.A, m, n), ctx + " right-factor update");
        fit.ssq = regime_moment_ssq(ms, fit.A, fit.B, m, n);
        fit.trace.push_back(fit.ssq);
        fit.sweeps = sweep;
        if (std::isfinite(prev) &&
            std::abs(fit.ssq - prev) / std::max(prev, 1e-300) < rel_tol) {
            fit.converged = true;
            break;
        }
        prev = fit.ssq;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Conditional (g_t known) alternating least squares for the smooth model.

struct MstarMoments {
    MomentSet base;  // unit weights
    Matrix Gg, Gg2, Cg;
    int m = 0, n = 0;
};

MstarMoments build_mstar_moments(const PairData& pd, const MomentSet& base,
                                 const std::vector<double>& g) {
    MstarMoments mm;
    mm.base = base;
    mm.m = pd.m;
    mm.n = pd.n;
    std::vector<double> g2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) g2[i] = g[i] * g[i];
    const MomentSet wg = pd.weighted(g);
    const MomentSet wg2 = pd.weighted(g2);
    mm.Gg = wg.G;
    mm.Cg = wg.C;
    mm.Gg2 = wg2.G;
    return mm;
}

struct MstarFit {
    Matrix A, B, C, D;
    double ssq = 0.0;
    int sweeps = 0;
    bool converged = false;
    std::vector<double> trace;
};

double mstar_moment_ssq(const MstarMoments& mm, const Matrix& A, const Matrix& B, const Matrix& C,
                        const Matrix& D) {
    const int m = mm.m, n = mm.n;
    const double val =
        mm.base.yy - 2.0 * inner(A, contract_left(mm.base.C, B, m, n)) -
        2.0 * inner(C, contract_left(mm.Cg, D, m, n)) +
        inner(A, A * contract_left(mm.base.G, B.transpose() * B, m, n)) +
        2.0 * inner(A, C * contract_left(mm.Gg, D.transpose() * B, m, n)) +
        inner(C, C * contract_left(mm.Gg2, D.transpose() * D, m, n));
    return std::max(val, 0.0);
}

MstarFit mstar_ils(const MstarMoments& mm, Matrix b0, Matrix c0, Matrix d0, int max_sweeps,
                   double rel_tol) {
    const int m = mm.m, n = mm.n;
    MstarFit fit;
    fit.B = std::move(b0);
    fit.C = std::move(c0);
    fit.D = std::move(d0);
    double prev = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        fit.A = solve_gram(
            contract_left(mm.base.G, fit.B.transpose() * fit.B, m, n),
            contract_left(mm.base.C, fit.B, m, n) -
                fit.C * contract_left(mm.Gg, fit.D.transpose() * fit.B, m, n),
            "first-regime left-factor update");
        fit.B = solve_gram(
            contract_right(mm.base.G, fit.A.transpose() * fit.A, m, n),
            contract_right(mm.base.C, fit.A, m, n) -
                fit.D * contract_right(mm.Gg, fit.C.transpose() * fit.A, m, n),
            "first-regime right-factor update");
        fit.C = solve_gram(
            contract_left(mm.Gg2, fit.D.transpose() * fit.D, m, n),
            contract_left(mm.Cg, fit.D, m, n) -
                fit.A * contract_left(mm.Gg, fit.B.transpose() * fit.D, m, n),
            "second-regime left-factor update (do the transition weights vanish?)");
        fit.D = solve_gram(
            contract_right(mm.Gg2, fit.C.transpose() * fit.C, m, n),
            contract_right(mm.Cg, fit.C, m, n) -
                fit.B * contract_right(mm.Gg, fit.A.transpose() * fit.C, m, n),
            "second-regime right-factor update (do the transition weights vanish?)");
        fit.ssq = mstar_moment_ssq(mm, fit.A, fit.B, fit.C, fit.D);
        fit.trace.push_back(fit.ssq);
        fit.sweeps = sweep;
        if (std::isfinite(prev) &&
            std::abs(fit.ssq - prev) / std::max(prev, 1e-300) < rel_tol) {
            fit.converged = true;
            break;
        }
        prev = fit.ssq;
    }
    return fit;
}

std::vector<double> logistic_weights(const std::vector<double>& s, double gamma, double c) {
    std::vector<double> g(s.size());
    const TransitionFunction tf = TransitionFunction::logistic(gamma, c);
    for (std::size_t i = 0; i < s.size(); ++i) g[i] = eval_transition(tf, s[i]);
    return g;
}

void set_profile_diagnostics(FitResult& fit) {
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

// Element-wise sum of two sweep traces, padding the shorter one with its
// final value so the combined objective stays non-increasing.
std::vector<double> combine_traces(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double va = a.empty() ? 0.0 : (i < a.size() ? a[i] : a.back());
        const double vb = b.empty() ? 0.0 : (i < b.size() ? b[i] : b.back());
        out[i] = va + vb;
    }
    return out;
}

MatrixNormalSpec residual_noise(int m, int n, double ssq, double nobs) {
    const double var = nobs > 0 ? ssq / (nobs * m * n) : 0.0;
    return MatrixNormalSpec::iid(m, n, var);
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids

ThresholdGrid ThresholdGrid::percentiles(const MatrixSeries& series, double trim_q) {
    if (!(trim_q > 0.0 && trim_q < 0.5)) throw ModelError("trim_q must lie in (0, 0.5)");
    const PairData pd = PairData::build(series, true);
    const auto sorted = sorted_pair_transition(pd);
    const double lo = nearest_rank(sorted, trim_q);
    const double hi = nearest_rank(sorted, 1.0 - trim_q);
    std::vector<double> cands;
    for (int p = 1; p <= 99; ++p) {
        const double v = nearest_rank(sorted, p / 100.0);
        if (v >= lo && v <= hi) cands.push_back(v);
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    ThresholdGrid grid;
    grid.trim_q = trim_q;
    grid.candidates = std::move(cands);
    return grid;
}

ThresholdGrid ThresholdGrid::dense(const MatrixSeries& series, double trim_q) {
    if (!(trim_q > 0.0 && trim_q < 0.5)) throw ModelError("trim_q must lie in (0, 0.5)");
    const PairData pd = PairData::build(series, true);
    const auto sorted = sorted_pair_transition(pd);
    const double lo = nearest_rank(sorted, trim_q);
    const double hi = nearest_rank(sorted, 1.0 - trim_q);
    std::vector<double> cands;
    for (double v : sorted)
        if (v >= lo && v <= hi) cands.push_back(v);
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    ThresholdGrid grid;
    grid.trim_q = trim_q;
    grid.candidates = std::move(cands);
    return grid;
}

ThresholdGrid ThresholdGrid::explicit_candidates(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    ThresholdGrid grid;
    grid.candidates = std::move(values);
    return grid;
}

SlopeThresholdGrid SlopeThresholdGrid::defaults(const MatrixSeries& series, double trim_q,
                                                int gamma_points, int c_points, double gamma_min,
                                                double gamma_max) {
    if (!(trim_q > 0.0 && trim_q < 0.5)) throw ModelError("trim_q must lie in (0, 0.5)");
    if (gamma_points < 1 || c_points < 1) throw ModelError("grid needs at least one point per axis");
    if (!(gamma_min > 0.0) || !(gamma_max >= gamma_min))
        throw ModelError("gamma range must satisfy 0 < gamma_min <= gamma_max");
    const PairData pd = PairData::build(series, true);
    const auto sorted = sorted_pair_transition(pd);
    const double lo = nearest_rank(sorted, trim_q);
    const double hi = nearest_rank(sorted, 1.0 - trim_q);
    SlopeThresholdGrid grid;
    for (int i = 0; i < gamma_points; ++i) {
        const double f = gamma_points == 1 ? 0.0 : static_cast<double>(i) / (gamma_points - 1);
        grid.gamma_values.push_back(
            std::exp(std::log(gamma_min) + f * (std::log(gamma_max) - std::log(gamma_min))));
    }
    for (int i = 0; i < c_points; ++i) {
        const double f = c_points == 1 ? 0.0 : static_cast<double>(i) / (c_points - 1);
        grid.c_values.push_back(lo + f * (hi - lo));
    }
    grid.c_values.erase(std::unique(grid.c_values.begin(), grid.c_values.end()),
                        grid.c_values.end());
    grid.validate();
    return grid;
}

void SlopeThresholdGrid::validate() const {
    if (gamma_values.empty() || c_values.empty()) throw ModelError("slope grid must be nonempty");
    if (!std::is_sorted(gamma_values.begin(), gamma_values.end()) ||
        !std::is_sorted(c_values.begin(), c_values.end()))
        throw ModelError("slope grid values must be sorted");
    for (double g : gamma_values)
        if (!(g > 0.0) || !std::isfinite(g)) throw ModelError("gamma grid values must be positive");
    for (double c : c_values)
        if (!std::isfinite(c)) throw ModelError("c grid values must be finite");
}

// ---------------------------------------------------------------------------
// Estimators

FitResult estimate_mar(const MatrixSeries& series, const IlsOptions& opts) {
    opts.validate();
    const PairData pd = PairData::build(series, false);
    const int m = pd.m, n = pd.n;
    if (series.length() < m + n + 2)
        throw DimensionError("estimate_mar needs T >= m + n + 2 observations");
    const MomentSet ms = pd.total();
    Rng rng(opts.seed);
    const Matrix b0 = initial_right(opts, n, rng);
    const RegimeFit f = regime_ils(ms, m, n, b0, opts.max_sweeps, opts.rel_tol, "linear-fit");

    FitResult out;
    out.model = ModelSpec::mar({f.A, f.B}, residual_noise(m, n, f.ssq, ms.count));
    out.ssq = f.ssq;
    out.sweeps_used = f.sweeps;
    out.converged = f.converged;
    out.ssq_trace = f.trace;
    out.n_parameters = m * m + n * n;
    out.sample_energy = ms.yy;
    return normalize_identification(std::move(out));
}

FitResult estimate_mtar(const MatrixSeries& series, const ThresholdGrid& grid,
                        const IlsOptions& opts) {
    opts.validate();
    if (grid.candidates.empty()) throw RankError("threshold grid has no candidates");
    PairData pd = PairData::build(series, true);
    const int m = pd.m, n = pd.n;
    pd.build_split_index();
    const int min_obs = m + n + 2;

    Rng rng(opts.seed);
    const Matrix b0 = initial_right(opts, n, rng);
    const CoefficientSet r2init = initial_regime2(opts, m, n, rng);

    FitResult out;
    out.sample_energy = pd.total().yy;

    double best_q = std::numeric_limits<double>::infinity();
    int best_k = -1;
    double best_c = kNaN;
    for (double c : grid.candidates) {
        const int k = pd.count_below(c);
        GridPoint point;
        point.c = c;
        if (k < min_obs || pd.N - k < min_obs) {
            out.grid_profile.push_back(point);
            continue;
        }
        try {
            const RegimeFit f1 = regime_ils(pd.below(k), m, n, b0, opts.grid_max_sweeps,
                                            opts.rel_tol, "first-regime");
            const RegimeFit f2 = regime_ils(pd.at_or_above(k), m, n, r2init.right,
                                            opts.grid_max_sweeps, opts.rel_tol, "second-regime");
            point.objective = f1.ssq + f2.ssq;
            point.admissible = true;
        } catch (const RankError&) {
            out.grid_profile.push_back(point);
            continue;
        }
        out.grid_profile.push_back(point);
        if (point.objective < best_q) {
            best_q = point.objective;
            best_k = k;
            best_c = c;
        }
    }
    if (best_k < 0)
        throw RankError(
            "no admissible threshold candidate: each regime needs at least m + n + 2 "
            "observations and a non-singular Gram matrix");

    const RegimeFit f1 =
        regime_ils(pd.below(best_k), m, n, b0, opts.max_sweeps, opts.rel_tol, "first-regime");
    const RegimeFit f2 = regime_ils(pd.at_or_above(best_k), m, n, r2init.right, opts.max_sweeps,
                                    opts.rel_tol, "second-regime");

    out.model = ModelSpec::mtar({f1.A, f1.B}, {f2.A, f2.B}, best_c,
                                residual_noise(m, n, f1.ssq + f2.ssq, pd.N),
                                TransitionSource::exogenous());
    out.ssq = f1.ssq + f2.ssq;
    out.sweeps_used = std::max(f1.sweeps, f2.sweeps);
    out.converged = f1.converged && f2.converged;
    out.ssq_trace = combine_traces(f1.trace, f2.trace);
    out.n_parameters = 2 * (m * m + n * n);
    set_profile_diagnostics(out);
    return normalize_identification(std::move(out));
}

FitResult estimate_mstar(const MatrixSeries& series, const SlopeThresholdGrid& grid,
                         const IlsOptions& opts) {
    opts.validate();
    grid.validate();
    PairData pd = PairData::build(series, true);
    const int m = pd.m, n = pd.n;
    const MomentSet base = pd.total();
    if (base.yy <= 0.0 && base.G.trace() <= 0.0)
        throw RankError("all-zero series: transition parameters are not identified");

    Rng rng(opts.seed);
    const Matrix b0 = initial_right(opts, n, rng);
    const CoefficientSet r2init = initial_regime2(opts, m, n, rng);

    FitResult out;
    out.sample_energy = base.yy;

    // Phase 1: conditional alternating least squares on every grid pair.
    double best_ssq = std::numeric_limits<double>::infinity();
    MstarFit best;
    double best_gamma = kNaN, best_c = kNaN;
    bool have_best = false;
    for (double gamma : grid.gamma_values) {
        for (double c : grid.c_values) {
            GridPoint point;
            point.gamma = gamma;
            point.c = c;
            try {
                const auto g = logistic_weights(pd.s, gamma, c);
                const MstarMoments mm = build_mstar_moments(pd, base, g);
                const MstarFit fit =
                    mstar_ils(mm, b0, r2init.left, r2init.right, opts.grid_max_sweeps, opts.rel_tol);
                point.objective = fit.ssq;
                point.admissible = true;
                if (fit.ssq < best_ssq) {
                    best_ssq = fit.ssq;
                    best = fit;
                    best_gamma = gamma;
                    best_c = c;
                    have_best = true;
                }
            } catch (const RankError&) {
            }
            out.grid_profile.push_back(point);
        }
    }
    if (!have_best)
        throw RankError(
            "smooth-transition fit failed on every grid pair: the second regime is "
            "unidentified (transition weights vanish or Gram matrices are singular)");

    // Phase 2: alternate full matrix sweeps with coordinate-wise
    // golden-section refinement of (gamma, c) inside the grid envelope.
    const double gamma_lo = grid.gamma_values.front(), gamma_hi = grid.gamma_values.back();
    const double c_lo = grid.c_values.front(), c_hi = grid.c_values.back();
    constexpr double kCoordTol = 1e-6;
    constexpr int kMaxRefine = 100;

    double gamma = best_gamma, c = best_c;
    Matrix A = best.A, B = best.B, C = best.C, D = best.D;
    double cur = best.ssq;
    out.ssq_trace = best.trace;
    int sweeps_total = best.sweeps;
    bool converged = false;

    for (int iter = 0; iter < kMaxRefine; ++iter) {
        const double iter_start = cur;

        const auto g = logistic_weights(pd.s, gamma, c);
        const MstarMoments mm = build_mstar_moments(pd, base, g);
        const MstarFit fit = mstar_ils(mm, B, C, D, opts.max_sweeps, opts.rel_tol);
        A = fit.A;
        B = fit.B;
        C = fit.C;
        D = fit.D;
        cur = fit.ssq;
        out.ssq_trace.insert(out.ssq_trace.end(), fit.trace.begin(), fit.trace.end());
        sweeps_total += fit.sweeps;

        // residual split per pair: ssq(gamma', c') = sum u - 2 g p + g^2 v
        std::vector<double> u(pd.N), p(pd.N), v(pd.N);
        for (int t = 0; t < pd.N; ++t) {
            const Matrix y_prev = unvec(pd.X.row(t).transpose(), m, n);
            const Matrix y = unvec(pd.Y.row(t).transpose(), m, n);
            const Matrix base_resid = y - A * y_prev * B.transpose();
            const Matrix second = C * y_prev * D.transpose();
            u[t] = base_resid.squaredNorm();
            v[t] = second.squaredNorm();
            p[t] = inner(base_resid, second);
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
        out.ssq_trace.push_back(cur);
        auto [c_new, f_c] =
            golden_min([&](double x) { return ssq_at(gamma, x); }, c_lo, c_hi, kCoordTol);
        if (f_c < cur) {
            c = c_new;
            cur = f_c;
        }
        out.ssq_trace.push_back(cur);

        if (std::abs(cur - iter_start) / std::max(iter_start, 1e-300) < opts.rel_tol) {
            converged = true;
            break;
        }
    }

    out.model = ModelSpec::mstar({A, B}, {C, D}, gamma, c, residual_noise(m, n, cur, pd.N),
                                 TransitionSource::exogenous());
    out.ssq = cur;
    out.sweeps_used = sweeps_total;
    out.converged = converged;
    out.n_parameters = 2 * (m * m + n * n);
    set_profile_diagnostics(out);
    return normalize_identification(std::move(out));
}

// ---------------------------------------------------------------------------
// Losses and analytic gradients (direct residual form; these are the
// reference surfaces the moment-based estimators are tested against).

namespace {

void check_gradient_inputs(const CoefficientSet& r1, const CoefficientSet& r2,
                           const MatrixSeries& series) {
    r1.validate();
    r2.validate();
    series.validate();
    if (r1.m() != series.rows() || r1.n() != series.cols() || r2.m() != r1.m() ||
        r2.n() != r1.n())
        throw DimensionError("coefficient dimensions disagree with series");
    if (!series.transition) throw ModelError("loss needs a transition series");
    if (series.length() < 2) throw DimensionError("loss needs at least two frames");
}

}  // namespace

double mstar_loss(const CoefficientSet& regime1, const CoefficientSet& regime2,
                  const MatrixSeries& series, const TransitionFunction& tf) {
    check_gradient_inputs(regime1, regime2, series);
    double ssq = 0.0;
    for (int t = 1; t < series.length(); ++t) {
        const double g = eval_transition(tf, (*series.transition)[t]);
        const Matrix r = series.frames[t] -
                         regime1.left * series.frames[t - 1] * regime1.right.transpose() -
                         g * (regime2.left * series.frames[t - 1] * regime2.right.transpose());
        ssq += r.squaredNorm();
    }
    return ssq;
}

double mtar_loss(const CoefficientSet& regime1, const CoefficientSet& regime2,
                 const MatrixSeries& series, double c) {
    check_gradient_inputs(regime1, regime2, series);
    double ssq = 0.0;
    for (int t = 1; t < series.length(); ++t) {
        const auto& reg = (*series.transition)[t] < c ? regime1 : regime2;
        const Matrix r = series.frames[t] - reg.left * series.frames[t - 1] * reg.right.transpose();
        ssq += r.squaredNorm();
    }
    return ssq;
}

GradientSet mstar_gradients(const CoefficientSet& regime1, const CoefficientSet& regime2,
                            const MatrixSeries& series, const TransitionFunction& tf) {
    check_gradient_inputs(regime1, regime2, series);
    const int m = regime1.m(), n = regime1.n();
    GradientSet grad{Matrix::Zero(m, m), Matrix::Zero(n, n), Matrix::Zero(m, m),
                     Matrix::Zero(n, n)};
    for (int t = 1; t < series.length(); ++t) {
        const Matrix& y = series.frames[t];
        const Matrix& x = series.frames[t - 1];
        const double g = eval_transition(tf, (*series.transition)[t]);
        const Matrix r = y - regime1.left * x * regime1.right.transpose() -
                         g * (regime2.left * x * regime2.right.transpose());
        grad.dA.noalias() -= 2.0 * r * regime1.right * x.transpose();
        grad.dB.noalias() -= 2.0 * r.transpose() * regime1.left * x;
        grad.dC.noalias() -= 2.0 * g * r * regime2.right * x.transpose();
        grad.dD.noalias() -= 2.0 * g * r.transpose() * regime2.left * x;
    }
    return grad;
}

GradientSet mtar_gradients(const CoefficientSet& regime1, const CoefficientSet& regime2,
                           const MatrixSeries& series, double c) {
    check_gradient_inputs(regime1, regime2, series);
    const int m = regime1.m(), n = regime1.n();
    GradientSet grad{Matrix::Zero(m, m), Matrix::Zero(n, n), Matrix::Zero(m, m),
                     Matrix::Zero(n, n)};
    for (int t = 1; t < series.length(); ++t) {
        const Matrix& y = series.frames[t];
        const Matrix& x = series.frames[t - 1];
        if ((*series.transition)[t] < c) {
            const Matrix r = y - regime1.left * x * regime1.right.transpose();
            grad.dA.noalias() -= 2.0 * r * regime1.right * x.transpose();
            grad.dB.noalias() -= 2.0 * r.transpose() * regime1.left * x;
        } else {
            const Matrix r = y - regime2.left * x * regime2.right.transpose();
            grad.dC.noalias() -= 2.0 * r * regime2.right * x.transpose();
            grad.dD.noalias() -= 2.0 * r.transpose() * regime2.left * x;
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Identification and inference

CoefficientSet normalize_identification(const CoefficientSet& coeffs) {
    coeffs.validate();
    const double scale = coeffs.left.norm();
    if (scale == 0.0) throw Error("cannot normalize a zero left factor");
    CoefficientSet out{coeffs.left / scale, coeffs.right * scale};
    for (Eigen::Index idx = 0; idx < out.left.size(); ++idx) {
        const double v = out.left.data()[idx];  // column-major scan
        if (v != 0.0) {
            if (v < 0.0) {
                out.left = -out.left;
                out.right = -out.right;
            }
            break;
        }
    }
    return out;
}

FitResult normalize_identification(FitResult fit) {
    fit.model.regime1 = normalize_identification(fit.model.regime1);
    if (fit.model.regime2) fit.model.regime2 = normalize_identification(*fit.model.regime2);
    return fit;
}

namespace {

Matrix pvalue_block(const Matrix& coeffs, const Matrix& gram, double sigma2, double dof) {
    Matrix p = Matrix::Constant(coeffs.rows(), coeffs.cols(), kNaN);
    if (dof <= 0.0 || !(sigma2 >= 0.0)) return p;
    if (detail::sym_eig_ratio(gram) <= 1e-13) return p;
    const Matrix ginv = gram.inverse();
    for (Eigen::Index j = 0; j < coeffs.cols(); ++j) {
        const double var = sigma2 * ginv(j, j);
        if (!(var > 0.0)) continue;
        const double se = std::sqrt(var);
        for (Eigen::Index i = 0; i < coeffs.rows(); ++i) {
            const double t = coeffs(i, j) / se;
            p(i, j) = std::erfc(std::abs(t) / std::sqrt(2.0));
        }
    }
    return p;
}

}  // namespace

PValueMatrices coefficient_inference(const FitResult& fit, const MatrixSeries& series) {
    const ModelSpec& model = fit.model;
    model.validate();
    const int m = model.m(), n = model.n();
    const int k_regime = m * m + n * n - 1;  // one scale is not free
    PairData pd = PairData::build(series, model.kind != ModelKind::MAR);
    PValueMatrices out;

    const Matrix& A = model.regime1.left;
    const Matrix& B = model.regime1.right;
    switch (model.kind) {
        case ModelKind::MAR: {
            const MomentSet ms = pd.total();
            const double dof = ms.count * m * n - k_regime;
            const double ssq = regime_moment_ssq(ms, A, B, m, n);
            const double sigma2 = dof > 0 ? ssq / dof : kNaN;
            out.left1 = pvalue_block(A, contract_left(ms.G, B.transpose() * B, m, n), sigma2, dof);
            out.right1 =
                pvalue_block(B, contract_right(ms.G, A.transpose() * A, m, n), sigma2, dof);
            break;
        }
        case ModelKind::MTAR: {
            pd.build_split_index();
            const int k = pd.count_below(model.transition->c);
            const MomentSet ms1 = pd.below(k);
            const MomentSet ms2 = pd.at_or_above(k);
            const Matrix& C = model.regime2->left;
            const Matrix& D = model.regime2->right;
            const double dof1 = ms1.count * m * n - k_regime;
            const double dof2 = ms2.count * m * n - k_regime;
            const double s1 = dof1 > 0 ? regime_moment_ssq(ms1, A, B, m, n) / dof1 : kNaN;
            const double s2 = dof2 > 0 ? regime_moment_ssq(ms2, C, D, m, n) / dof2 : kNaN;
            out.left1 = pvalue_block(A, contract_left(ms1.G, B.transpose() * B, m, n), s1, dof1);
            out.right1 = pvalue_block(B, contract_right(ms1.G, A.transpose() * A, m, n), s1, dof1);
            out.left2 = pvalue_block(C, contract_left(ms2.G, D.transpose() * D, m, n), s2, dof2);
            out.right2 = pvalue_block(D, contract_right(ms2.G, C.transpose() * C, m, n), s2, dof2);
            break;
        }
        case ModelKind::MSTAR: {
            const Matrix& C = model.regime2->left;
            const Matrix& D = model.regime2->right;
            const MomentSet base = pd.total();
            const auto g = logistic_weights(pd.s, model.transition->gamma, model.transition->c);
            const MstarMoments mm = build_mstar_moments(pd, base, g);
            const double dof = base.count * m * n - 2.0 * k_regime;
            const double ssq = mstar_moment_ssq(mm, A, B, C, D);
            const double sigma2 = dof > 0 ? ssq / dof : kNaN;
            out.left1 =
                pvalue_block(A, contract_left(base.G, B.transpose() * B, m, n), sigma2, dof);
            out.right1 =
                pvalue_block(B, contract_right(base.G, A.transpose() * A, m, n), sigma2, dof);
            out.left2 = pvalue_block(C, contract_left(mm.Gg2, D.transpose() * D, m, n), sigma2, dof);
            out.right2 =
                pvalue_block(D, contract_right(mm.Gg2, C.transpose() * C, m, n), sigma2, dof);
            break;
        }
    }
    return out;
}

}  // namespace marts
