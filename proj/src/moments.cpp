#include "moments.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "marts/tensor.hpp"

namespace marts::detail {

PairData PairData::build(const MatrixSeries& series, bool need_transition) {
    series.validate();
    const int T = series.length();
    if (T < 2) throw DimensionError("estimation needs at least two frames");
    PairData pd;
    pd.m = series.rows();
    pd.n = series.cols();
    pd.N = T - 1;
    const int d = pd.dim();
    pd.X.resize(pd.N, d);
    pd.Y.resize(pd.N, d);
    for (int t = 1; t < T; ++t) {
        pd.X.row(t - 1) = vec(series.frames[t - 1]).transpose();
        pd.Y.row(t - 1) = vec(series.frames[t]).transpose();
    }
    if (need_transition) {
        if (!series.transition)
            throw ModelError("estimator needs a transition series but none is present");
        pd.s.assign(series.transition->begin() + 1, series.transition->end());
    }
    return pd;
}

MomentSet PairData::total() const {
    MomentSet ms(dim());
    ms.G.noalias() = X.transpose() * X;
    ms.C.noalias() = Y.transpose() * X;
    ms.yy = Y.squaredNorm();
    ms.count = N;
    return ms;
}

MomentSet PairData::weighted(const std::vector<double>& w) const {
    MomentSet ms(dim());
    const Eigen::Map<const Vector> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    const Matrix xw = wv.asDiagonal() * X;
    ms.G.noalias() = X.transpose() * xw;
    ms.C.noalias() = Y.transpose() * xw;
    ms.yy = (wv.asDiagonal() * Y).cwiseProduct(Y).sum();
    ms.count = wv.sum();
    return ms;
}

void PairData::build_split_index() {
    if (has_split_index()) return;
    if (s.empty()) throw ModelError("threshold split needs a transition series");
    order_.resize(N);
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](int a, int b) { return s[a] < s[b]; });
    s_sorted.resize(N);
    for (int k = 0; k < N; ++k) s_sorted[k] = s[order_[k]];

    const int d = dim();
    cum_g_.assign(N + 1, Matrix::Zero(d, d));
    cum_c_.assign(N + 1, Matrix::Zero(d, d));
    cum_yy_.assign(N + 1, 0.0);
    suf_g_.assign(N + 1, Matrix::Zero(d, d));
    suf_c_.assign(N + 1, Matrix::Zero(d, d));
    suf_yy_.assign(N + 1, 0.0);
    for (int k = 0; k < N; ++k) {
        const int t = order_[k];
        cum_g_[k + 1] = cum_g_[k] + X.row(t).transpose() * X.row(t);
        cum_c_[k + 1] = cum_c_[k] + Y.row(t).transpose() * X.row(t);
        cum_yy_[k + 1] = cum_yy_[k] + Y.row(t).squaredNorm();
    }
    for (int k = N - 1; k >= 0; --k) {
        const int t = order_[k];
        suf_g_[k] = suf_g_[k + 1] + X.row(t).transpose() * X.row(t);
        suf_c_[k] = suf_c_[k + 1] + Y.row(t).transpose() * X.row(t);
        suf_yy_[k] = suf_yy_[k + 1] + Y.row(t).squaredNorm();
    }
}

int PairData::count_below(double c) const {
    return static_cast<int>(std::lower_bound(s_sorted.begin(), s_sorted.end(), c) -
                            s_sorted.begin());
}

MomentSet PairData::below(int k) const {
    MomentSet ms(dim());
    ms.G = cum_g_[k];
    ms.C = cum_c_[k];
    ms.yy = cum_yy_[k];
    ms.count = k;
    return ms;
}

MomentSet PairData::at_or_above(int k) const {
    MomentSet ms(dim());
    ms.G = suf_g_[k];
    ms.C = suf_c_[k];
    ms.yy = suf_yy_[k];
    ms.count = N - k;
    return ms;
}

Matrix contract_left(const Matrix& M, const Matrix& Q, int m, int n) {
    Matrix r = Matrix::Zero(m, m);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j) {
            const double q = Q(j, l);
            if (q == 0.0) continue;
            r.noalias() += q * M.block(j * m, l * m, m, m);
        }
    return r;
}

Matrix contract_right(const Matrix& M, const Matrix& P, int m, int n) {
    Matrix r = Matrix::Zero(n, n);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < m; ++k)
                for (int i = 0; i < m; ++i) acc += P(i, k) * M(i + j * m, k + l * m);
            r(j, l) = acc;
        }
    return r;
}

double sym_eig_ratio(const Matrix& gram) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (hi == 0.0) return 0.0;
    return eig.eigenvalues().minCoeff() / hi;
}

Matrix solve_gram(const Matrix& gram, const Matrix& rhs, const std::string& context) {
    constexpr double kRatioTol = 1e-13;
    Matrix g = gram;
    if (sym_eig_ratio(g) <= kRatioTol) {
        const double ridge = 1e-10 * g.trace() / static_cast<double>(g.rows());
        g += ridge * Matrix::Identity(g.rows(), g.cols());
        if (ridge <= 0.0 || sym_eig_ratio(g) <= kRatioTol)
            throw RankError("singular Gram matrix: " + context);
    }
    return g.ldlt().solve(rhs.transpose()).transpose();
}

std::pair<double, double> golden_min(const std::function<double(double)>& f, double lo, double hi,
                                     double tol) {
    if (!(hi > lo)) return {lo, f(lo)};
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    double best_x = f1 <= f2 ? x1 : x2;
    double best_f = std::min(f1, f2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
        if (f1 < best_f) best_f = f1, best_x = x1;
        if (f2 < best_f) best_f = f2, best_x = x2;
    }
    const double flo = f(lo), fhi = f(hi);
    if (flo < best_f) best_f = flo, best_x = lo;
    if (fhi < best_f) best_f = fhi, best_x = hi;
    return {best_x, best_f};
}

}  // namespace marts::detail
