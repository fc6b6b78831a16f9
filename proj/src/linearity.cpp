#include "marts/linearity.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "marts/tensor.hpp"
#include "moments.hpp"

namespace marts {

using detail::PairData;
using detail::sym_eig_ratio;

double chi_square_upper_tail(double x, double dof) {
    if (!(dof > 0.0)) throw Error("chi-square needs positive degrees of freedom");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

TaylorRegressors build_taylor_regressors(const MatrixSeries& series, int K) {
    if (K < 1) throw ModelError("Taylor order K must be >= 1");
    const PairData pd = PairData::build(series, true);
    const int d = pd.dim();
    TaylorRegressors out;
    out.X = pd.X;
    out.Z.resize(pd.N, d * K);
    for (int t = 0; t < pd.N; ++t) {
        double sk = 1.0;
        for (int k = 1; k <= K; ++k) {
            sk *= pd.s[t];
            out.Z.block(t, (k - 1) * d, 1, d) = pd.X.row(t) * sk;
        }
    }
    return out;
}

namespace {

constexpr double kRankTol = 1e-10;  // min/max eigenvalue ratio threshold

struct LmWork {
    Matrix resid;    // restricted residuals, T' x mn
    Matrix z;        // T' x mnK
    Matrix x;        // T' x mn
    Matrix zmz;      // Z'(I - P_X)Z
    double ratio_xx = 0.0;
    double ratio_zz = 0.0;
    int N = 0;
    int dof = 0;
};

LmWork lm_prepare(const MatrixSeries& series, int K) {
    const PairData pd = PairData::build(series, true);
    const TaylorRegressors tr = build_taylor_regressors(series, K);
    const int d = pd.dim();

    LmWork w;
    w.x = tr.X;
    w.z = tr.Z;
    w.N = pd.N;
    w.dof = d * d * K;

    const Matrix xx = w.x.transpose() * w.x;
    w.ratio_xx = sym_eig_ratio(xx);
    if (w.ratio_xx <= kRankTol)
        throw RankError("rank condition failed: X'X is not positive definite");

    const Matrix xz = w.x.transpose() * w.z;
    w.zmz = w.z.transpose() * w.z - xz.transpose() * xx.ldlt().solve(xz);
    w.ratio_zz = sym_eig_ratio(w.zmz);
    if (w.ratio_zz <= kRankTol)
        throw RankError("rank condition failed: Z'(I - P_X)Z is not positive definite");

    const Matrix phi0 = xx.ldlt().solve(w.x.transpose() * pd.Y);  // mn x mn, transposed slope
    w.resid = pd.Y - w.x * phi0;
    return w;
}

}  // namespace

LmTestResult lm_test_score(const MatrixSeries& series, int K) {
    LmWork w = lm_prepare(series, K);
    const Matrix sigma = w.resid.transpose() * w.resid / static_cast<double>(w.N);
    if (sym_eig_ratio(sigma) <= kRankTol)
        throw RankError("rank condition failed: residual covariance is singular");
    const Matrix score = w.resid.transpose() * w.z;  // mn x mnK
    const Matrix inner = w.zmz.ldlt().solve(score.transpose());  // mnK x mn
    const double stat = std::max((sigma.ldlt().solve(score * inner)).trace(), 0.0);

    LmTestResult res;
    res.statistic = stat;
    res.dof = w.dof;
    res.p_value = chi_square_upper_tail(stat, w.dof);
    res.form = LmForm::Score;
    res.taylor_order = K;
    res.eig_ratio_xx = w.ratio_xx;
    res.eig_ratio_zz = w.ratio_zz;
    return res;
}

LmTestResult lm_test_tr2(const MatrixSeries& series, int K) {
    LmWork w = lm_prepare(series, K);
    const int d = static_cast<int>(w.x.cols());
    const Matrix ee = w.resid.transpose() * w.resid;
    if (sym_eig_ratio(ee) <= kRankTol)
        throw RankError("rank condition failed: residual Gram is singular");

    Matrix f(w.N, w.x.cols() + w.z.cols());
    f.leftCols(w.x.cols()) = w.x;
    f.rightCols(w.z.cols()) = w.z;
    const Matrix ff = f.transpose() * f;
    const Matrix xi = w.resid - f * ff.ldlt().solve(f.transpose() * w.resid);
    const Matrix xixi = xi.transpose() * xi;
    const double stat =
        std::max(static_cast<double>(w.N) * (d - (ee.ldlt().solve(xixi)).trace()), 0.0);

    LmTestResult res;
    res.statistic = stat;
    res.dof = w.dof;
    res.p_value = chi_square_upper_tail(stat, w.dof);
    res.form = LmForm::TR2;
    res.taylor_order = K;
    res.eig_ratio_xx = w.ratio_xx;
    res.eig_ratio_zz = w.ratio_zz;
    return res;
}

}  // namespace marts
