#ifndef MARTS_LINEARITY_HPP
#define MARTS_LINEARITY_HPP

#include "marts/types.hpp"

namespace marts {

enum class LmForm { Score, TR2 };

struct LmTestResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    LmForm form = LmForm::Score;
    int taylor_order = 0;
    // rank-condition diagnostics: eigmin/eigmax of X'X and of Z'(I - P_X)Z
    double eig_ratio_xx = 0.0;
    double eig_ratio_zz = 0.0;
};

struct TaylorRegressors {
    Matrix X;  // T' x mn, row t is vec(Y_{t-1})'
    Matrix Z;  // T' x mnK, block k holds vec(Y_{t-1})' s_t^k, k = 1..K
};

/// Design matrices for the Taylor-approximated alternative. K >= 1; the k = 0
/// term is absorbed into the restricted coefficient, so Z starts at k = 1.
TaylorRegressors build_taylor_regressors(const MatrixSeries& series, int K);

/// Score-form linearity statistic
/// tr{Sigma^{-1} E'Z [Z'(I - P_X)Z]^{-1} Z'E} with E the residuals of the
/// restricted vectorized regression and Sigma = E'E / T'. Asymptotically
/// chi-square with mn * mnK degrees of freedom under linearity.
LmTestResult lm_test_score(const MatrixSeries& series, int K = 3);

/// TR^2 form: regress the restricted residuals on [X, Z] and compare residual
/// Gram matrices, statistic T'(mn - tr{(E'E)^{-1} Xi'Xi}). Same degrees of
/// freedom and asymptotic distribution as the score form.
LmTestResult lm_test_tr2(const MatrixSeries& series, int K = 3);

/// Upper tail of the chi-square distribution via the regularized incomplete
/// gamma function.
double chi_square_upper_tail(double x, double dof);

}  // namespace marts

#endif
