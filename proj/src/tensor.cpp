#include "marts/tensor.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace marts {

Vector vec(const Matrix& m) {
    // column-major storage: vec is a straight copy of the entry buffer
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, int m, int n) {
    if (m <= 0 || n <= 0) throw DimensionError("unvec: dimensions must be positive");
    if (v.size() != static_cast<Eigen::Index>(m) * n)
        throw DimensionError("unvec: vector of length " + std::to_string(v.size()) +
                             " cannot fill a " + std::to_string(m) + "x" + std::to_string(n) +
                             " matrix");
    return Eigen::Map<const Matrix>(v.data(), m, n);
}

Matrix kron(const Matrix& l, const Matrix& r) {
    Matrix out(l.rows() * r.rows(), l.cols() * r.cols());
    for (Eigen::Index j = 0; j < l.cols(); ++j)
        for (Eigen::Index i = 0; i < l.rows(); ++i)
            out.block(i * r.rows(), j * r.cols(), r.rows(), r.cols()) = l(i, j) * r;
    return out;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("spectral_radius: matrix must be square");
    require_finite(m, "spectral_radius input");
    if (m.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw Error("spectral_radius: eigenvalue iteration failed to converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double frobenius_norm(const Matrix& m) { return m.norm(); }

namespace detail {

Matrix psd_sqrt(const Matrix& sigma, const std::string& what) {
    if (sigma.rows() != sigma.cols()) throw DimensionError(what + " must be square");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
        throw ModelError(what + " is not symmetric");
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    // semi-definite case (zero covariance is legal): symmetric square root
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    if (eig.info() != Eigen::Success) throw Error(what + ": eigenvalue decomposition failed");
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    Vector lambda = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < -1e-10 * scale)
            throw ModelError(what + " is not positive semi-definite");
        lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
    }
    return eig.eigenvectors() * lambda.asDiagonal();
}

}  // namespace detail

void MatrixNormalSpec::validate() const {
    require_finite(mean, "matrix-normal mean");
    if (sigma_r.rows() != mean.rows()) throw DimensionError("sigma_r does not match mean rows");
    if (sigma_c.rows() != mean.cols()) throw DimensionError("sigma_c does not match mean cols");
    detail::psd_sqrt(sigma_r, "sigma_r");
    detail::psd_sqrt(sigma_c, "sigma_c");
}

Matrix sample_matrix_normal(const MatrixNormalSpec& spec, Rng& rng) {
    const Matrix lr = detail::psd_sqrt(spec.sigma_r, "sigma_r");
    const Matrix lc = detail::psd_sqrt(spec.sigma_c, "sigma_c");
    const Matrix z = rng.normal_matrix(spec.rows(), spec.cols());
    return spec.mean + lr * z * lc.transpose();
}

MatrixSeries standardize_series(const MatrixSeries& series) {
    series.validate();
    const int T = series.length();
    if (T < 2) throw DimensionError("standardize_series needs at least two frames");
    const int m = series.rows(), n = series.cols();

    Matrix mean = Matrix::Zero(m, n);
    for (const Matrix& f : series.frames) mean += f;
    mean /= static_cast<double>(T);

    Matrix ssd = Matrix::Zero(m, n);
    for (const Matrix& f : series.frames) ssd += (f - mean).cwiseAbs2();
    Matrix sd = (ssd / static_cast<double>(T - 1)).cwiseSqrt();

    MatrixSeries out = series;
    for (Matrix& f : out.frames) {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i)
                f(i, j) = sd(i, j) == 0.0 ? 0.0 : (f(i, j) - mean(i, j)) / sd(i, j);
    }
    return out;
}

Matrix sample_lag_cov(const MatrixSeries& series, int h) {
    series.validate();
    const int T = series.length();
    if (h < 0 || h >= T) throw DimensionError("sample_lag_cov: lag out of range");
    const int m = series.rows(), n = series.cols();
    Matrix acc = Matrix::Zero(m * n, n * m);
    for (int t = 0; t < T - h; ++t)
        acc += kron(series.frames[t + h], series.frames[t].transpose());
    return acc / static_cast<double>(T - h);
}

}  // namespace marts
