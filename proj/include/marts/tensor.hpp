#ifndef MARTS_TENSOR_HPP
#define MARTS_TENSOR_HPP

#include <cstdint>
#include <random>

#include "marts/types.hpp"

namespace marts {

/// Seeded random generator owned by a single task; never shared across
/// threads. Normal draws go through one code path so simulation output is
/// reproducible for a given seed and binary.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    Matrix normal_matrix(int m, int n) {
        Matrix z(m, n);
        // column-major fill order, part of the determinism contract
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) z(i, j) = normal();
        return z;
    }

    Matrix uniform_matrix(int m, int n, double lo, double hi) {
        Matrix z(m, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) z(i, j) = uniform(lo, hi);
        return z;
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Column-stacking vectorization: result[i + j*m] = M(i, j).
Vector vec(const Matrix& m);

/// Inverse of vec. Throws DimensionError when v.size() != m*n.
Matrix unvec(const Vector& v, int m, int n);

/// Kronecker product: block (i, j) equals L(i, j) * R.
Matrix kron(const Matrix& l, const Matrix& r);

/// Largest eigenvalue modulus of a square matrix (general complex spectrum).
double spectral_radius(const Matrix& m);

double frobenius_norm(const Matrix& m);

/// Draw X = mean + Lr * Z * Lc' with Lr, Lc square roots of sigma_r, sigma_c
/// and Z i.i.d. standard normal, so vec(X - mean) has covariance
/// sigma_c (x) sigma_r without forming the mn-by-mn Kronecker matrix.
Matrix sample_matrix_normal(const MatrixNormalSpec& spec, Rng& rng);

/// Center and scale every (i, j) entry series to sample mean 0 and sample
/// standard deviation 1 (T-1 denominator). Constant entries map to zeros.
/// The transition series passes through unchanged.
MatrixSeries standardize_series(const MatrixSeries& series);

/// Moment estimate of the lag-h matrix autocovariance
/// (T-h)^{-1} sum_t Y_{t+h} (x) Y_t'. Requires 0 <= h < T.
Matrix sample_lag_cov(const MatrixSeries& series, int h);

namespace detail {
/// Square root factor L with L L' = sigma for a symmetric PSD matrix.
/// Cholesky when positive definite, symmetric eigenvalue square root
/// otherwise; rejects matrices with meaningfully negative eigenvalues.
Matrix psd_sqrt(const Matrix& sigma, const std::string& what);
}  // namespace detail

}  // namespace marts

#endif
