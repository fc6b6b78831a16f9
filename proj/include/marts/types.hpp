#ifndef MARTS_TYPES_HPP
#define MARTS_TYPES_HPP

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace marts {

// Dense column-major real matrices throughout. Column-major storage makes
// vec() a plain memory view of the entries.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension/shape violations on inputs.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid or non-stationary model specifications. CLI exit code 2.
struct ModelError : Error {
    using Error::Error;
};

// Rank/identification failures (singular Gram or design matrices,
// unidentified regimes). CLI exit code 3.
struct RankError : Error {
    using Error::Error;
};

// File and config parsing problems. CLI exit code 4.
struct IoError : Error {
    using Error::Error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) throw DimensionError(what + " contains non-finite entries");
}

/// An ordered sequence of T real m-by-n matrices plus an optional aligned
/// scalar transition series s_t. Labels are carried for file round-trips;
/// they default to r1..rm / c1..cn when absent.
struct MatrixSeries {
    std::vector<Matrix> frames;
    std::optional<std::vector<double>> transition;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;

    MatrixSeries() = default;
    explicit MatrixSeries(std::vector<Matrix> f,
                          std::optional<std::vector<double>> s = std::nullopt)
        : frames(std::move(f)), transition(std::move(s)) {
        validate();
    }

    int length() const { return static_cast<int>(frames.size()); }
    int rows() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
    int cols() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }

    void validate() const {
        if (frames.empty()) throw DimensionError("series has no frames");
        const auto m = frames.front().rows();
        const auto n = frames.front().cols();
        if (m <= 0 || n <= 0) throw DimensionError("series frames must be non-empty matrices");
        for (std::size_t t = 0; t < frames.size(); ++t) {
            if (frames[t].rows() != m || frames[t].cols() != n)
                throw DimensionError("frame " + std::to_string(t + 1) + " has inconsistent dimensions");
            require_finite(frames[t], "frame " + std::to_string(t + 1));
        }
        if (transition) {
            if (static_cast<int>(transition->size()) != length())
                throw DimensionError("transition series length does not match frame count");
            for (double s : *transition)
                if (!std::isfinite(s)) throw DimensionError("transition series contains non-finite values");
        }
    }
};

/// Matrix-normal distribution: vec(X - mean) has covariance sigma_c (x) sigma_r.
/// Covariance factors must be symmetric positive semi-definite; the all-zero
/// matrix is allowed and yields deterministic draws equal to the mean.
struct MatrixNormalSpec {
    Matrix mean;
    Matrix sigma_r;
    Matrix sigma_c;

    int rows() const { return static_cast<int>(mean.rows()); }
    int cols() const { return static_cast<int>(mean.cols()); }

    void validate() const;

    static MatrixNormalSpec iid(int m, int n, double variance = 1.0) {
        MatrixNormalSpec spec;
        spec.mean = Matrix::Zero(m, n);
        spec.sigma_r = Matrix::Identity(m, m) * variance;
        spec.sigma_c = Matrix::Identity(n, n);
        return spec;
    }
};

}  // namespace marts

#endif
