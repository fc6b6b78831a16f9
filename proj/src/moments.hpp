#ifndef MARTS_SRC_MOMENTS_HPP
#define MARTS_SRC_MOMENTS_HPP

#include <functional>
#include <utility>
#include <vector>

#include "marts/types.hpp"

namespace marts::detail {

// Second-moment summaries of the lag-1 regression pairs
// x_t = vec(Y_{t-1}), y_t = vec(Y_t). All alternating-least-squares updates,
// OLS fits and SSQ evaluations are contractions of these, so grid scans cost
// O(1) per candidate after a single pass over the sample.
struct MomentSet {
    Matrix G;      // sum w x x'
    Matrix C;      // sum w y x'
    double yy = 0.0;   // sum w |y|^2
    double count = 0.0;  // sum w

    MomentSet() = default;
    MomentSet(int d) : G(Matrix::Zero(d, d)), C(Matrix::Zero(d, d)) {}
};

struct PairData {
    int m = 0, n = 0, N = 0;
    Matrix X;  // N x mn, row t is vec(Y_{t-1})'
    Matrix Y;  // N x mn, row t is vec(Y_t)'
    std::vector<double> s;  // transition value per pair (empty when absent)

    static PairData build(const MatrixSeries& series, bool need_transition);

    int dim() const { return m * n; }
    MomentSet total() const;
    MomentSet weighted(const std::vector<double>& w) const;

    // Threshold scans: cumulative moments over pairs ordered by s. Regime-2
    // moments come from suffix accumulation (never total-minus-prefix, which
    // cancels catastrophically when one regime dominates the sample energy).
    void build_split_index();
    bool has_split_index() const { return !s_sorted.empty() || N == 0; }
    int count_below(double c) const;  // pairs with s < c
    MomentSet below(int k) const;     // first k pairs in s order
    MomentSet at_or_above(int k) const;  // remaining N-k pairs

  private:
    std::vector<int> order_;
    std::vector<double> s_sorted;
    std::vector<Matrix> cum_g_, cum_c_, suf_g_, suf_c_;
    std::vector<double> cum_yy_, suf_yy_;
};

// R(i,k) = sum_{j,l} Q(j,l) M(i + j*m, k + l*m); evaluates sums of the form
// sum_t w Y_t Q Y'_{t-1} (cross) or sum_t w Y_{t-1} Q Y'_{t-1} (gram) from a
// stored moment matrix M.
Matrix contract_left(const Matrix& M, const Matrix& Q, int m, int n);

// R(j,l) = sum_{i,k} P(i,k) M(i + j*m, k + l*m); the transposed-side analogue
// sum_t w Y'_t P Y_{t-1}.
Matrix contract_right(const Matrix& M, const Matrix& P, int m, int n);

inline double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

// Solves coeff * gram = rhs for coeff with a symmetric PSD gram. Singularity
// policy: one ridge retry of 1e-10 * trace/size, then a RankError carrying
// the caller's context string.
Matrix solve_gram(const Matrix& gram, const Matrix& rhs, const std::string& context);

// eigmin/eigmax of a symmetric matrix, 0 for an all-zero one.
double sym_eig_ratio(const Matrix& gram);

// Minimize f on [lo, hi] by golden-section search to the given coordinate
// tolerance. Returns the best point evaluated, never worse than both ends.
std::pair<double, double> golden_min(const std::function<double(double)>& f, double lo, double hi,
                                     double tol);

}  // namespace marts::detail

#endif
