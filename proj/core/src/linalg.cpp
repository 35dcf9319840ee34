#include "doetree/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "doetree/errors.hpp"

namespace doetree {

LeastSquares solve_least_squares(const Matrix& X, std::span<const double> y,
                                 std::span<const double> w, double tol) {
    const std::size_t n = X.rows;
    const std::size_t p = X.cols;
    if (n == 0) throw ValidationError("least squares: zero rows");
    if (y.size() != n) throw ValidationError("least squares: response length mismatch");
    if (!w.empty() && w.size() != n) throw ValidationError("least squares: weight length mismatch");

    // Working copies on the weighted scale.
    Matrix A(n, p);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = w.empty() ? 1.0 : std::sqrt(w[i]);
        for (std::size_t j = 0; j < p; ++j) A(i, j) = s * X(i, j);
        b[i] = s * y[i];
    }

    std::vector<std::size_t> perm(p);
    for (std::size_t j = 0; j < p; ++j) perm[j] = j;
    std::vector<double> colnorm2(p, 0.0);
    double max_norm = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += A(i, j) * A(i, j);
        colnorm2[j] = s;
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    const double thresh = (max_norm > 0.0) ? tol * max_norm : 0.0;

    LeastSquares out;
    out.coefficients.assign(p, 0.0);
    out.xtx_inv_diag.assign(p, std::numeric_limits<double>::quiet_NaN());

    std::size_t k_max = std::min(n, p);
    std::vector<double> beta_h(k_max, 0.0);  // Householder scalars
    std::size_t rank = 0;

    for (std::size_t k = 0; k < k_max; ++k) {
        // Pivot: largest remaining column norm (recomputed; sizes here are small).
        std::size_t best = k;
        double best_norm2 = -1.0;
        for (std::size_t j = k; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += A(i, j) * A(i, j);
            colnorm2[j] = s;
            if (s > best_norm2 + 1e-30) {
                best_norm2 = s;
                best = j;
            }
        }
        if (std::sqrt(std::max(best_norm2, 0.0)) <= thresh) break;
        if (best != k) {
            for (std::size_t i = 0; i < n; ++i) std::swap(A(i, k), A(i, best));
            std::swap(perm[k], perm[best]);
            std::swap(colnorm2[k], colnorm2[best]);
        }

        // Householder reflector for column k.
        double alpha = std::sqrt(colnorm2[k]);
        if (A(k, k) > 0.0) alpha = -alpha;
        double v0 = A(k, k) - alpha;
        A(k, k) = alpha;
        double vnorm2 = v0 * v0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm2 += A(i, k) * A(i, k);
        if (vnorm2 <= 0.0) break;
        beta_h[k] = 2.0 / vnorm2;

        // Apply to the trailing columns. The reflector's v is (v0, A(k+1..,k)).
        for (std::size_t j = k + 1; j < p; ++j) {
            double dot = v0 * A(k, j);
            for (std::size_t i = k + 1; i < n; ++i) dot += A(i, k) * A(i, j);
            double f = beta_h[k] * dot;
            A(k, j) -= f * v0;
            for (std::size_t i = k + 1; i < n; ++i) A(i, j) -= f * A(i, k);
        }
        // Apply to the right-hand side.
        {
            double dot = v0 * b[k];
            for (std::size_t i = k + 1; i < n; ++i) dot += A(i, k) * b[i];
            double f = beta_h[k] * dot;
            b[k] -= f * v0;
            for (std::size_t i = k + 1; i < n; ++i) b[i] -= f * A(i, k);
        }
        // Store v0 below the diagonal is not needed further; keep R's diagonal in A(k,k).
        A(k, k) = alpha;
        // Stash v0 in a scratch spot: reuse colnorm2 slot for v0 of this column.
        colnorm2[k] = v0;
        ++rank;
    }

    if (rank == 0) throw ValidationError("least squares: all columns aliased or empty design");
    out.rank = static_cast<int>(rank);
    for (std::size_t j = rank; j < p; ++j) out.aliased.push_back(static_cast<int>(perm[j]));
    std::sort(out.aliased.begin(), out.aliased.end());

    // Back-substitute R z = Q'b on the kept columns.
    std::vector<double> z(rank, 0.0);
    for (std::size_t i = rank; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < rank; ++j) s -= A(i, j) * z[j];
        z[i] = s / A(i, i);
    }
    for (std::size_t j = 0; j < rank; ++j) out.coefficients[perm[j]] = z[j];

    // diag((X'X)^-1) = row norms of R^{-1}.
    Matrix rinv(rank, rank);
    for (std::size_t j = rank; j-- > 0;) {
        rinv(j, j) = 1.0 / A(j, j);
        for (std::size_t i = j; i-- > 0;) {
            double s = 0.0;
            for (std::size_t k = i + 1; k <= j; ++k) s += A(i, k) * rinv(k, j);
            rinv(i, j) = -s / A(i, i);
        }
    }
    for (std::size_t i = 0; i < rank; ++i) {
        double s = 0.0;
        for (std::size_t j = i; j < rank; ++j) s += rinv(i, j) * rinv(i, j);
        out.xtx_inv_diag[perm[i]] = s;
    }

    // Residuals on the original scale; RSS on the weighted scale.
    out.residuals.assign(n, 0.0);
    out.rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += X(i, j) * out.coefficients[j];
        double r = y[i] - fit;
        out.residuals[i] = r;
        double wi = w.empty() ? 1.0 : w[i];
        out.rss += wi * r * r;
    }
    return out;
}

}  // namespace doetree
