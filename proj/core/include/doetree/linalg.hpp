// Dense matrix type and column-pivoted Householder least squares.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace doetree {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct LeastSquares {
    std::vector<double> coefficients;  // length cols; 0.0 for aliased columns
    std::vector<int> aliased;          // dropped column indices, ascending
    std::vector<double> xtx_inv_diag;  // diag of (X'X)^-1 over kept columns; NaN if aliased
    std::vector<double> residuals;     // y - X beta (unweighted scale)
    double rss = 0.0;                  // sum of squared (weighted) residuals
    int rank = 0;
};

// Minimize ||sqrt(w) (y - X b)|| with column pivoting; rank-deficient columns
// are detected at relative tolerance `tol` times the largest column norm and
// reported as aliased with coefficient zero. Pass an empty span for w to get
// ordinary least squares.
LeastSquares solve_least_squares(const Matrix& X, std::span<const double> y,
                                 std::span<const double> w = {}, double tol = 1e-10);

}  // namespace doetree
