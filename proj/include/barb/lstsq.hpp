#pragma once

#include <cstddef>
#include <vector>

namespace barb {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

struct LstsqResult {
    std::vector<double> x;   // minimum-norm solution
    double rss = 0.0;        // ||Ax - b||^2 against the original system
    double cond = 0.0;       // ratio of largest to smallest retained singular value
    std::size_t rank = 0;
};

// Minimum-norm least squares via Householder QR followed by a one-sided
// Jacobi SVD of the triangular factor. Singular values below
// rcond * sigma_max are treated as zero; rcond < 0 selects a machine-epsilon
// based default. Handles rank-deficient and underdetermined systems.
LstsqResult lstsq_min_norm(const Matrix& A, const std::vector<double>& b, double rcond = -1.0);

}  // namespace barb
