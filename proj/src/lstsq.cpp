#include "barb/lstsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "barb/errors.hpp"

namespace barb {

namespace {

// In-place Householder QR of A (m x n, m >= n); b is carried along as Q^T b.
// On return the upper triangle of A holds R.
void householder_qr(Matrix& A, std::vector<double>& b) {
    const std::size_t m = A.rows, n = A.cols;
    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) norm += A.at(i, k) * A.at(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = A.at(k, k) > 0.0 ? -norm : norm;
        // v = x - alpha*e1, applied as H = I - 2 vv^T / (v^T v)
        std::vector<double> v(m - k);
        v[0] = A.at(k, k) - alpha;
        for (std::size_t i = k + 1; i < m; ++i) v[i - k] = A.at(i, k);
        double vtv = 0.0;
        for (double w : v) vtv += w * w;
        if (vtv == 0.0) continue;
        A.at(k, k) = alpha;
        for (std::size_t i = k + 1; i < m; ++i) A.at(i, k) = 0.0;
        for (std::size_t j = k + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += v[i - k] * A.at(i, j);
            const double s = 2.0 * dot / vtv;
            for (std::size_t i = k; i < m; ++i) A.at(i, j) -= s * v[i - k];
        }
        double dot = 0.0;
        for (std::size_t i = k; i < m; ++i) dot += v[i - k] * b[i];
        const double s = 2.0 * dot / vtv;
        for (std::size_t i = k; i < m; ++i) b[i] -= s * v[i - k];
    }
}

// One-sided Jacobi SVD of square R: on return R's columns are U * diag(sigma)
// and V accumulates the right rotations.
void jacobi_svd(Matrix& R, Matrix& V, std::vector<double>& sigma) {
    const std::size_t n = R.cols;
    V = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) V.at(i, i) = 1.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    app += R.at(i, p) * R.at(i, p);
                    aqq += R.at(i, q) * R.at(i, q);
                    apq += R.at(i, p) * R.at(i, q);
                }
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double rp = R.at(i, p), rq = R.at(i, q);
                    R.at(i, p) = c * rp - s * rq;
                    R.at(i, q) = s * rp + c * rq;
                    const double vp = V.at(i, p), vq = V.at(i, q);
                    V.at(i, p) = c * vp - s * vq;
                    V.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
    sigma.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += R.at(i, j) * R.at(i, j);
        sigma[j] = std::sqrt(norm);
    }
}

}  // namespace

LstsqResult lstsq_min_norm(const Matrix& A, const std::vector<double>& b, double rcond) {
    if (A.rows == 0 || A.cols == 0) throw DimensionError("lstsq: empty system");
    if (b.size() != A.rows) throw DimensionError("lstsq: rhs length does not match rows");
    const std::size_t n = A.cols;
    // Padding with zero rows leaves the normal equations and the minimum-norm
    // solution unchanged and keeps the reduction square-or-tall.
    const std::size_t m = std::max(A.rows, n);
    Matrix work(m, n);
    std::vector<double> c(m, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < n; ++j) work.at(i, j) = A.at(i, j);
        c[i] = b[i];
    }
    householder_qr(work, c);

    Matrix R(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) R.at(i, j) = work.at(i, j);
    }
    Matrix V;
    std::vector<double> sigma;
    jacobi_svd(R, V, sigma);

    double smax = 0.0;
    for (double s : sigma) smax = std::max(smax, s);
    if (rcond < 0.0) {
        rcond = static_cast<double>(std::max(A.rows, n)) * std::numeric_limits<double>::epsilon();
    }
    const double cutoff = smax * rcond;

    LstsqResult res;
    res.x.assign(n, 0.0);
    double smin_kept = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (sigma[j] <= cutoff || sigma[j] == 0.0) continue;
        res.rank += 1;
        smin_kept = smin_kept == 0.0 ? sigma[j] : std::min(smin_kept, sigma[j]);
        // u_j^T (Q^T b) with u_j = R column j / sigma_j
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += R.at(i, j) * c[i];
        proj /= sigma[j] * sigma[j];
        for (std::size_t i = 0; i < n; ++i) res.x[i] += V.at(i, j) * proj;
    }
    res.cond = res.rank == 0 ? std::numeric_limits<double>::infinity() : smax / smin_kept;

    res.rss = 0.0;
    for (std::size_t i = 0; i < A.rows; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < n; ++j) fit += A.at(i, j) * res.x[j];
        const double d = b[i] - fit;
        res.rss += d * d;
    }
    return res;
}

}  // namespace barb
