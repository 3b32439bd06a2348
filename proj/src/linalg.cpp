#include "cascade/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "cascade/model.hpp"

namespace cascade {

std::vector<double> solve_dense(DenseMatrix A, std::vector<double> b) {
    const std::size_t n = A.n;
    if (b.size() != n) throw ValidationError("solve_dense: dimension mismatch");

    std::vector<double> scale(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale[i] = std::max(scale[i], std::abs(A(i, j)));

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(A(i, col)) > std::abs(A(pivot, col))) pivot = i;
        if (!(std::abs(A(pivot, col)) > 1e-14 * std::max(scale[pivot], 1e-300))) {
            std::ostringstream msg;
            msg << "singular linear system (pivot " << A(pivot, col) << " in column " << col << ")";
            throw NumericalError(msg.str());
        }
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(col, j), A(pivot, j));
            std::swap(b[col], b[pivot]);
            std::swap(scale[col], scale[pivot]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = A(i, col) / A(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) A(i, j) -= f * A(col, j);
            b[i] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= A(ii, j) * x[j];
        x[ii] = s / A(ii, ii);
    }
    return x;
}

std::pair<double, double> symmetric_eigenvalues(const Mat2& m) {
    const double mid = 0.5 * (m.a11 + m.a22);
    const double half_gap = std::hypot(0.5 * (m.a11 - m.a22), m.a12);
    return {mid - half_gap, mid + half_gap};
}

Mat2 sqrt_psd(const Mat2& m) {
    const auto [lo, hi] = symmetric_eigenvalues(m);
    if (lo < -1e-12) {
        std::ostringstream msg;
        msg << "matrix is not positive semidefinite (eigenvalue " << lo << ")";
        throw NumericalError(msg.str());
    }
    if (hi <= 0.0) return {};
    if (lo < 0.0) {
        // Clamp the small negative eigenvalue: sqrt(hi) v v^T with v the top eigenvector.
        double vx = m.a12, vy = hi - m.a11;
        if (std::hypot(vx, vy) < std::hypot(hi - m.a22, m.a12)) {
            vx = hi - m.a22;
            vy = m.a12;
        }
        const double norm = std::hypot(vx, vy);
        if (norm == 0.0) return {std::sqrt(hi), 0.0, 0.0, std::sqrt(hi)};
        vx /= norm;
        vy /= norm;
        const double s = std::sqrt(hi);
        return {s * vx * vx, s * vx * vy, s * vx * vy, s * vy * vy};
    }
    const double s = std::sqrt(lo * hi);
    const double t = std::sqrt(m.a11 + m.a22 + 2.0 * s);
    return {(m.a11 + s) / t, m.a12 / t, m.a12 / t, (m.a22 + s) / t};
}

}  // namespace cascade
