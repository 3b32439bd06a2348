#pragma once

#include <cstddef>
#include <vector>

namespace cascade {

/// Row-major dense square matrix.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> data;

    explicit DenseMatrix(std::size_t size) : n(size), data(size * size, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

/// Solve A x = b by Gaussian elimination with partial pivoting.
/// Throws NumericalError when a pivot vanishes relative to the row scale.
std::vector<double> solve_dense(DenseMatrix A, std::vector<double> b);

/// 2x2 matrix, used for the fluctuation drift, diffusion rate and covariance.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    Mat2 transpose() const { return {a11, a21, a12, a22}; }
    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a21; }

    friend Mat2 operator+(const Mat2& a, const Mat2& b) {
        return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
    }
    friend Mat2 operator-(const Mat2& a, const Mat2& b) {
        return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
    }
    friend Mat2 operator*(double s, const Mat2& a) {
        return {s * a.a11, s * a.a12, s * a.a21, s * a.a22};
    }
    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
                a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
    }
};

/// Eigenvalues (min, max) of a symmetric 2x2 matrix (uses a12 only).
std::pair<double, double> symmetric_eigenvalues(const Mat2& m);

/// Square root of a symmetric PSD 2x2 matrix via the trace/determinant formula.
/// Eigenvalues in [-1e-12, 0) are treated as 0; anything more negative throws.
Mat2 sqrt_psd(const Mat2& m);

}  // namespace cascade
