// Dense double-precision matrix/vector substrate shared by every other
// module. Row-major storage, no BLAS dependency; the inner kernels are
// written so the compiler can vectorize them without reassociating
// floating-point sums (summation order is fixed in source, which keeps
// results identical across runs and builds).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace prognos {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    double* row_ptr(std::size_t r) { return values.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return values.data() + r * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

// Dot product with four independent accumulator lanes. The lane sums are
// combined in a fixed order, so the result is reproducible bit-for-bit.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// y += alpha * x
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: dimension mismatch (" + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + " * " + std::to_string(b.rows) + "x" +
                                    std::to_string(b.cols) + ")");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            axpy(arow[k], b.row_ptr(k), orow, b.cols);
        }
    }
    return out;
}

// out = m * v for a column vector v (hot path of the LSTM cell)
inline void matvec(const Matrix& m, const double* v, double* out) {
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = dot(m.row_ptr(r), v, m.cols);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Activation { sigmoid, tanh };

inline Matrix activate(const Matrix& x, Activation kind) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.values.size(); ++i)
        out.values[i] = kind == Activation::sigmoid ? sigmoid(x.values[i]) : std::tanh(x.values[i]);
    return out;
}

// Linear-interpolation quantile: with sorted v[0..n-1] and h = q*(n-1),
// returns v[floor(h)] + frac(h) * (v[ceil(h)] - v[floor(h)]).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace prognos
