#pragma once

#include <cmath>
#include <vector>

#include "mmflow/errors.hpp"

namespace mmflow {

// Dense row-major matrix, just large enough for the block solvers
// (N <= 128) and the Euclidean oracle (d <= 64).
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

inline std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
    std::vector<double> y(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        const double* row = &m.a[static_cast<std::size_t>(i) * m.cols];
        for (int j = 0; j < m.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

// Cholesky factorization of an SPD matrix; throws on loss of positivity.
class Cholesky {
  public:
    explicit Cholesky(const Matrix& m) : n_(m.rows), l_(m) {
        for (int j = 0; j < n_; ++j) {
            double d = l_(j, j);
            for (int k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
            if (!(d > 0.0)) throw Error("Cholesky: matrix is not positive definite");
            const double ljj = std::sqrt(d);
            l_(j, j) = ljj;
            for (int i = j + 1; i < n_; ++i) {
                double s = l_(i, j);
                for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
                l_(i, j) = s / ljj;
            }
        }
    }

    std::vector<double> solve(std::vector<double> b) const {
        for (int i = 0; i < n_; ++i) {
            for (int k = 0; k < i; ++k) b[i] -= l_(i, k) * b[k];
            b[i] /= l_(i, i);
        }
        for (int i = n_ - 1; i >= 0; --i) {
            for (int k = i + 1; k < n_; ++k) b[i] -= l_(k, i) * b[k];
            b[i] /= l_(i, i);
        }
        return b;
    }

    double diag_ratio() const {
        double lo = l_(0, 0), hi = l_(0, 0);
        for (int i = 1; i < n_; ++i) {
            lo = std::min(lo, l_(i, i));
            hi = std::max(hi, l_(i, i));
        }
        return (hi / lo) * (hi / lo);
    }

  private:
    int n_;
    Matrix l_;
};

// LU with partial pivoting; used for the dense blocks of the space-time
// Newton solver, where symmetry is not available.
class Lu {
  public:
    explicit Lu(Matrix m) : n_(m.rows), lu_(std::move(m)), piv_(n_) {
        for (int i = 0; i < n_; ++i) piv_[i] = i;
        for (int col = 0; col < n_; ++col) {
            int p = col;
            for (int i = col + 1; i < n_; ++i)
                if (std::abs(lu_(i, col)) > std::abs(lu_(p, col))) p = i;
            if (lu_(p, col) == 0.0) throw Error("Lu: singular matrix");
            if (p != col) {
                for (int j = 0; j < n_; ++j) std::swap(lu_(p, j), lu_(col, j));
                std::swap(piv_[p], piv_[col]);
            }
            const double inv = 1.0 / lu_(col, col);
            for (int i = col + 1; i < n_; ++i) {
                const double f = lu_(i, col) * inv;
                lu_(i, col) = f;
                for (int j = col + 1; j < n_; ++j) lu_(i, j) -= f * lu_(col, j);
            }
        }
    }

    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(n_);
        for (int i = 0; i < n_; ++i) x[i] = b[piv_[i]];
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < i; ++k) x[i] -= lu_(i, k) * x[k];
        for (int i = n_ - 1; i >= 0; --i) {
            for (int k = i + 1; k < n_; ++k) x[i] -= lu_(i, k) * x[k];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    // Solve A X = B column-block; B and the result are stored row-major.
    Matrix solve_matrix(const Matrix& b) const {
        Matrix x(n_, b.cols);
        std::vector<double> col(n_);
        for (int j = 0; j < b.cols; ++j) {
            for (int i = 0; i < n_; ++i) col[i] = b(i, j);
            auto sol = solve(col);
            for (int i = 0; i < n_; ++i) x(i, j) = sol[i];
        }
        return x;
    }

  private:
    int n_;
    Matrix lu_;
    std::vector<int> piv_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double f = a(i, k);
            if (f == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c(i, j) += f * b(k, j);
        }
    return c;
}

}  // namespace mmflow
