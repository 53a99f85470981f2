#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mmflow/linalg.hpp"
#include "mmflow/resolvent_config.hpp"
#include "mmflow/rng.hpp"

namespace mmflow {

// f(x) = 1/2 x^T A x - b^T x + c with A symmetric positive semidefinite.
// Exactly solvable proximal steps make this the ground-truth oracle for
// the minimizing-movement engine.
struct QuadraticFunctional {
    Matrix A;
    std::vector<double> b;
    double c = 0.0;

    QuadraticFunctional(Matrix a_in, std::vector<double> b_in, double c_in = 0.0)
        : A(std::move(a_in)), b(std::move(b_in)), c(c_in) {
        validate();
    }

    static QuadraticFunctional scalar(double a, double b1 = 0.0, double c1 = 0.0) {
        Matrix m(1, 1);
        m(0, 0) = a;
        return QuadraticFunctional(std::move(m), {b1}, c1);
    }

    int dim() const { return A.rows; }

    double value(const std::vector<double>& x) const {
        const auto ax = matvec(A, x);
        double v = c;
        for (int i = 0; i < dim(); ++i) v += 0.5 * x[i] * ax[i] - b[i] * x[i];
        return v;
    }

    std::vector<double> gradient(const std::vector<double>& x) const {
        auto g = matvec(A, x);
        for (int i = 0; i < dim(); ++i) g[i] -= b[i];
        return g;
    }

    // Largest eigenvalue estimate by a few fixed power iterations; enough
    // for the conditioning report.
    double lambda_max_estimate() const {
        std::vector<double> v(dim(), 1.0);
        double lam = 0.0;
        for (int it = 0; it < 30; ++it) {
            auto w = matvec(A, v);
            double nrm = 0.0;
            for (double t : w) nrm += t * t;
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) return 0.0;
            for (auto& t : w) t /= nrm;
            lam = nrm;
            v = std::move(w);
        }
        return lam;
    }

  private:
    void validate() const {
        if (A.rows != A.cols || static_cast<int>(b.size()) != A.rows)
            throw ConfigError("QuadraticFunctional: dimension mismatch");
        double scale = 1.0;
        for (int i = 0; i < A.rows; ++i) scale = std::max(scale, std::abs(A(i, i)));
        for (int i = 0; i < A.rows; ++i)
            for (int j = i + 1; j < A.cols; ++j)
                if (std::abs(A(i, j) - A(j, i)) > 1e-12 * scale)
                    throw ConfigError("QuadraticFunctional: A is not symmetric");
        // PSD check: Cholesky of A + eps I must succeed.
        Matrix shifted = A;
        for (int i = 0; i < A.rows; ++i) shifted(i, i) += 1e-10 * scale;
        try {
            Cholesky chol(shifted);
        } catch (const Error&) {
            throw ConfigError("QuadraticFunctional: A has a negative eigenvalue");
        }
    }
};

// argmin of ||y - x||^2 / (2 tau) + f(y), i.e. (I + tau A)^{-1}(x + tau b).
inline std::vector<double> euclid_resolvent(const QuadraticFunctional& f,
                                            const std::vector<double>& x, double tau) {
    if (!(tau > 0.0)) throw ConfigError("euclid_resolvent: tau must be positive");
    const double cond = 1.0 + tau * f.lambda_max_estimate();
    if (cond > 1e12) throw Error("euclid_resolvent: I + tau A condition estimate above 1e12");
    Matrix m = f.A;
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) m(i, j) *= tau;
        m(i, i) += 1.0;
    }
    std::vector<double> rhs = x;
    for (int i = 0; i < f.dim(); ++i) rhs[i] += tau * f.b[i];
    return Cholesky(m).solve(std::move(rhs));
}

// W_{t/n}^n(x0). With b != 0 and A invertible the iteration runs in the
// minimizer-shifted coordinate so each step is the exact closed form.
inline std::vector<double> euclid_mayer_iterate(const QuadraticFunctional& f,
                                                const std::vector<double>& x0, double t, int n) {
    if (t < 0.0 || n < 1) throw ConfigError("euclid_mayer_iterate: need t >= 0, n >= 1");
    if (t == 0.0) return x0;
    const double h = t / n;
    Matrix m = f.A;
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) m(i, j) *= h;
        m(i, i) += 1.0;
    }
    const Cholesky step(m);

    bool use_shift = false;
    std::vector<double> shift(f.dim(), 0.0);
    double bnorm = 0.0;
    for (double v : f.b) bnorm += v * v;
    if (bnorm > 0.0) {
        try {
            shift = Cholesky(f.A).solve(f.b);
            use_shift = true;
        } catch (const Error&) {
            use_shift = false;  // singular A: fall back to per-step resolvent
        }
    }

    std::vector<double> y = x0;
    if (use_shift) {
        for (int i = 0; i < f.dim(); ++i) y[i] -= shift[i];
        for (int k = 0; k < n; ++k) y = step.solve(std::move(y));
        for (int i = 0; i < f.dim(); ++i) y[i] += shift[i];
    } else {
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < f.dim(); ++i) y[i] += h * f.b[i];
            y = step.solve(std::move(y));
        }
    }
    return y;
}

// SpaceContract instantiation: flat R^d with a quadratic functional.
class EuclideanSpace {
  public:
    struct Point {
        std::vector<double> x;
        long id = -1;
    };

    explicit EuclideanSpace(QuadraticFunctional f) : f_(std::move(f)) {}

    const QuadraticFunctional& quadratic() const { return f_; }

    double distance(const Point& p, const Point& q) const {
        double s = 0.0;
        for (std::size_t i = 0; i < p.x.size(); ++i) {
            const double d = p.x[i] - q.x[i];
            s += d * d;
        }
        return std::sqrt(s);
    }

    Point geodesic(const Point& p, const Point& q, double s) const {
        Point g;
        g.x.resize(p.x.size());
        for (std::size_t i = 0; i < p.x.size(); ++i) g.x[i] = (1.0 - s) * p.x[i] + s * q.x[i];
        return g;
    }

    double functional(const Point& p) const { return f_.value(p.x); }
    std::string_view functional_name() const { return "quadratic"; }

    Point make_point(std::vector<double> x, long id = -1) const { return Point{std::move(x), id}; }

    Point random_point(Rng& rng, double radius = 1.0) const {
        std::vector<double> x(f_.dim());
        for (auto& v : x) v = rng.uniform(-radius, radius);
        return Point{std::move(x), -1};
    }

    ProximalResult<Point> proximal_minimize(const Point& base, const ResolventConfig& cfg) const {
        ProximalResult<Point> out;
        out.point = Point{euclid_resolvent(f_, base.x, cfg.tau), base.id};
        out.step_distance = distance(base, out.point);
        out.objective = out.step_distance * out.step_distance / (2.0 * cfg.tau) +
                        f_.value(out.point.x);
        auto g = f_.gradient(out.point.x);
        double r = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double ri = (out.point.x[i] - base.x[i]) / cfg.tau + g[i];
            r += ri * ri;
        }
        out.el_residual = std::sqrt(r);
        out.grad_norm = out.el_residual;
        out.iterations = 1;
        out.certified = true;
        return out;
    }

    double linear_charge(const Point&) const { return 0.0; }

    Point perturb(const Point& p, Rng& rng, double scale) const {
        Point q = p;
        for (auto& v : q.x) v += rng.uniform(-scale, scale);
        return q;
    }

  private:
    QuadraticFunctional f_;
};

}  // namespace mmflow
