#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mmflow/errors.hpp"

namespace mmflow {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 complex FFT. Grids in this project are always a power
// of two (SurfaceBackground enforces it), so no other kernel is needed.
inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const int n = static_cast<int>(a.size());
    if (!is_power_of_two(n)) throw Error("fft: length must be a power of two");
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 1.0 : -1.0) * kTwoPi / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& z : a) z /= static_cast<double>(n);
    }
}

inline std::vector<std::complex<double>> fft_forward(const std::vector<double>& f) {
    std::vector<std::complex<double>> a(f.begin(), f.end());
    fft(a, false);
    return a;
}

// Signed wavenumber of FFT bin k on an N-point grid.
inline int signed_mode(int k, int n) { return k <= n / 2 ? k : k - n; }

// m-th spectral derivative of a periodic grid function on [0,1).
inline std::vector<double> spectral_derivative(const std::vector<double>& f, int order) {
    const int n = static_cast<int>(f.size());
    auto a = fft_forward(f);
    for (int k = 0; k < n; ++k) {
        const int km = signed_mode(k, n);
        std::complex<double> mult(1.0, 0.0);
        if (k == n / 2) {
            // Nyquist: representable only for even derivative orders.
            if (order % 2 != 0) {
                a[k] = 0.0;
                continue;
            }
            double m2 = 1.0;
            for (int j = 0; j < order / 2; ++j) m2 *= -(kTwoPi * km) * (kTwoPi * km);
            a[k] *= m2;
            continue;
        }
        const std::complex<double> ik(0.0, kTwoPi * km);
        for (int j = 0; j < order; ++j) mult *= ik;
        a[k] *= mult;
    }
    fft(a, true);
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = a[k].real();
    return out;
}

// ∫₀¹ f dx by the rectangle rule (spectrally exact for band-limited f).
inline double integrate(const std::vector<double>& f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s / static_cast<double>(f.size());
}

inline double integrate_product(const std::vector<double>& f, const std::vector<double>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return s / static_cast<double>(f.size());
}

inline double integrate_product(const std::vector<double>& f, const std::vector<double>& g,
                                const std::vector<double>& h) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i] * h[i];
    return s / static_cast<double>(f.size());
}

inline double sup_norm(const std::vector<double>& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

inline std::vector<double> grid_points(int n) {
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[k] = static_cast<double>(k) / n;
    return x;
}

// Mean-zero periodic solution of u'' = f (f must have zero mean).
inline std::vector<double> solve_periodic_poisson(const std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    auto a = fft_forward(f);
    a[0] = 0.0;
    for (int k = 1; k < n; ++k) {
        const int km = signed_mode(k, n);
        a[k] /= -(kTwoPi * km) * (kTwoPi * km);
    }
    fft(a, true);
    std::vector<double> u(n);
    for (int k = 0; k < n; ++k) u[k] = a[k].real();
    return u;
}

// True when the top third of the spectrum is below rel_tol of the largest
// coefficient; guards the accuracy of high-order spectral differentiation.
inline bool band_limited(const std::vector<double>& f, double rel_tol = 1e-10) {
    const int n = static_cast<int>(f.size());
    auto a = fft_forward(f);
    double largest = 0.0;
    for (const auto& z : a) largest = std::max(largest, std::abs(z));
    if (largest == 0.0) return true;
    const int cut = n / 2 - n / 6;  // |signed mode| >= N/2 - N/6 is "top third"
    double tail = 0.0;
    for (int k = 1; k < n; ++k) {
        if (std::abs(signed_mode(k, n)) >= cut) tail = std::max(tail, std::abs(a[k]));
    }
    return tail <= rel_tol * largest;
}

// Trigonometric interpolant of a real periodic grid function, with value
// and first two derivatives at arbitrary points. Evaluation uses the
// incremental angle-addition recurrence, one pass over N/2 modes.
class TrigInterp {
  public:
    TrigInterp() = default;

    explicit TrigInterp(const std::vector<double>& values) : n_(static_cast<int>(values.size())) {
        auto a = fft_forward(values);
        const int half = n_ / 2;
        cos_.assign(half + 1, 0.0);
        sin_.assign(half + 1, 0.0);
        cos_[0] = a[0].real() / n_;
        for (int k = 1; k < half; ++k) {
            cos_[k] = 2.0 * a[k].real() / n_;
            sin_[k] = -2.0 * a[k].imag() / n_;
        }
        cos_[half] = a[half].real() / n_;
    }

    struct Jet {
        double value;
        double d1;
        double d2;
    };

    Jet eval_jet(double x) const {
        const int half = n_ / 2;
        const double c1 = std::cos(kTwoPi * x), s1 = std::sin(kTwoPi * x);
        double ck = 1.0, sk = 0.0;  // cos/sin of 2*pi*k*x, starting at k=0
        Jet out{cos_[0], 0.0, 0.0};
        for (int k = 1; k <= half; ++k) {
            const double cn = ck * c1 - sk * s1;
            const double sn = sk * c1 + ck * s1;
            ck = cn;
            sk = sn;
            const double w = kTwoPi * k;
            const double term = cos_[k] * ck + sin_[k] * sk;
            const double dterm = w * (-cos_[k] * sk + sin_[k] * ck);
            out.value += term;
            out.d1 += (k == half) ? 0.0 : dterm;  // Nyquist sine is not on the grid
            out.d2 += -w * w * term;
        }
        return out;
    }

    double eval(double x) const { return eval_jet(x).value; }

  private:
    int n_ = 0;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

}  // namespace mmflow
