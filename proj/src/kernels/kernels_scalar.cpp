#include <cmath>
#include <cstddef>

#include "oneshot/kernels.hpp"
#include "tanh_detail.hpp"

namespace oneshot::kernels::scalar {

void axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sum(std::size_t n, const double* x) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

void affine(std::size_t n, double a, double b, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

namespace {

double tanh_one(double x) {
    using namespace tanh_detail;
    double ax = std::abs(x);
    if (ax > kSaturate) ax = kSaturate;
    double r = -2.0 * ax;
    double k = std::round(r * kInvLn2);
    double rr = (r - k * kLn2Hi) - k * kLn2Lo;

    double q = kQ[0];
    for (int i = 1; i < 12; ++i) q = q * rr + kQ[i];
    double em1 = rr * q;
    if (k != 0.0) {
        // 2^k for integer-valued k in [-58, 0]; always a normal double.
        double p2k = std::ldexp(1.0, static_cast<int>(k));
        em1 = p2k * (1.0 + em1) - 1.0;
    }
    double t = -em1 / (em1 + 2.0);
    return std::signbit(x) ? -t : t;
}

}  // namespace

void tanh_vec(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = tanh_one(x[i]);
}

void tanh_backward(std::size_t n, const double* y, const double* dy, double* dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

double max_abs_diff(std::size_t n, const double* a, const double* b) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (d > m) m = d;
    }
    return m;
}

void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace oneshot::kernels::scalar
