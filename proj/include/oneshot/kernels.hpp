#pragma once

#include <cstddef>
#include <string>

namespace oneshot::kernels {

/// Vectorized inner loops used by the network and field code. Each entry has a
/// scalar reference implementation and, on x86 with AVX2+FMA, a SIMD variant
/// selected at runtime. All variants compute the same algorithm; scalar/SIMD
/// outputs agree to a few ulps (FMA contraction differs).
struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // sum of x[i] * y[i]
    double (*dot)(std::size_t n, const double* x, const double* y);
    // sum of x[i]
    double (*sum)(std::size_t n, const double* x);
    // y[i] = a * x[i] + b
    void (*affine)(std::size_t n, double a, double b, const double* x, double* y);
    // y[i] = tanh(x[i])
    void (*tanh_vec)(std::size_t n, const double* x, double* y);
    // dx[i] = dy[i] * (1 - y[i]^2), where y = tanh output
    void (*tanh_backward)(std::size_t n, const double* y, const double* dy, double* dx);
    // max over i of |a[i] - b[i]|
    double (*max_abs_diff)(std::size_t n, const double* a, const double* b);
    // One Adam step: updates moments m, v and parameters p in place.
    // bc1 = 1 - beta1^t, bc2 = 1 - beta2^t are the bias corrections.
    void (*adam_step)(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
                      double beta1, double beta2, double eps, double bc1, double bc2);
};

enum class Backend { Scalar, Avx2 };

/// Backend chosen at startup (AVX2 when the CPU supports it).
const Ops& active();
Backend active_backend();
std::string backend_name(Backend b);

/// Override the dispatch, e.g. to run equivalence tests. Throws ConfigError
/// if the requested backend is unsupported on this CPU.
void force_backend(Backend b);

bool avx2_supported();

/// Scalar reference implementations, always available.
namespace scalar {
void axpy(std::size_t n, double a, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
double sum(std::size_t n, const double* x);
void affine(std::size_t n, double a, double b, const double* x, double* y);
void tanh_vec(std::size_t n, const double* x, double* y);
void tanh_backward(std::size_t n, const double* y, const double* dy, double* dx);
double max_abs_diff(std::size_t n, const double* a, const double* b);
void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2);
}  // namespace scalar

/// AVX2 variants; only callable when avx2_supported().
namespace avx2 {
void axpy(std::size_t n, double a, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
double sum(std::size_t n, const double* x);
void affine(std::size_t n, double a, double b, const double* x, double* y);
void tanh_vec(std::size_t n, const double* x, double* y);
void tanh_backward(std::size_t n, const double* y, const double* dy, double* dx);
double max_abs_diff(std::size_t n, const double* a, const double* b);
void adam_step(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2);
}  // namespace avx2

}  // namespace oneshot::kernels
