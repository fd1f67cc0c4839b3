#include "oneshot/kernels.hpp"

#include "oneshot/errors.hpp"

namespace oneshot::kernels {

namespace {

constexpr Ops kScalarOps{
    scalar::axpy, scalar::dot,          scalar::sum,          scalar::affine,
    scalar::tanh_vec, scalar::tanh_backward, scalar::max_abs_diff, scalar::adam_step,
};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Ops kAvx2Ops{
    avx2::axpy, avx2::dot,          avx2::sum,          avx2::affine,
    avx2::tanh_vec, avx2::tanh_backward, avx2::max_abs_diff, avx2::adam_step,
};
#endif

struct Dispatch {
    const Ops* ops;
    Backend backend;
    Dispatch() {
        if (avx2_supported()) {
#if defined(__x86_64__) || defined(_M_X64)
            ops = &kAvx2Ops;
            backend = Backend::Avx2;
            return;
#endif
        }
        ops = &kScalarOps;
        backend = Backend::Scalar;
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

bool avx2_supported() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops& active() { return *dispatch().ops; }

Backend active_backend() { return dispatch().backend; }

std::string backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
    if (b == Backend::Scalar) {
        dispatch().ops = &kScalarOps;
        dispatch().backend = Backend::Scalar;
        return;
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) {
        dispatch().ops = &kAvx2Ops;
        dispatch().backend = Backend::Avx2;
        return;
    }
#endif
    throw ConfigError("AVX2 backend not supported on this CPU");
}

#if !(defined(__x86_64__) || defined(_M_X64))
// Stubs so the declarations link on non-x86 targets; never dispatched to.
namespace avx2 {
namespace {
[[noreturn]] void unavailable() { throw ConfigError("AVX2 kernels unavailable on this platform"); }
}  // namespace
void axpy(std::size_t, double, const double*, double*) { unavailable(); }
double dot(std::size_t, const double*, const double*) { unavailable(); }
double sum(std::size_t, const double*) { unavailable(); }
void affine(std::size_t, double, double, const double*, double*) { unavailable(); }
void tanh_vec(std::size_t, const double*, double*) { unavailable(); }
void tanh_backward(std::size_t, const double*, const double*, double*) { unavailable(); }
double max_abs_diff(std::size_t, const double*, const double*) { unavailable(); }
void adam_step(std::size_t, double*, const double*, double*, double*, double, double, double,
               double, double, double) {
    unavailable();
}
}  // namespace avx2
#endif

}  // namespace oneshot::kernels
