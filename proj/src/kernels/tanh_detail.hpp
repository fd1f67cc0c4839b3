#pragma once

// Shared constants for the tanh kernel. tanh(x) is computed for ax = |x| as
//   r   = -2*ax, clamped below at -40 (tanh saturates to 1 well before that)
//   k   = round(r / ln 2)
//   rr  = r - k*ln2            (Cody-Waite two-step, |rr| <= ln2/2)
//   em1 = expm1(rr)            (degree-12 Taylor, Horner)
//   em1 = 2^k*(1 + em1) - 1    (skipped when k == 0, keeping small-x accuracy)
//   tanh(ax) = -em1 / (em1 + 2)
// The scalar and SIMD variants follow the same steps so their outputs differ
// only by FMA contraction.

namespace oneshot::kernels::tanh_detail {

inline constexpr double kInvLn2 = 1.4426950408889634073599246810019;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;  // upper bits of ln 2
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;  // ln 2 - kLn2Hi
inline constexpr double kSaturate = 20.0;                     // tanh(20) rounds to 1.0

// q(rr) = expm1(rr)/rr = 1 + rr/2! + rr^2/3! + ... + rr^11/12!
inline constexpr double kQ[12] = {
    1.0 / 479001600.0,  // 1/12!
    1.0 / 39916800.0,   // 1/11!
    1.0 / 3628800.0,    // 1/10!
    1.0 / 362880.0,     // 1/9!
    1.0 / 40320.0,      // 1/8!
    1.0 / 5040.0,       // 1/7!
    1.0 / 720.0,        // 1/6!
    1.0 / 120.0,        // 1/5!
    1.0 / 24.0,         // 1/4!
    1.0 / 6.0,          // 1/3!
    1.0 / 2.0,          // 1/2!
    1.0,                // 1/1!
};

}  // namespace oneshot::kernels::tanh_detail
