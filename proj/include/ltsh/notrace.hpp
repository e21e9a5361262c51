#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltsh/lubintate.hpp"

namespace ltsh {

/* Three desk checks around the absence of an equivariant trace for d >= 2:
   the unit action has constant derivative, its fixed field at polynomial
   scale is the constants, and (1 - gamma)(Y^(q/p)) lands in the image of
   phi_q while Y^(q/p) itself does not. */

/* val_y(d[g]/dY - gbar) below the cutoff (default: lt.N); nullopt means the
   derivative is the constant gbar identically mod cutoff. That is the
   expected outcome for d >= 2; for d = 1 the logarithm derivative is not a
   unit and the residual is typically finite. */
std::optional<std::int64_t> check_derivative_const(const LTData& lt, const OKElem& g,
                                                   std::int64_t cutoff = 0);

struct FixedKernel {
    int D = 0;
    std::int64_t cutoff = 0;
    // reduced echelon basis of { f : deg f <= D, (gamma-1)f = 0 },
    // ordered by leading degree
    std::vector<TruncSeries> basis;
};

/* Kernel of (gamma - 1) on polynomials of degree <= D, gamma the action of g.
   Requires lt.N >= q*D + 1: a nonzero (gamma-1)Y^n with n <= D has valuation
   at most q*n, so at that cutoff the computed kernel is exact rather than a
   truncation artifact. Nontorsion precheck: g^(q-1) - 1 must be nonzero at
   precision. For nontorsion g the basis is exactly the constants. */
FixedKernel fixed_kernel(const LTData& lt, const OKElem& g, int D);

struct NoTraceReport {
    Frac cutoff{};
    Frac w_exponent{};                            // q/p
    std::vector<std::int64_t> v_support;          // support of (gamma-1)w
    std::vector<std::int64_t> gamma_dev_support;  // support of gamma(Y) - Y
    bool v_in_qZ = false;           // (gamma-1)w is a q-th power: support in qZ
    bool w_not_in_qZ = false;       // w itself is no q-th power: q does not divide q/p
    bool gamma_dev_in_pZ = false;   // gamma(Y) = Y + f(Y^p), the derivative dichotomy
};

/* The witness that no equivariant section of phi_q exists for d >= 2, with
   gamma = [1+pi]: (gamma-1)(Y^(q/p)) has support in qZ (so it lies in
   phi_q's image, k being perfect) while the exponent q/p of w is not
   divisible by q. Throws ConfigError for d = 1 and MathFail if any of the
   three support claims fails below the cutoff (default: q^2 + q). */
NoTraceReport no_trace_witness(const LTData& lt, Frac cutoff = Frac(0));

} // namespace ltsh
