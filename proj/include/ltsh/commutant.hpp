#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltsh/lubintate.hpp"

namespace ltsh {

/* Perfectoid commutant of the endomorphism action: series u with
   val_y(u) > 0 and u o [g] = [g] o u for all units g are exactly the
   u(Y) = [b](Y^(q^n)) with b a unit and n an integer. This module generates
   such elements, tests commutation, and inverts the classification. */

struct CommutantSolution {
    OKElem b;            // recovered multiplier, trusted to b_precision pi-digits
    int b_precision = 0; // digits certified by the cutoff, never the ring's full M
    int n = 0;
    // val_y(u - [b](Y^(q^n))) when finite; accepted solutions always carry
    // nullopt (vanishes below the cutoff)
    std::optional<Frac> residual;
};

struct CommuteCheck {
    // min over sampled g of val_y(u o [g] - [g] o u); nullopt = commutes at
    // this precision
    std::optional<Frac> residual;
    Frac cutoff{};
    // false when the cutoff cannot even expose u's first nonlinear
    // interaction (cutoff <= q * val_y(u)); treat nullopt with care then
    bool informative = true;
};

/* Bookkeeping of the order argument: f = f_n Y^n + ..., f' = g_j Y^j + ...,
   and w replaced by p-power iterates until w = Y + w_r Y^r + ... has
   r >= j + 1. If w^(m) o f = f o w holds below the cutoff, n must be 1. */
struct LubnarchReport {
    std::int64_t n = 0;
    std::int64_t j = 0;
    std::int64_t r = 0;
    int iter_pow = 0;      // w was iterated p^iter_pow times to arrange r > j
    bool arranged = false; // r >= j + 1 reached below the cutoff
    std::int64_t nontorsion_bound = 0;
    bool nontorsion_ok = false; // no iterate w^(ok) = Y below cutoff, k <= bound
    bool commutes = false;
    std::optional<std::int64_t> residual; // val_y(w^(m) o f - f o w) when finite
    bool invertible = false;    // n == 1
    bool counterexample = false; // commutes but n != 1; never accept silently
};

/* u(Y) = [b](Y^(q^n)) at the given cutoff (default: the group-law cutoff).
   For n < 0 the exponents land in Z[1/q]. Commutation is verified on two
   standard samples before returning. */
PerfSeries make_commuting(const LTData& lt, const OKElem& b, int n,
                          Frac cutoff = Frac(0));

/* Fixed unit sample set for commutation checks: small integers, principal
   units, and seeded random units. */
std::vector<OKElem> standard_g_samples(const OKRing& ring, int count = 5,
                                       std::uint64_t seed = 0xc0117ULL);

/* Compositions are evaluated in the integer-exponent world reached by
   clearing denominators with the p-power map and dividing out the common
   q-power of the exponents; both transports are exact. */
CommuteCheck check_commutation(const LTData& lt, const PerfSeries& u,
                               const std::vector<OKElem>& g_samples);

/* Invert the classification: n from val_y(u) = q^n, then b digit by digit,
   each pi-adic digit fixed by matching endomorphism coefficients up to
   degree q^m (distinct digit candidates first differ exactly there). Throws
   MathFail with a REJECT reason when u is not a commutant element at this
   precision: non-q-power valuation, exponent off the q^n lattice, no digit
   candidate matching, or a finite final residual. */
CommutantSolution solve_commutant(const LTData& lt, const PerfSeries& u);

/* Check the order bookkeeping above on concrete truncated series; w^(m)
   twists coefficients by Frobenius^m and leaves exponents alone. */
LubnarchReport check_lubnarch(const TruncSeries& w, const TruncSeries& f, int m,
                              std::int64_t nontorsion_bound = 12);

} // namespace ltsh
