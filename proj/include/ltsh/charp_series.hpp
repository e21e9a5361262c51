#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ltsh/errors.hpp"
#include "ltsh/fraction.hpp"
#include "ltsh/okring.hpp"

namespace ltsh {

/* Truncated series over F_q in one variable, integer exponents >= 0.
   Terms with exponent >= cutoff are unknown; stored coefficients are exact.
   No zero coefficients are ever stored. */
struct TruncSeries {
    const FqCtx* F = nullptr;
    std::int64_t cutoff = 0;
    std::map<std::int64_t, FqElem> t;
};

/* Bivariate analogue with a total-degree cutoff: i + j < cutoff for every
   stored term. */
struct TruncSeries2 {
    const FqCtx* F = nullptr;
    std::int64_t cutoff = 0;
    std::map<std::pair<std::int64_t, std::int64_t>, FqElem> t;
};

/* Series with exponents in Z[1/p], >= 0, stored as exact reduced fractions
   whose denominators are p-powers. Houses perfected elements; the level
   (max denominator exponent) is computed, never stored. */
struct PerfSeries {
    const FqCtx* F = nullptr;
    Frac cutoff{0};
    std::map<Frac, FqElem> t;
};

/* Laurent wrapper: represents Y^shift * body where body has exponents >= 0.
   Only plumbing; every verified statement lives in the integer rings. */
struct LaurentSeries {
    Frac shift{0};
    PerfSeries body;
};

/* -------- factories and term access -------- */

TruncSeries ts_make(const FqCtx& F, std::int64_t cutoff);
TruncSeries ts_identity(const FqCtx& F, std::int64_t cutoff); // Y
TruncSeries ts_monomial(const FqCtx& F, std::int64_t e, FqElem c, std::int64_t cutoff);
void ts_set(TruncSeries& s, std::int64_t e, FqElem c); // drops zeros, enforces range
FqElem ts_get(const TruncSeries& s, std::int64_t e);

PerfSeries ps_make(const FqCtx& F, Frac cutoff);
PerfSeries ps_monomial(const FqCtx& F, Frac e, FqElem c, Frac cutoff);
void ps_set(PerfSeries& s, Frac e, FqElem c);
FqElem ps_get(const PerfSeries& s, Frac e);

TruncSeries2 s2_make(const FqCtx& F, std::int64_t cutoff);
void s2_set(TruncSeries2& s, std::int64_t i, std::int64_t j, FqElem c);
FqElem s2_get(const TruncSeries2& s, std::int64_t i, std::int64_t j);

/* -------- conversions -------- */

PerfSeries to_perf(const TruncSeries& s);
TruncSeries to_trunc(const PerfSeries& s); // throws unless all exponents are integers

/* -------- arithmetic --------
   Cutoff rules: add/sub keep min(N_a, N_b); mul keeps min(N_a, N_b)
   (exponents are >= 0 here, so the valuation correction is never negative). */

TruncSeries ts_add(const TruncSeries& a, const TruncSeries& b);
TruncSeries ts_sub(const TruncSeries& a, const TruncSeries& b);
TruncSeries ts_neg(const TruncSeries& a);
TruncSeries ts_mul(const TruncSeries& a, const TruncSeries& b);
TruncSeries ts_scale(const TruncSeries& a, FqElem c);
TruncSeries ts_truncate(const TruncSeries& a, std::int64_t cutoff);

PerfSeries ps_add(const PerfSeries& a, const PerfSeries& b);
PerfSeries ps_sub(const PerfSeries& a, const PerfSeries& b);
PerfSeries ps_mul(const PerfSeries& a, const PerfSeries& b);
PerfSeries ps_scale(const PerfSeries& a, FqElem c);
PerfSeries ps_truncate(const PerfSeries& a, Frac cutoff);

/* -------- valuations --------
   nullopt means "infinity at this cutoff": every known coefficient vanishes. */

std::optional<std::int64_t> ts_val(const TruncSeries& s);
std::optional<Frac> ps_val(const PerfSeries& s);

/* -------- composition --------
   f compose g; requires g without constant term. Result cutoff
   N' = min(N_f * val(g), N_g). Exploits three structures internally:
   p-power outer support (freshman's dream), common exponent factors of g,
   and near-identity g (Hasse-derivative expansion). */
TruncSeries ts_compose(const TruncSeries& f, const TruncSeries& g);

/* Reusable plan for repeated composition with a fixed near-identity g
   (g = Y + Delta, val(Delta) >= 2): precomputes dense powers of Delta once.
   apply(f) = f(g) truncated at min(N_f, plan cutoff). */
class NearIdentityPlan {
public:
    NearIdentityPlan(const TruncSeries& g, std::int64_t cutoff);
    TruncSeries apply(const TruncSeries& f) const;
    std::int64_t val_delta() const { return vdelta_; }
    std::int64_t cutoff() const { return cutoff_; }

private:
    const FqCtx* F_;
    std::int64_t cutoff_;
    std::int64_t vdelta_;
    std::int64_t jmax_;
    // pow_[j-1] = dense planes of Delta^j over exponents [0, cutoff)
    std::vector<std::vector<std::uint8_t>> pow_;
};

TruncSeries ts_derivative(const TruncSeries& f);

/* Compositional inverse: g with f(g) = g(f) = Y mod cutoff. Requires a
   nonzero linear coefficient and valuation exactly 1. The result is
   verified by composing back before it is returned. */
TruncSeries ts_comp_inverse(const TruncSeries& f);

/* phi^n termwise: exponents and cutoff scaled by p^n, coefficients raised
   to the p^n-th power (n < 0 uses perfectness). */
PerfSeries perf_frobenius(const PerfSeries& s, int n);
TruncSeries ts_frobenius(const TruncSeries& s, int n); // n >= 0 only

struct PerfLevel {
    int level = 0; // minimal l with all exponent denominators dividing p^l
    int n = 0;     // minimal n with level <= f_K * n
};
PerfLevel perf_level(const PerfSeries& s, int fK);

/* -------- equality at the common cutoff -------- */

bool ts_eq(const TruncSeries& a, const TruncSeries& b);
bool ps_eq(const PerfSeries& a, const PerfSeries& b);
bool s2_eq(const TruncSeries2& a, const TruncSeries2& b);

/* -------- bivariate checks -------- */

/* Verifies S(S(T,U),V) = S(T,S(U,V)) for every total degree < cutoff by a
   direct dense substitution; the two sides share one power table of S. */
bool s2_assoc_check(const TruncSeries2& S);
bool s2_is_symmetric(const TruncSeries2& S);

/* -------- Laurent plumbing -------- */

LaurentSeries l_make(Frac shift, PerfSeries body);
LaurentSeries l_add(const LaurentSeries& a, const LaurentSeries& b);
LaurentSeries l_mul(const LaurentSeries& a, const LaurentSeries& b);
std::optional<Frac> l_val(const LaurentSeries& a);

} // namespace ltsh
