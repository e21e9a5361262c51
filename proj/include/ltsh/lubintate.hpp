#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "ltsh/charp_series.hpp"
#include "ltsh/okring.hpp"

namespace ltsh {

/* Bivariate power series over O_K truncated below a total-degree cutoff.
   Dense triangle storage; cell (i, j) sits at (i+j)(i+j+1)/2 + j, so the
   cells of one total degree are contiguous. */
struct OKSeries2 {
    std::int64_t cutoff = 0;
    std::vector<OKElem> c;

    static std::size_t tri_idx(std::int64_t i, std::int64_t j) {
        std::int64_t m = i + j;
        return (std::size_t)(m * (m + 1) / 2 + j);
    }
    static std::size_t tri_size(std::int64_t n) { return (std::size_t)(n * (n + 1) / 2); }

    const OKElem& at(std::int64_t i, std::int64_t j) const { return c[tri_idx(i, j)]; }
    OKElem& at(std::int64_t i, std::int64_t j) { return c[tri_idx(i, j)]; }
};

/* One logarithm coefficient a_n = c / pi^v with c integral. The stored c is
   not kept pi-free, so v may overshoot the true pole order. */
struct LogCoeff {
    OKElem c;
    int v = 0;
};

/* Cache of reduced endomorphisms, shared between copies of an LTData.
   Keys quotient a by p^L with L = ceil(log_q N) + 1: two multipliers that
   agree to that depth have the same reduction below degree N. Values are
   immutable once inserted; the first writer wins. */
struct EndoCacheKey {
    std::vector<std::uint64_t> a_red;
    std::int64_t N = 0;
    friend bool operator<(const EndoCacheKey& x, const EndoCacheKey& y) {
        if (x.N != y.N) return x.N < y.N;
        return x.a_red < y.a_red;
    }
};

struct EndoCache {
    std::mutex mu;
    std::map<EndoCacheKey, std::shared_ptr<const TruncSeries>> entries;
};

/* A Lubin-Tate formal group for f(Y) = pi*Y + Y^q at finite precision.
   All characteristic-p data is obtained by reducing verified
   characteristic-0 data, never constructed directly in characteristic p.

   Precision: every coefficient of F0 carries kappa trusted pi-digits.
   The inductive construction spends one digit per q-fold of the degree
   (divisions by pi - pi^n are unit-Jacobian only along the q-th-power
   diagonal); the verification pass recomputes the defining identity from
   the finished data and certifies the claimed kappa independently of how
   the induction accounted for it. */
struct LTData {
    const OKRing* ring = nullptr; // not owned; must outlive this object
    std::int64_t N = 0;           // truncation: degrees < N are stored
    int kappa = 0;                // certified trusted pi-digits, >= 1

    OKSeries2 F0;          // group law over O_K, F0(X,0) = X, symmetric
    TruncSeries2 S_modpi;  // its reduction, same cutoff

    /* Logarithm prefix: log(Y) = sum a_n Y^n, a_1 = 1, log(f(Y)) = pi*log(Y).
       Index n, entry 0 unused. Built by the functional-equation recursion;
       only unit inversions are involved, so kappa here is op-tracked. */
    std::vector<LogCoeff> log_coeffs;

    std::shared_ptr<EndoCache> cache;
};

/* Builds the group law below total degree N by the degree-by-degree
   induction G_n = [slice_n(F(f,f)) - slice_n(F^q)] / (pi - pi^n), then
   re-evaluates pi*F + F^q against F(f,f) from the finished triangle with an
   independently ordered power chain. A residual anywhere aborts; data is
   never returned unverified. Requires N >= q+2; throws PrecisionError when
   the digit budget cannot cover the q-adic depth of N (the failing degree
   is reported), ConfigError when the bivariate stage would not fit memory. */
LTData build_lt(const OKRing& ring, std::int64_t N);

/* The endomorphism [a] reduced mod pi, below degree N. Built in
   characteristic 0 by the univariate analogue of the group-law induction,
   verified against f o [a] = [a] o f from the finished series, then reduced
   and cached. Concurrent callers race benignly: insert-if-absent, first
   writer wins. */
std::shared_ptr<const TruncSeries> lt_endo(const LTData& lt, const OKElem& a,
                                           std::int64_t N);

/* Action of a unit g on a perfected series h: phi^{-l}((phi^l h) o [g])
   where l is the perfection level of h. Rejects non-unit g (ConfigError).
   The endomorphism is built at the cutoff the twisted series needs, so the
   result is trusted on all of h's support. */
PerfSeries gamma_act(const LTData& lt, const OKElem& g, const PerfSeries& h);

/* val_Y([a + p^i b] - [a]) below `cutoff` (default: lt.N). nullopt means
   the difference vanishes below the cutoff, i.e. the gap was not witnessed
   there; callers must not read that as infinity. */
std::optional<std::int64_t> diflt_gap(const LTData& lt, const OKElem& a,
                                      const OKElem& b, int i,
                                      std::int64_t cutoff = 0);

} // namespace ltsh
