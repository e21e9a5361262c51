#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltsh/fraction.hpp"
#include "ltsh/lubintate.hpp"

namespace ltsh {

/* Scans of the super-Holder condition for the group G = 1 + p^j O_K acting on
   perfected series by g.m = m o [g]. The filtration subgroups are
   G_i = 1 + p^{i+j} O_K, and the condition at (s, lambda, mu) asks
   val_y(g.m - m) >= p^(lambda + s*i) + mu for every g in G_i.

   Verdict semantics: FAIL is sound (a concrete witness is recorded),
   PASS is heuristic (finitely many sampled g, reported with count and seed),
   and INCONCLUSIVE marks levels whose bound reaches past the series cutoff,
   where truncation could mask a violation. A vacuous level never turns
   into PASS.

   Level scans are independent of each other; reports are assembled by level
   index so the output is deterministic in (config, seed). */

enum class ShVerdict { PASS, FAIL, INCONCLUSIVE };

struct ShParams {
    int s = 1;     // sh exponent; the cases of interest are 1 and the degree d
    Frac lambda{}; // bound offset exponent
    Frac mu{};     // additive slack
    int j = 1;     // acting subgroup is 1 + p^j O_K; j >= 1 (p = 2 excluded)
};

struct ShLevel {
    int i = 0;
    int sample_count = 0;
    // min over samples of val_y(g.m - m); nullopt when every sampled
    // difference vanishes below the cutoff (val at least cutoff, not infinity)
    std::optional<Frac> min_val;
    std::optional<Frac> bound_exp; // bound is p^bound_exp + mu; absent in estimate mode
    Frac mu{};
    ShVerdict verdict = ShVerdict::PASS;
};

struct ShWitness {
    OKElem g;
    int i = 0;
    int sample_index = 0;
    Frac observed{}; // val_y(g.m - m), strictly below the bound
};

/* mu is fixed to 0 in the fit: (lambda, mu) is not identifiable from finitely
   many levels, so we publish the mu = 0 fit next to the raw per-level minima
   and leave any sharper claim to the reader of the report. */
struct ShFit {
    bool infinite = false; // every level vanished below the cutoff
    bool exact = false;    // every finite minimum is a pure power of p
    Frac value_exact{};    // only meaningful when exact
    double value = 0.0;    // min over levels of log_p(v_i) - s*i, when finite
};

struct ShReport {
    int j = 1;
    int s = 1;
    std::uint64_t seed = 0;
    Frac cutoff{};
    std::vector<ShLevel> levels;
    ShVerdict verdict = ShVerdict::PASS;
    std::optional<ShWitness> witness; // present iff verdict == FAIL
    std::optional<ShFit> fit;         // present in estimate mode
};

struct DecompReport {
    int n_hat = 0;  // level predicted from the scan minima
    int perf_n = 0; // level read off the exponent denominators
    bool agree = false;
    ShReport scan;
};

/* Deterministic samples from G_i = 1 + p^{i+j} O_K. The first entry is the
   canonical 1 + p^{i+j}; the rest draw u from units plus periodic pi-multiple
   patterns, so the sample meets G_i \ G_{i+1} as well as deeper classes. */
std::vector<OKElem> filtration_samples(const OKRing& ring, int j, int i,
                                       int count, std::uint64_t seed);

/* Check val_y(g.m - m) >= p^(lambda + s*i) + mu on sampled g for each level
   i <= i_max. Integer bound exponents are compared exactly; fractional ones
   go through guarded floating point and abort rather than guess a tie. */
ShReport sh_check(const LTData& lt, const PerfSeries& m, const ShParams& params,
                  int i_max, int samples, std::uint64_t seed);

/* Record per-level minima and fit lambda-hat = min_i (log_p v_i - s*i) with
   s = d and mu = 0. Levels that vanish below the cutoff are excluded from
   the fit; if all do, the fit is reported as infinite. */
ShReport sh_estimate(const LTData& lt, const PerfSeries& m, int j, int i_max,
                     int samples, std::uint64_t seed);

/* Predict the decompletion level n-hat = ceil((d*j - lambda-hat)/f) clamped
   at 0, computed exactly from the raw minima, and cross-check it against the
   level read from m's exponents. Disagreement is reported, not resolved:
   it usually means the cutoff hides the binding part of m. */
DecompReport decompletion_scan(const LTData& lt, const PerfSeries& m, int j,
                               int i_max = 3, int samples = 8,
                               std::uint64_t seed = 0x5c4eULL);

} // namespace ltsh
