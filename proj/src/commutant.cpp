#include "ltsh/commutant.hpp"

#include <algorithm>
#include <numeric>

namespace ltsh {

namespace {

constexpr int n_abs_max = 8;            // supported |n| in q^n
constexpr std::int64_t compose_cap = 200000; // integer-world composition budget

// coefficient twist w^(m): c -> c^(p^m), exponents unchanged
TruncSeries coeff_frob(const TruncSeries& s, int m) {
    TruncSeries r = ts_make(*s.F, s.cutoff);
    for (const auto& [e, c] : s.t) r.t.emplace(e, s.F->frobenius(c, m));
    return r;
}

// exponent of p in v when v = p^r exactly, nullopt otherwise
std::optional<std::int64_t> pure_p_power(const Frac& v, std::int64_t p) {
    if (v.num <= 0) return std::nullopt;
    std::int64_t n = v.num, a = 0;
    while (n % p == 0) {
        n /= p;
        ++a;
    }
    if (n != 1) return std::nullopt;
    std::int64_t b = 0, den = v.den;
    while (den % p == 0) {
        den /= p;
        ++b;
    }
    if (den != 1) return std::nullopt;
    return a - b;
}

std::int64_t ceil_frac(const Frac& x) {
    return x.num / x.den + (x.num % x.den != 0 && x.num > 0 ? 1 : 0);
}

std::int64_t ipow64(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// all coefficients at exponents < bound agree
bool prefix_eq(const TruncSeries& a, const TruncSeries& b, std::int64_t bound) {
    for (const auto& [e, c] : a.t) {
        if (e >= bound) break;
        if (ts_get(b, e) != c) return false;
    }
    for (const auto& [e, c] : b.t) {
        if (e >= bound) break;
        if (ts_get(a, e) != c) return false;
    }
    return true;
}

} // namespace

std::vector<OKElem> standard_g_samples(const OKRing& ring, int count,
                                       std::uint64_t seed) {
    if (count < 1) throw ConfigError("commutant.samples", "count must be >= 1");
    std::vector<OKElem> gs;
    gs.push_back(ring.from_int(2));
    if ((int)gs.size() < count) gs.push_back(ring.add(ring.one(), ring.pi()));
    if ((int)gs.size() < count)
        gs.push_back(ring.add(ring.one(), ring.mul(ring.pi(), ring.pi())));
    Rng rng(seed);
    while ((int)gs.size() < count) gs.push_back(ring.random_unit(rng));
    return gs;
}

CommuteCheck check_commutation(const LTData& lt, const PerfSeries& u,
                               const std::vector<OKElem>& g_samples) {
    const OKRing& R = *lt.ring;
    std::optional<Frac> v0 = ps_val(u);
    if (!v0 || !(Frac(0) < *v0))
        throw ConfigError("commutant.check", "val_y(u) must be positive and visible");
    if (g_samples.empty()) throw ConfigError("commutant.check", "empty sample set");

    // clear denominators: W = phi^l(u) lives in the integer-exponent world
    int l = perf_level(u, R.fK).level;
    if (l > 35) throw ConfigError("commutant.check", "perfection level too deep");
    TruncSeries W = to_trunc(perf_frobenius(u, l));

    // divide out the common q-power of the exponents; [g] has F_q
    // coefficients, so S(Y^(q^t)) commutes with [g] iff S does
    std::int64_t g_all = 0;
    for (const auto& [e, c] : W.t) g_all = std::gcd(g_all, e);
    int t = 0;
    while (g_all % R.q == 0 && g_all > 0) {
        g_all /= R.q;
        ++t;
    }
    std::int64_t qt = ipow64(R.q, t);
    TruncSeries S = ts_make(R.Fq, (W.cutoff + qt - 1) / qt);
    for (const auto& [e, c] : W.t)
        if (e / qt < S.cutoff) S.t.emplace(e / qt, c);

    if (S.cutoff > compose_cap)
        throw ConfigError("commutant.check", "cutoff too large for the integer world");

    CommuteCheck out;
    out.cutoff = u.cutoff;
    out.informative = (*v0 * Frac(R.q)) < u.cutoff;
    if (S.cutoff < 2) return out; // nothing to compose against

    std::int64_t pl = ipow64(R.p, l);
    for (const OKElem& g : g_samples) {
        std::shared_ptr<const TruncSeries> E = lt_endo(lt, g, S.cutoff);
        TruncSeries lhs = ts_compose(S, *E);                // phi^l(u o [g]) descaled
        TruncSeries rhs = ts_compose(coeff_frob(*E, l), S); // phi^l([g] o u) descaled
        std::optional<std::int64_t> r = ts_val(ts_sub(lhs, rhs));
        if (!r) continue;
        Frac back(*r * qt, pl); // undo the two exponent transports
        if (!out.residual || back < *out.residual) out.residual = back;
    }
    return out;
}

PerfSeries make_commuting(const LTData& lt, const OKElem& b, int n, Frac cutoff) {
    const OKRing& R = *lt.ring;
    if (!R.is_unit(b)) throw ConfigError("commutant.make", "b must be a unit");
    if (n < -n_abs_max || n > n_abs_max)
        throw ConfigError("commutant.make", "|n| out of supported range");
    if (cutoff.num <= 0) cutoff = Frac(lt.N);

    Frac qn = frac_pow(R.q, n);
    if (!(qn < cutoff))
        throw ConfigError("commutant.make", "cutoff must exceed q^n");
    std::int64_t n_endo = std::max<std::int64_t>(ceil_frac(cutoff * frac_pow(R.q, -n)), 2);
    if (n_endo > compose_cap)
        throw ConfigError("commutant.make", "cutoff too large for q^n scaling");

    std::shared_ptr<const TruncSeries> E = lt_endo(lt, b, n_endo);
    PerfSeries u = ps_make(R.Fq, cutoff);
    for (const auto& [e, c] : E->t) {
        Frac fe = Frac(e) * qn;
        if (fe < cutoff) u.t.emplace(fe, c);
    }

    CommuteCheck cc = check_commutation(lt, u, standard_g_samples(R, 2));
    if (cc.residual)
        throw InternalError("commutant.make",
                            "constructed series fails its own commutation check at " +
                                cc.residual->str());
    return u;
}

CommutantSolution solve_commutant(const LTData& lt, const PerfSeries& u) {
    const OKRing& R = *lt.ring;
    std::optional<Frac> v = ps_val(u);
    if (!v || !(Frac(0) < *v))
        throw ConfigError("commutant.solve", "val_y(u) must be positive and visible");

    // val_y(u) = q^n pins n; anything else is outside the classified family
    std::optional<std::int64_t> r = pure_p_power(*v, R.p);
    if (!r || *r % R.fK != 0)
        throw MathFail("commutant.solve",
                       "REJECT: val_y(u) = " + v->str() + " is not a power of q");
    std::int64_t n64 = *r / R.fK;
    if (n64 < -n_abs_max || n64 > n_abs_max)
        throw ConfigError("commutant.solve", "q-power exponent out of supported range");
    int n = (int)n64;

    // descale: u must be w(Y^(q^n)) with w an integer-exponent series
    Frac qinv = frac_pow(R.q, -n);
    TruncSeries w = ts_make(R.Fq, ceil_frac(u.cutoff * qinv));
    for (const auto& [e, c] : u.t) {
        Frac fe = e * qinv;
        if (fe.den != 1)
            throw MathFail("commutant.solve",
                           "REJECT: exponent " + e.str() + " is off the q^n lattice");
        if (fe.num < w.cutoff) w.t.emplace(fe.num, c);
    }

    // digit m is probed at degree q^m; stop at the cutoff, the ring's
    // precision, or the composition budget, whichever bites first
    int digits = 0;
    while (digits < R.kappa_max() && ipow64(R.q, digits) < w.cutoff &&
           ipow64(R.q, digits) < compose_cap)
        ++digits;
    if (digits < 1)
        throw MathFail("commutant.solve", "REJECT: cutoff certifies no digits");

    FqElem c1 = ts_get(w, 1);
    if (R.Fq.is_zero(c1))
        throw InternalError("commutant.solve", "valuation 1 with zero linear term");
    OKElem b = R.lift_residue(c1);

    // digit m first shows at degree q^m: two candidates differing by pi^m * c
    // have endomorphisms that differ exactly there
    OKElem pim = R.one();
    for (int m = 1; m < digits; ++m) {
        pim = R.mul(pim, R.pi());
        std::int64_t probe = ipow64(R.q, m) + 1;
        int matches = 0;
        OKElem next = b;
        for (std::int64_t ci = 0; ci < R.q; ++ci) {
            OKElem cand = R.add(b, R.mul(R.lift_residue(FqElem{(std::uint16_t)ci}), pim));
            std::shared_ptr<const TruncSeries> E = lt_endo(lt, cand, probe);
            if (prefix_eq(*E, w, probe)) {
                ++matches;
                next = cand;
            }
        }
        if (matches == 0)
            throw MathFail("commutant.solve",
                           "REJECT: no digit candidate matches below degree " +
                               std::to_string(probe));
        if (matches > 1)
            throw InternalError("commutant.solve", "digit candidates collide");
        b = next;
    }

    PerfSeries rebuilt = make_commuting(lt, b, n, u.cutoff);
    std::optional<Frac> res = ps_val(ps_sub(u, rebuilt));
    if (res)
        throw MathFail("commutant.solve",
                       "REJECT: residual val_y " + res->str() + " below the cutoff");

    b.kappa = (std::int16_t)std::min(digits, (int)R.kappa_max());
    return CommutantSolution{b, digits, n, std::nullopt};
}

LubnarchReport check_lubnarch(const TruncSeries& w, const TruncSeries& f, int m,
                              std::int64_t nontorsion_bound) {
    const FqCtx& F = *w.F;
    if (!F.is_zero(ts_get(w, 0)) || ts_get(w, 1) != F.one())
        throw ConfigError("commutant.lubnarch", "w must be Y + O(Y^2)");
    if (nontorsion_bound < 1)
        throw ConfigError("commutant.lubnarch", "nontorsion bound must be >= 1");

    LubnarchReport rep;
    std::optional<std::int64_t> nf = ts_val(f);
    if (!nf || *nf < 1)
        throw ConfigError("commutant.lubnarch", "f must vanish to positive order");
    rep.n = *nf;
    std::optional<std::int64_t> jf = ts_val(ts_derivative(f));
    if (!jf) throw ConfigError("commutant.lubnarch", "f must be separable");
    rep.j = *jf;

    // certify w^(ok) != Y below the cutoff for all k <= bound
    TruncSeries id = ts_identity(F, w.cutoff);
    rep.nontorsion_bound = nontorsion_bound;
    rep.nontorsion_ok = true;
    TruncSeries it = w;
    for (std::int64_t k = 1; k <= nontorsion_bound; ++k) {
        if (ts_eq(it, id)) {
            rep.nontorsion_ok = false;
            break;
        }
        if (k < nontorsion_bound) it = ts_compose(it, w);
    }

    // replace w by p-fold iterates until w = Y + w_r Y^r + ... has r > j;
    // each iterate kills the leading deviation (p copies of it sum to zero),
    // so r climbs strictly
    TruncSeries wr = w;
    for (int step = 0; step <= 64; ++step) {
        std::optional<std::int64_t> rv = ts_val(ts_sub(wr, id));
        if (!rv) {
            rep.arranged = false;
            rep.r = 0;
            break;
        }
        rep.r = *rv;
        if (rep.r >= rep.j + 1) {
            rep.arranged = true;
            rep.iter_pow = step;
            break;
        }
        TruncSeries next = wr;
        for (std::int64_t i = 1; i < F.p; ++i) next = ts_compose(next, wr);
        wr = next;
    }

    // order bookkeeping: w^(m) o f = f + w_r^(pm) f_n^r Y^(nr) + ... while
    // f o w = f + w_r g_j Y^(r+j) + ..., so commutation forces nr = r + j
    TruncSeries diff = ts_sub(ts_compose(coeff_frob(w, m), f), ts_compose(f, w));
    rep.residual = ts_val(diff);
    rep.commutes = !rep.residual.has_value();
    rep.invertible = (rep.n == 1);
    rep.counterexample = rep.commutes && rep.n != 1;
    return rep;
}

} // namespace ltsh
