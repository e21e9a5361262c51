#include "ltsh/lubintate.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace ltsh {
namespace {

/* Structural zero: all coordinates vanish. Skipping such factors in the
   convolutions below never weakens a kappa: every zero we store carries at
   least the trust of the round that produced it, so its product terms can
   never be the binding minimum of an accumulator. */
bool raw_zero(const OKElem& x) {
    for (auto w : x.c)
        if (w != 0) return false;
    return true;
}

int floor_log(std::int64_t n, std::int64_t q) {
    int e = 0;
    while (n >= q) {
        n /= q;
        ++e;
    }
    return e;
}

std::int64_t ipow64(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

/* pi^t, exact; from t = e_K*M on the power is exactly 0 mod p^M. */
struct PiPows {
    std::vector<OKElem> v;
    OKElem beyond;
    explicit PiPows(const OKRing& R) {
        v.reserve((std::size_t)R.kappa_max());
        OKElem x = R.one();
        for (int t = 0; t < R.kappa_max(); ++t) {
            v.push_back(x);
            x = R.mul(x, R.pi());
        }
        beyond = R.from_int(0);
    }
    bool vanishes(std::int64_t t) const { return t >= (std::int64_t)v.size(); }
    const OKElem& at(std::int64_t t) const {
        return vanishes(t) ? beyond : v[(std::size_t)t];
    }
};

/* Power chains for S^q. The induction extends the binary chain slice by
   slice; the verification pass recomputes the powers of the finished series
   whole, over the p-layered chain, so for composite q the two evaluations
   share no intermediate exponents beyond the square. For q = p the chains
   coincide as exponent lists and the independence is in the evaluation
   order alone. */
struct ChainStep {
    std::int64_t e, e1, e2; // S^e = S^e1 * S^e2
};

std::vector<ChainStep> chain_binary(std::int64_t q) {
    int top = 0;
    while ((q >> (top + 1)) > 0) ++top;
    std::vector<ChainStep> out;
    std::int64_t acc = 1;
    for (int bit = top - 1; bit >= 0; --bit) {
        out.push_back({acc * 2, acc, acc});
        acc *= 2;
        if ((q >> bit) & 1) {
            out.push_back({acc + 1, acc, 1});
            acc += 1;
        }
    }
    return out;
}

std::vector<ChainStep> chain_layered(std::int64_t p, int fK) {
    std::vector<ChainStep> out;
    std::int64_t c = 1;
    for (int l = 0; l < fK; ++l) {
        for (std::int64_t k = 2; k <= p; ++k) out.push_back({k * c, (k - 1) * c, c});
        c *= p;
    }
    return out;
}

/* ---------------- bivariate triangle primitives ---------------- */

OKSeries2 make_tri(const OKRing& R, std::int64_t N) {
    OKSeries2 t;
    t.cutoff = N;
    t.c.assign(OKSeries2::tri_size(N), R.from_int(0));
    return t;
}

/* Adds into dst (the cells of total degree n, indexed by the Y-exponent)
   the degree-n slice of A*B, where vA, vB are lower bounds on the total
   valuations of the factors. Uses only slices of strictly smaller degree
   when vA, vB >= 1, which is what lets the induction extend powers of a
   series whose degree-n slice is not yet known. */
void tri_mul_slice(const OKRing& R, OKElem* dst, const OKSeries2& A, std::int64_t vA,
                   const OKSeries2& B, std::int64_t vB, std::int64_t n) {
    for (std::int64_t m = vA; m <= n - vB; ++m) {
        const OKElem* pa = &A.c[OKSeries2::tri_idx(m, 0)];
        const OKElem* pb = &B.c[OKSeries2::tri_idx(n - m, 0)];
        const std::int64_t mb = n - m;
        for (std::int64_t ja = 0; ja <= m; ++ja) {
            if (raw_zero(pa[ja])) continue;
            for (std::int64_t jb = 0; jb <= mb; ++jb) {
                if (raw_zero(pb[jb])) continue;
                OKElem& acc = dst[ja + jb];
                acc = R.add(acc, R.mul(pa[ja], pb[jb]));
            }
        }
    }
}

/* Adds into dst the degree-n slice of A(f(X), f(Y)) for f(Y) = pi*Y + Y^q,
   restricted to substitution depth k+l >= tmin. Closed form per cell:
   f(X)^i = sum_k C(i,k) pi^{i-k} X^{i+k(q-1)}, so a source cell of degree m
   feeds degree n = m + t(q-1) with a uniform boost pi^{m-t}. tmin = 1 gives
   exactly the contributions of slices below n (used by the induction);
   tmin = 0 is the full substitution (used by the verification pass). */
void tri_subst_slice(const OKRing& R, const BinomModPM& binom, const PiPows& pip,
                     OKElem* dst, const OKSeries2& A, std::int64_t n,
                     std::int64_t tmin) {
    const std::int64_t q = R.q;
    for (std::int64_t t = tmin;; ++t) {
        const std::int64_t m = n - t * (q - 1);
        if (m < 1 || m - t < 0) break;
        if (pip.vanishes(m - t)) continue;
        const OKElem& boost = pip.at(m - t);
        const OKElem* pa = &A.c[OKSeries2::tri_idx(m, 0)];
        for (std::int64_t j = 0; j <= m; ++j) {
            if (raw_zero(pa[j])) continue;
            const std::int64_t i = m - j;
            for (std::int64_t k = std::max<std::int64_t>(0, t - j);
                 k <= std::min(i, t); ++k) {
                const std::int64_t l = t - k;
                const std::uint64_t bb = (std::uint64_t)(
                    (__int128)binom.at(i, k) * binom.at(j, l) % R.pM);
                if (bb == 0) continue;
                const OKElem w = R.mul(pa[j], R.mul(R.from_int((std::int64_t)bb), boost));
                OKElem& acc = dst[j + l * (q - 1)];
                acc = R.add(acc, w);
            }
        }
    }
}

/* ---------------- univariate analogues ---------------- */

void uni_mul_slice(const OKRing& R, OKElem& acc, const std::vector<OKElem>& A,
                   std::int64_t vA, const std::vector<OKElem>& B, std::int64_t vB,
                   std::int64_t n) {
    for (std::int64_t m = vA; m <= n - vB; ++m) {
        if (raw_zero(A[(std::size_t)m])) continue;
        const OKElem& bb = B[(std::size_t)(n - m)];
        if (raw_zero(bb)) continue;
        acc = R.add(acc, R.mul(A[(std::size_t)m], bb));
    }
}

OKElem uni_subst_slice(const OKRing& R, const BinomModPM& binom, const PiPows& pip,
                       const std::vector<OKElem>& b, std::int64_t n,
                       std::int64_t kmin) {
    const std::int64_t q = R.q;
    OKElem acc = R.from_int(0);
    for (std::int64_t k = kmin;; ++k) {
        const std::int64_t m = n - k * (q - 1);
        if (m < 1 || m - k < 0) break;
        if (pip.vanishes(m - k)) continue;
        if (raw_zero(b[(std::size_t)m])) continue;
        const std::uint64_t bb = binom.at(m, k);
        if (bb == 0) continue;
        acc = R.add(acc, R.mul(b[(std::size_t)m],
                               R.mul(R.from_int((std::int64_t)bb), pip.at(m - k))));
    }
    return acc;
}

/* Trusted digits stamped on a freshly solved degree-n slice. Divisions by
   pi - pi^n have unit Jacobian only along the q-th-power diagonal m = n/q;
   off-diagonal contributions carry at least one pi of boost, which pays for
   the division. So the genuine loss is the q-adic depth of n, plus one
   digit of slack. The verification pass re-derives the certified precision
   from the finished data, so an error here can only cause an abort, never
   wrong output. */
std::int16_t stamp_kappa(const OKRing& R, std::int64_t n) {
    return (std::int16_t)(R.kappa_max() - (floor_log(n, R.q) + 1));
}

void precision_gate(const OKRing& R, std::int64_t N, const char* where) {
    const int depth = floor_log(std::max<std::int64_t>(N - 1, 1), R.q) + 1;
    if (R.kappa_max() < depth + 3)
        throw PrecisionError(where,
                             "digit budget e_K*M = " + std::to_string(R.kappa_max()) +
                                 " cannot cover q-adic depth " + std::to_string(depth) +
                                 " of cutoff " + std::to_string(N) + "; raise M");
}

/* ---------------- characteristic-0 endomorphism ---------------- */

struct UniEndo {
    std::vector<OKElem> b; // [a](Y) = sum b_n Y^n, degrees < N
    int kappa = 0;
};

UniEndo build_endo_char0(const OKRing& R, const OKElem& a, std::int64_t N) {
    const std::int64_t q = R.q;
    if (N < 2) throw ConfigError("lubintate.endo", "cutoff must be at least 2");
    if (N > 200000)
        throw ConfigError("lubintate.endo",
                          "univariate stage is sized for desk-scale cutoffs (N <= 200000)");
    precision_gate(R, N, "lubintate.endo");

    const BinomModPM binom(R.p, R.M, N);
    const PiPows pip(R);

    std::vector<OKElem> b((std::size_t)N, R.from_int(0));
    b[1] = a;

    const auto bchain = chain_binary(q);
    std::map<std::int64_t, std::vector<OKElem>> pw;
    for (const auto& st : bchain)
        pw.emplace(st.e, std::vector<OKElem>((std::size_t)N, R.from_int(0)));
    const auto pick = [&](std::int64_t e) -> const std::vector<OKElem>& {
        return e == 1 ? b : pw.at(e);
    };

    for (std::int64_t n = 2; n < N; ++n) {
        for (const auto& st : bchain)
            uni_mul_slice(R, pw.at(st.e)[(std::size_t)n], pick(st.e1), st.e1,
                          pick(st.e2), st.e2, n);
        const OKElem rhs = uni_subst_slice(R, binom, pip, b, n, 1);
        const OKElem num = R.sub(rhs, pw.at(q)[(std::size_t)n]);
        const OKElem dvs = R.sub(R.pi(), pip.at(n));
        OKElem g;
        try {
            g = R.div_exact(num, dvs);
        } catch (const PrecisionError&) {
            throw PrecisionError("lubintate.endo",
                                 "digit budget exhausted at degree " + std::to_string(n));
        } catch (const Error&) {
            throw InternalError("lubintate.endo",
                                "induction numerator not divisible by pi at degree " +
                                    std::to_string(n));
        }
        g.kappa = stamp_kappa(R, n);
        b[(std::size_t)n] = g;
    }

    /* Re-derive f o [a] = [a] o f from the finished series: powers over the
       layered chain, whole products, full substitution. */
    const auto vchain = chain_layered(R.p, R.fK);
    std::map<std::int64_t, std::vector<OKElem>> vp;
    for (const auto& st : vchain)
        vp.emplace(st.e, std::vector<OKElem>((std::size_t)N, R.from_int(0)));
    const auto vpick = [&](std::int64_t e) -> const std::vector<OKElem>& {
        return e == 1 ? b : vp.at(e);
    };
    for (const auto& st : vchain) {
        auto& dst = vp.at(st.e);
        for (std::int64_t n = st.e; n < N; ++n)
            uni_mul_slice(R, dst[(std::size_t)n], vpick(st.e1), st.e1, vpick(st.e2),
                          st.e2, n);
    }
    const auto& bq = vp.at(q);
    int kv = R.kappa_max();
    for (std::int64_t n = 1; n < N; ++n) {
        const OKElem lhs =
            R.add(R.mul(b[(std::size_t)n], R.pi()), bq[(std::size_t)n]);
        const OKElem rhs = uni_subst_slice(R, binom, pip, b, n, 0);
        const OKElem dd = R.sub(lhs, rhs);
        if (!R.is_zero_at_precision(dd))
            throw InternalError("lubintate.endo",
                                "endomorphism verification failed at degree " +
                                    std::to_string(n));
        kv = std::min(kv, (int)dd.kappa);
    }

    const int kappa = kv - 1; // uniqueness of the commuting solution eats one digit
    if (kappa < 1)
        throw PrecisionError("lubintate.endo", "certified precision fell below one digit");
    for (auto& x : b) x.kappa = (std::int16_t)kappa;
    return UniEndo{std::move(b), kappa};
}

} // namespace

/* ---------------- group law ---------------- */

LTData build_lt(const OKRing& ring, std::int64_t N) {
    const std::int64_t q = ring.q;
    if (N < q + 2)
        throw ConfigError("lubintate.build", "cutoff must be at least q + 2");
    if (N > 512)
        throw ConfigError("lubintate.build",
                          "bivariate stage is sized for desk-scale cutoffs (N <= 512)");
    precision_gate(ring, N, "lubintate.build");

    const BinomModPM binom(ring.p, ring.M, N);
    const PiPows pip(ring);

    OKSeries2 F = make_tri(ring, N);
    F.at(1, 0) = ring.one();
    F.at(0, 1) = ring.one();

    /* Degree-by-degree: the degree-n slice of pi*F + F^q = F(f(X), f(Y))
       pins G_n = [slice_n(F(f,f)) - slice_n(F^q)] / (pi - pi^n), where both
       slices only involve the part of F below degree n. */
    const auto bchain = chain_binary(q);
    std::map<std::int64_t, OKSeries2> pw;
    for (const auto& st : bchain) pw.emplace(st.e, make_tri(ring, N));
    const auto pick = [&](std::int64_t e) -> const OKSeries2& {
        return e == 1 ? F : pw.at(e);
    };

    std::vector<OKElem> rhs;
    for (std::int64_t n = 2; n < N; ++n) {
        for (const auto& st : bchain)
            tri_mul_slice(ring, &pw.at(st.e).c[OKSeries2::tri_idx(n, 0)], pick(st.e1),
                          st.e1, pick(st.e2), st.e2, n);
        rhs.assign((std::size_t)n + 1, ring.from_int(0));
        tri_subst_slice(ring, binom, pip, rhs.data(), F, n, 1);
        const OKElem* fq = &pw.at(q).c[OKSeries2::tri_idx(n, 0)];
        const OKElem dvs = ring.sub(ring.pi(), pip.at(n));
        const std::int16_t sk = stamp_kappa(ring, n);
        OKElem* out = &F.c[OKSeries2::tri_idx(n, 0)];
        for (std::int64_t j = 0; j <= n; ++j) {
            const OKElem num = ring.sub(rhs[(std::size_t)j], fq[j]);
            OKElem g;
            try {
                g = ring.div_exact(num, dvs);
            } catch (const PrecisionError&) {
                throw PrecisionError("lubintate.build",
                                     "digit budget exhausted at degree " +
                                         std::to_string(n));
            } catch (const Error&) {
                throw InternalError("lubintate.build",
                                    "induction numerator not divisible by pi at degree " +
                                        std::to_string(n));
            }
            g.kappa = sk;
            out[j] = g;
        }
    }

    /* Verification pass: recompute both sides of the defining identity from
       the finished triangle and check every cell, along with F(X,0) = X and
       symmetry. The minimum kappa of the residuals, less one digit for the
       uniqueness argument, is the certified precision of the whole object. */
    const auto vchain = chain_layered(ring.p, ring.fK);
    std::map<std::int64_t, OKSeries2> vp;
    for (const auto& st : vchain) vp.emplace(st.e, make_tri(ring, N));
    const auto vpick = [&](std::int64_t e) -> const OKSeries2& {
        return e == 1 ? F : vp.at(e);
    };
    for (const auto& st : vchain) {
        OKSeries2& dst = vp.at(st.e);
        for (std::int64_t n = st.e; n < N; ++n)
            tri_mul_slice(ring, &dst.c[OKSeries2::tri_idx(n, 0)], vpick(st.e1), st.e1,
                          vpick(st.e2), st.e2, n);
    }
    OKSeries2 rhsT = make_tri(ring, N);
    for (std::int64_t n = 1; n < N; ++n)
        tri_subst_slice(ring, binom, pip, &rhsT.c[OKSeries2::tri_idx(n, 0)], F, n, 0);

    const OKSeries2& Fq = pick(q); // build-chain q-th power, checked against vp below
    const OKSeries2& Fqv = vp.at(q);
    int kv = ring.kappa_max();
    const auto check_zero = [&](const OKElem& dd, std::int64_t n, const char* what) {
        if (!ring.is_zero_at_precision(dd))
            throw InternalError("lubintate.build",
                                std::string("group law verification failed (") + what +
                                    ") at degree " + std::to_string(n));
        kv = std::min(kv, (int)dd.kappa);
    };
    for (std::int64_t n = 1; n < N; ++n) {
        const std::size_t base = OKSeries2::tri_idx(n, 0);
        for (std::int64_t j = 0; j <= n; ++j) {
            const OKElem lhs = ring.add(ring.mul(F.c[base + (std::size_t)j], ring.pi()),
                                        Fqv.c[base + (std::size_t)j]);
            check_zero(ring.sub(lhs, rhsT.c[base + (std::size_t)j]), n, "f o F = F o (f,f)");
            check_zero(ring.sub(Fq.c[base + (std::size_t)j], Fqv.c[base + (std::size_t)j]),
                       n, "power chains agree");
            if (2 * j < n) // symmetry once per unordered pair
                check_zero(ring.sub(F.at(n - j, j), F.at(j, n - j)), n, "F(X,Y) = F(Y,X)");
        }
        check_zero(n == 1 ? ring.sub(F.at(1, 0), ring.one()) : F.at(n, 0), n,
                   "F(X,0) = X");
    }

    const int kappa = kv - 1; // uniqueness of the solution eats one digit
    if (kappa < 1)
        throw PrecisionError("lubintate.build", "certified precision fell below one digit");
    for (auto& x : F.c) x.kappa = (std::int16_t)kappa;

    TruncSeries2 S = s2_make(ring.Fq, N);
    for (std::int64_t n = 1; n < N; ++n)
        for (std::int64_t j = 0; j <= n; ++j) {
            const FqElem r = ring.residue_of(F.at(n - j, j));
            if (!ring.Fq.is_zero(r)) s2_set(S, n - j, j, r);
        }

    /* Logarithm prefix from log(f(Y)) = pi*log(Y): collecting degree n gives
       a_n (pi - pi^n) = sum_{k>=1} a_m C(m,k) pi^{m-k},  m = n - k(q-1).
       With a_m = c_m / pi^{v_m} the right side is cleared to a common power
       pi^w, and pi - pi^n = pi(1 - pi^{n-1}) needs only a unit inversion, so
       no trusted digits are spent here. */
    const std::int64_t Dlog = std::min<std::int64_t>(N, 200);
    std::vector<LogCoeff> lc((std::size_t)Dlog + 1, LogCoeff{ring.from_int(0), 0});
    lc[1] = LogCoeff{ring.one(), 0};
    for (std::int64_t n = 2; n <= Dlog; ++n) {
        int w = 0;
        for (std::int64_t k = 1;; ++k) {
            const std::int64_t m = n - k * (q - 1);
            if (m < 1 || m - k < 0) break;
            w = std::max(w, lc[(std::size_t)m].v - (int)(m - k));
        }
        OKElem total = ring.from_int(0);
        for (std::int64_t k = 1;; ++k) {
            const std::int64_t m = n - k * (q - 1);
            if (m < 1 || m - k < 0) break;
            const std::int64_t e = (m - k) - lc[(std::size_t)m].v + w;
            if (pip.vanishes(e) || raw_zero(lc[(std::size_t)m].c)) continue;
            const std::uint64_t bb = binom.at(m, k);
            if (bb == 0) continue;
            total = ring.add(total, ring.mul(lc[(std::size_t)m].c,
                                             ring.mul(ring.from_int((std::int64_t)bb),
                                                      pip.at(e))));
        }
        const OKElem u = ring.sub(ring.one(), pip.at(n - 1));
        lc[(std::size_t)n] = LogCoeff{ring.mul(total, ring.inv_unit(u)), w + 1};
    }

    LTData out;
    out.ring = &ring;
    out.N = N;
    out.kappa = kappa;
    out.F0 = std::move(F);
    out.S_modpi = std::move(S);
    out.log_coeffs = std::move(lc);
    out.cache = std::make_shared<EndoCache>();
    return out;
}

/* ---------------- endomorphisms ---------------- */

std::shared_ptr<const TruncSeries> lt_endo(const LTData& lt, const OKElem& a,
                                           std::int64_t N) {
    const OKRing& R = *lt.ring;
    if (N < 2) throw ConfigError("lubintate.endo", "cutoff must be at least 2");

    const int L = floor_log(std::max<std::int64_t>(N - 1, 1), R.q) + 2;
    std::uint64_t md = 1;
    for (int i = 0; i < std::min(L, R.M); ++i) md *= (std::uint64_t)R.p;
    EndoCacheKey key;
    key.N = N;
    key.a_red = R.coords(a);
    for (auto& w : key.a_red) w %= md;

    {
        std::lock_guard<std::mutex> lk(lt.cache->mu);
        auto it = lt.cache->entries.find(key);
        if (it != lt.cache->entries.end()) return it->second;
    }

    const UniEndo e = build_endo_char0(R, a, N);
    auto ts = std::make_shared<TruncSeries>(ts_make(R.Fq, N));
    for (std::int64_t n = 1; n < N; ++n) {
        const FqElem r = R.residue_of(e.b[(std::size_t)n]);
        if (!R.Fq.is_zero(r)) ts_set(*ts, n, r);
    }

    std::lock_guard<std::mutex> lk(lt.cache->mu);
    auto [it, inserted] = lt.cache->entries.emplace(key, std::move(ts));
    return it->second;
}

PerfSeries gamma_act(const LTData& lt, const OKElem& g, const PerfSeries& h) {
    const OKRing& R = *lt.ring;
    if (!R.is_unit(g))
        throw ConfigError("lubintate.act", "the action is by units of O_K");
    const int l = perf_level(h, R.fK).level;
    const PerfSeries hw = perf_frobenius(h, l);
    const TruncSeries tw = to_trunc(hw);
    const auto endo = lt_endo(lt, g, std::max<std::int64_t>(tw.cutoff, 2));
    const TruncSeries comp = ts_compose(tw, *endo);
    return ps_truncate(perf_frobenius(to_perf(comp), -l), h.cutoff);
}

std::optional<std::int64_t> diflt_gap(const LTData& lt, const OKElem& a,
                                      const OKElem& b, int i, std::int64_t cutoff) {
    const OKRing& R = *lt.ring;
    if (i < 0) throw ConfigError("lubintate.diflt", "the depth i must be >= 0");
    const std::int64_t C = cutoff > 0 ? cutoff : lt.N;
    const OKElem step =
        i >= R.M ? R.from_int(0) : R.mul(b, R.from_int(ipow64(R.p, i)));
    const auto ea = lt_endo(lt, a, C);
    const auto eb = lt_endo(lt, R.add(a, step), C);
    return ts_val(ts_sub(*eb, *ea));
}

} // namespace ltsh
