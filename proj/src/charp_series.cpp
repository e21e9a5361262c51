#include "ltsh/charp_series.hpp"

#include <algorithm>
#include <numeric>

namespace ltsh {

namespace {

void require_same_ctx(const FqCtx* a, const FqCtx* b, const char* where) {
    if (a == nullptr || b == nullptr || a != b)
        throw InternalError(where, "operands belong to different coefficient fields");
}

std::int64_t min_cutoff(std::int64_t a, std::int64_t b) { return a < b ? a : b; }

Frac frac_min(const Frac& a, const Frac& b) { return a < b ? a : b; }

std::int64_t mul_clamped(std::int64_t a, std::int64_t b) {
    __int128 r = (__int128)a * b;
    const std::int64_t cap = (std::int64_t)1 << 48;
    return r > cap ? cap : (std::int64_t)r;
}

/* ---- dense plane machinery ----
   A series is held as f coordinate planes over [0, len): plane-major uint8,
   entries in [0, p). Exact; entries below val are known zero. */
struct Planes {
    const FqCtx* F = nullptr;
    std::int64_t len = 0;
    std::int64_t val = 0;
    std::vector<std::uint8_t> v; // F->f planes, each len wide

    std::uint8_t* plane(int a) { return v.data() + (std::size_t)a * len; }
    const std::uint8_t* plane(int a) const { return v.data() + (std::size_t)a * len; }
};

Planes planes_make(const FqCtx& F, std::int64_t len) {
    Planes d;
    d.F = &F;
    d.len = len;
    d.val = len;
    d.v.assign((std::size_t)F.f * len, 0);
    return d;
}

Planes planes_from(const TruncSeries& s, std::int64_t len) {
    Planes d = planes_make(*s.F, len);
    for (const auto& [e, c] : s.t) {
        if (e >= len) break;
        auto co = s.F->coords(c);
        for (int a = 0; a < s.F->f; ++a) d.plane(a)[e] = co[a];
        d.val = std::min(d.val, e);
    }
    return d;
}

TruncSeries planes_to_series(const Planes& d, std::int64_t cutoff) {
    TruncSeries s;
    s.F = d.F;
    s.cutoff = cutoff;
    int f = d.F->f;
    std::vector<std::uint8_t> co(f);
    std::int64_t lim = std::min(d.len, cutoff);
    for (std::int64_t e = d.val; e < lim; ++e) {
        bool nz = false;
        for (int a = 0; a < f; ++a) {
            co[a] = d.plane(a)[e];
            nz = nz || co[a] != 0;
        }
        if (nz) s.t.emplace(e, d.F->from_coords(co));
    }
    return s;
}

/* basis-product reduction: red[(a*f+b)*f+c] = coordinate c of x^a * x^b */
std::vector<std::uint8_t> basis_red_table(const FqCtx& F) {
    int f = F.f;
    std::vector<std::uint8_t> red((std::size_t)f * f * f);
    for (int a = 0; a < f; ++a)
        for (int b = 0; b < f; ++b) {
            std::vector<std::uint8_t> ea(f, 0), eb(f, 0);
            ea[a] = 1;
            eb[b] = 1;
            auto co = F.coords(F.mul(F.from_coords(ea), F.from_coords(eb)));
            for (int c = 0; c < f; ++c) red[((std::size_t)a * f + b) * f + c] = co[c];
        }
    return red;
}

/* out = a * b truncated below lim */
Planes planes_mul(const Planes& a, const Planes& b, std::int64_t lim) {
    const FqCtx& F = *a.F;
    int f = F.f;
    std::int64_t p = F.p;
    Planes out = planes_make(F, lim);
    if (a.val + b.val >= lim) return out;
    out.val = a.val + b.val;
    auto red = basis_red_table(F);
    std::vector<std::vector<std::uint64_t>> scratch(2 * f - 1,
                                                    std::vector<std::uint64_t>(lim, 0));
    for (int pa = 0; pa < f; ++pa) {
        const std::uint8_t* A = a.plane(pa);
        std::int64_t la = std::min(a.len, lim - b.val);
        for (int pb = 0; pb < f; ++pb) {
            const std::uint8_t* B = b.plane(pb);
            std::uint64_t* S = scratch[pa + pb].data();
            for (std::int64_t e1 = a.val; e1 < la; ++e1) {
                std::uint64_t x = A[e1];
                if (x == 0) continue;
                std::int64_t hi = std::min(b.len, lim - e1);
                std::uint64_t* Sp = S + e1;
                for (std::int64_t e2 = b.val; e2 < hi; ++e2) Sp[e2] += x * B[e2];
            }
        }
    }
    for (int c = 0; c < f; ++c) {
        std::uint8_t* O = out.plane(c);
        for (int s = 0; s < 2 * f - 1; ++s) {
            // x^pa * x^pb depends only on s = pa + pb
            int pa = std::min(s, f - 1), pb = s - pa;
            std::uint8_t m = red[((std::size_t)pa * f + pb) * f + c];
            if (m == 0) continue;
            const std::uint64_t* S = scratch[s].data();
            for (std::int64_t e = out.val; e < lim; ++e)
                O[e] = (std::uint8_t)((O[e] + m * (S[e] % p)) % p);
        }
    }
    return out;
}

/* acc += c * Y^shift * (plane data), entries below lim */
void planes_axpy_raw(std::vector<std::vector<std::uint64_t>>& acc, const FqCtx& F, FqElem c,
                     std::int64_t shift, const std::uint8_t* data, std::int64_t len,
                     std::int64_t val, std::int64_t lim) {
    if (shift >= lim) return;
    int f = F.f;
    for (int b = 0; b < f; ++b) {
        std::vector<std::uint8_t> eb(f, 0);
        eb[b] = 1;
        auto co = F.coords(F.mul(c, F.from_coords(eb)));
        const std::uint8_t* D = data + (std::size_t)b * len;
        std::int64_t hi = std::min(len, lim - shift);
        for (int a = 0; a < f; ++a) {
            if (co[a] == 0) continue;
            std::uint64_t m = co[a];
            std::uint64_t* O = acc[a].data() + shift;
            for (std::int64_t e = val; e < hi; ++e) O[e] += m * D[e];
        }
    }
}

void planes_axpy(std::vector<std::vector<std::uint64_t>>& acc, FqElem c, std::int64_t shift,
                 const Planes& d, std::int64_t lim) {
    planes_axpy_raw(acc, *d.F, c, shift, d.v.data(), d.len, d.val, lim);
}

TruncSeries acc_to_series(const FqCtx& F, const std::vector<std::vector<std::uint64_t>>& acc,
                          std::int64_t cutoff) {
    TruncSeries s;
    s.F = &F;
    s.cutoff = cutoff;
    int f = F.f;
    std::int64_t p = F.p;
    std::vector<std::uint8_t> co(f);
    std::int64_t lim = std::min<std::int64_t>((std::int64_t)acc[0].size(), cutoff);
    for (std::int64_t e = 0; e < lim; ++e) {
        bool nz = false;
        for (int a = 0; a < f; ++a) {
            co[a] = (std::uint8_t)(acc[a][e] % p);
            nz = nz || co[a] != 0;
        }
        if (nz) s.t.emplace(e, F.from_coords(co));
    }
    return s;
}

/* factorials mod p, Lucas-digit binomials */
struct SmallBinom {
    std::int64_t p;
    std::vector<std::int64_t> fact, inv_fact;
    explicit SmallBinom(std::int64_t p_) : p(p_), fact(p_), inv_fact(p_) {
        fact[0] = 1;
        for (std::int64_t i = 1; i < p; ++i) fact[i] = fact[i - 1] * i % p;
        auto powm = [&](std::int64_t b, std::int64_t e) {
            std::int64_t r = 1;
            while (e) {
                if (e & 1) r = r * b % p;
                b = b * b % p;
                e >>= 1;
            }
            return r;
        };
        for (std::int64_t i = 0; i < p; ++i) inv_fact[i] = powm(fact[i], p - 2);
    }
    std::int64_t binom(std::int64_t n, std::int64_t k) const {
        if (k < 0 || k > n) return 0;
        std::int64_t r = 1;
        while (n > 0 || k > 0) {
            std::int64_t nd = n % p, kd = k % p;
            if (kd > nd) return 0;
            r = r * (fact[nd] * inv_fact[kd] % p) % p * inv_fact[nd - kd] % p;
            n /= p;
            k /= p;
        }
        return r;
    }
};

std::int64_t pow_i64(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) {
        __int128 t = (__int128)r * b;
        if (t > ((__int128)1 << 60)) throw InternalError("charp.pow", "exponent scale overflow");
        r = (std::int64_t)t;
    }
    return r;
}

} // namespace

/* -------- factories and access -------- */

TruncSeries ts_make(const FqCtx& F, std::int64_t cutoff) {
    if (cutoff < 0) throw InternalError("charp.ts_make", "negative cutoff");
    TruncSeries s;
    s.F = &F;
    s.cutoff = cutoff;
    return s;
}

TruncSeries ts_identity(const FqCtx& F, std::int64_t cutoff) {
    TruncSeries s = ts_make(F, cutoff);
    ts_set(s, 1, F.one());
    return s;
}

TruncSeries ts_monomial(const FqCtx& F, std::int64_t e, FqElem c, std::int64_t cutoff) {
    TruncSeries s = ts_make(F, cutoff);
    ts_set(s, e, c);
    return s;
}

void ts_set(TruncSeries& s, std::int64_t e, FqElem c) {
    if (e < 0) throw InternalError("charp.ts_set", "negative exponent on an integer-ring series");
    if (e >= s.cutoff || s.F->is_zero(c))
        s.t.erase(e);
    else
        s.t[e] = c;
}

FqElem ts_get(const TruncSeries& s, std::int64_t e) {
    auto it = s.t.find(e);
    return it == s.t.end() ? s.F->zero() : it->second;
}

PerfSeries ps_make(const FqCtx& F, Frac cutoff) {
    PerfSeries s;
    s.F = &F;
    s.cutoff = cutoff;
    return s;
}

PerfSeries ps_monomial(const FqCtx& F, Frac e, FqElem c, Frac cutoff) {
    PerfSeries s = ps_make(F, cutoff);
    ps_set(s, e, c);
    return s;
}

void ps_set(PerfSeries& s, Frac e, FqElem c) {
    if (e < Frac(0))
        throw InternalError("charp.ps_set", "negative exponent on an integer-ring series");
    if (denominator_power_of(e, s.F->p) < 0)
        throw InternalError("charp.ps_set", "exponent denominator is not a p-power");
    if (!(e < s.cutoff) || s.F->is_zero(c))
        s.t.erase(e);
    else
        s.t[e] = c;
}

FqElem ps_get(const PerfSeries& s, Frac e) {
    auto it = s.t.find(e);
    return it == s.t.end() ? s.F->zero() : it->second;
}

TruncSeries2 s2_make(const FqCtx& F, std::int64_t cutoff) {
    TruncSeries2 s;
    s.F = &F;
    s.cutoff = cutoff;
    return s;
}

void s2_set(TruncSeries2& s, std::int64_t i, std::int64_t j, FqElem c) {
    if (i < 0 || j < 0) throw InternalError("charp.s2_set", "negative exponent");
    if (i + j >= s.cutoff || s.F->is_zero(c))
        s.t.erase({i, j});
    else
        s.t[{i, j}] = c;
}

FqElem s2_get(const TruncSeries2& s, std::int64_t i, std::int64_t j) {
    auto it = s.t.find({i, j});
    return it == s.t.end() ? s.F->zero() : it->second;
}

/* -------- conversions -------- */

PerfSeries to_perf(const TruncSeries& s) {
    PerfSeries r = ps_make(*s.F, Frac(s.cutoff));
    for (const auto& [e, c] : s.t) r.t.emplace(Frac(e), c);
    return r;
}

TruncSeries to_trunc(const PerfSeries& s) {
    // exponents >= C are unknown, so the integer world knows strictly below ceil(C)
    std::int64_t N = s.cutoff.num / s.cutoff.den + (s.cutoff.num % s.cutoff.den != 0 ? 1 : 0);
    TruncSeries r = ts_make(*s.F, std::max<std::int64_t>(N, 0));
    for (const auto& [e, c] : s.t) {
        if (e.den != 1)
            throw Error("charp.to_trunc", "series has a fractional exponent " + e.str());
        r.t.emplace(e.num, c);
    }
    return r;
}

/* -------- arithmetic -------- */

namespace {
template <typename S, typename Setter>
S addsub_impl(const S& a, const S& b, bool sub, Setter set, const char* where) {
    require_same_ctx(a.F, b.F, where);
    S r = a;
    if (b.cutoff < r.cutoff) r.cutoff = b.cutoff;
    for (auto it = r.t.begin(); it != r.t.end();)
        if (!(it->first < r.cutoff))
            it = r.t.erase(it);
        else
            ++it;
    for (const auto& [e, c] : b.t) {
        if (!(e < r.cutoff)) continue;
        auto it = r.t.find(e);
        FqElem cur = it == r.t.end() ? a.F->zero() : it->second;
        set(r, e, sub ? a.F->sub(cur, c) : a.F->add(cur, c));
    }
    return r;
}
} // namespace

TruncSeries ts_add(const TruncSeries& a, const TruncSeries& b) {
    return addsub_impl(a, b, false,
                       [](TruncSeries& s, std::int64_t e, FqElem c) { ts_set(s, e, c); },
                       "charp.ts_add");
}

TruncSeries ts_sub(const TruncSeries& a, const TruncSeries& b) {
    return addsub_impl(a, b, true,
                       [](TruncSeries& s, std::int64_t e, FqElem c) { ts_set(s, e, c); },
                       "charp.ts_sub");
}

TruncSeries ts_neg(const TruncSeries& a) {
    TruncSeries r = a;
    for (auto& [e, c] : r.t) c = a.F->neg(c);
    return r;
}

TruncSeries ts_scale(const TruncSeries& a, FqElem c) {
    TruncSeries r = ts_make(*a.F, a.cutoff);
    if (a.F->is_zero(c)) return r;
    for (const auto& [e, x] : a.t) r.t.emplace(e, a.F->mul(x, c));
    return r;
}

TruncSeries ts_truncate(const TruncSeries& a, std::int64_t cutoff) {
    TruncSeries r = a;
    r.cutoff = std::min(cutoff, a.cutoff);
    r.t.erase(r.t.lower_bound(r.cutoff), r.t.end());
    return r;
}

TruncSeries ts_mul(const TruncSeries& a, const TruncSeries& b) {
    require_same_ctx(a.F, b.F, "charp.ts_mul");
    std::int64_t lim = min_cutoff(a.cutoff, b.cutoff);
    TruncSeries r = ts_make(*a.F, std::max<std::int64_t>(lim, 0));
    if (a.t.empty() || b.t.empty() || lim <= 0) return r;
    std::size_t work = a.t.size() * b.t.size();
    if (work > (1u << 18) && lim <= ((std::int64_t)1 << 16)) {
        Planes pa = planes_from(a, lim), pb = planes_from(b, lim);
        return planes_to_series(planes_mul(pa, pb, lim), lim);
    }
    std::map<std::int64_t, FqElem> acc;
    for (const auto& [ea, ca] : a.t) {
        if (ea + b.t.begin()->first >= lim) break;
        for (const auto& [eb, cb] : b.t) {
            std::int64_t e = ea + eb;
            if (e >= lim) break;
            FqElem prod = a.F->mul(ca, cb);
            auto [it, fresh] = acc.emplace(e, prod);
            if (!fresh) it->second = a.F->add(it->second, prod);
        }
    }
    for (const auto& [e, c] : acc)
        if (!a.F->is_zero(c)) r.t.emplace(e, c);
    return r;
}

PerfSeries ps_add(const PerfSeries& a, const PerfSeries& b) {
    return addsub_impl(a, b, false, [](PerfSeries& s, Frac e, FqElem c) { ps_set(s, e, c); },
                       "charp.ps_add");
}

PerfSeries ps_sub(const PerfSeries& a, const PerfSeries& b) {
    return addsub_impl(a, b, true, [](PerfSeries& s, Frac e, FqElem c) { ps_set(s, e, c); },
                       "charp.ps_sub");
}

PerfSeries ps_scale(const PerfSeries& a, FqElem c) {
    PerfSeries r = ps_make(*a.F, a.cutoff);
    if (a.F->is_zero(c)) return r;
    for (const auto& [e, x] : a.t) r.t.emplace(e, a.F->mul(x, c));
    return r;
}

PerfSeries ps_truncate(const PerfSeries& a, Frac cutoff) {
    PerfSeries r = a;
    r.cutoff = frac_min(cutoff, a.cutoff);
    r.t.erase(r.t.lower_bound(r.cutoff), r.t.end());
    return r;
}

PerfSeries ps_mul(const PerfSeries& a, const PerfSeries& b) {
    require_same_ctx(a.F, b.F, "charp.ps_mul");
    Frac lim = frac_min(a.cutoff, b.cutoff);
    PerfSeries r = ps_make(*a.F, lim);
    if (a.t.empty() || b.t.empty()) return r;
    std::map<Frac, FqElem> acc;
    for (const auto& [ea, ca] : a.t)
        for (const auto& [eb, cb] : b.t) {
            Frac e = ea + eb;
            if (!(e < lim)) continue;
            FqElem prod = a.F->mul(ca, cb);
            auto [it, fresh] = acc.emplace(e, prod);
            if (!fresh) it->second = a.F->add(it->second, prod);
        }
    for (const auto& [e, c] : acc)
        if (!a.F->is_zero(c)) r.t.emplace(e, c);
    return r;
}

/* -------- valuations -------- */

std::optional<std::int64_t> ts_val(const TruncSeries& s) {
    if (s.t.empty()) return std::nullopt;
    return s.t.begin()->first;
}

std::optional<Frac> ps_val(const PerfSeries& s) {
    if (s.t.empty()) return std::nullopt;
    return s.t.begin()->first;
}

/* -------- Frobenius and levels -------- */

TruncSeries ts_frobenius(const TruncSeries& s, int n) {
    if (n < 0)
        throw InternalError("charp.ts_frobenius", "negative twist on an integer-exponent series");
    std::int64_t scale = pow_i64(s.F->p, n);
    TruncSeries r = ts_make(*s.F, mul_clamped(s.cutoff, scale));
    for (const auto& [e, c] : s.t) {
        __int128 ee = (__int128)e * scale;
        if (ee < r.cutoff) r.t.emplace((std::int64_t)ee, s.F->frobenius(c, n));
    }
    return r;
}

PerfSeries perf_frobenius(const PerfSeries& s, int n) {
    Frac scale = frac_pow(s.F->p, n);
    PerfSeries r = ps_make(*s.F, s.cutoff * scale);
    for (const auto& [e, c] : s.t) r.t.emplace(e * scale, s.F->frobenius(c, n));
    return r;
}

PerfLevel perf_level(const PerfSeries& s, int fK) {
    PerfLevel out;
    for (const auto& [e, c] : s.t) {
        (void)c;
        int l = denominator_power_of(e, s.F->p);
        if (l < 0) throw InternalError("charp.perf_level", "exponent denominator is not a p-power");
        out.level = std::max(out.level, l);
    }
    out.n = (out.level + fK - 1) / fK;
    return out;
}

/* -------- equality at the common cutoff -------- */

namespace {
template <typename S, typename Below>
bool eq_impl(const S& a, const S& b, Below below, const char* where) {
    require_same_ctx(a.F, b.F, where);
    auto ia = a.t.begin(), ib = b.t.begin();
    while (true) {
        while (ia != a.t.end() && !below(ia->first)) ++ia;
        while (ib != b.t.end() && !below(ib->first)) ++ib;
        bool ea = ia == a.t.end(), eb = ib == b.t.end();
        if (ea || eb) return ea && eb;
        if (!(ia->first == ib->first) || !(ia->second == ib->second)) return false;
        ++ia;
        ++ib;
    }
}
} // namespace

bool ts_eq(const TruncSeries& a, const TruncSeries& b) {
    std::int64_t lim = min_cutoff(a.cutoff, b.cutoff);
    return eq_impl(a, b, [lim](std::int64_t e) { return e < lim; }, "charp.ts_eq");
}

bool ps_eq(const PerfSeries& a, const PerfSeries& b) {
    Frac lim = frac_min(a.cutoff, b.cutoff);
    return eq_impl(a, b, [lim](const Frac& e) { return e < lim; }, "charp.ps_eq");
}

bool s2_eq(const TruncSeries2& a, const TruncSeries2& b) {
    std::int64_t lim = min_cutoff(a.cutoff, b.cutoff);
    return eq_impl(
        a, b,
        [lim](const std::pair<std::int64_t, std::int64_t>& e) { return e.first + e.second < lim; },
        "charp.s2_eq");
}

/* -------- derivative -------- */

TruncSeries ts_derivative(const TruncSeries& f) {
    TruncSeries r = ts_make(*f.F, std::max<std::int64_t>(f.cutoff - 1, 0));
    for (const auto& [e, c] : f.t) {
        if (e == 0) continue;
        std::int64_t m = e % f.F->p;
        if (m == 0) continue;
        ts_set(r, e - 1, f.F->mul(c, f.F->from_int(m)));
    }
    return r;
}

/* -------- composition -------- */

namespace {

TruncSeries ts_pow(const TruncSeries& g, std::int64_t t) {
    TruncSeries r = ts_make(*g.F, g.cutoff);
    ts_set(r, 0, g.F->one());
    TruncSeries base = g;
    while (t > 0) {
        if (t & 1) r = ts_mul(r, base);
        base = ts_mul(base, base);
        t >>= 1;
    }
    return r;
}

/* general dense route: f(g) via incremental powers of g */
TruncSeries compose_powers(const TruncSeries& f, const TruncSeries& g, std::int64_t lim) {
    const FqCtx& F = *f.F;
    std::int64_t vg = ts_val(g).value_or(std::max<std::int64_t>(g.cutoff, 1));
    std::vector<std::vector<std::uint64_t>> acc(F.f, std::vector<std::uint64_t>(lim, 0));
    FqElem c0 = ts_get(f, 0);
    if (!F.is_zero(c0)) {
        auto co = F.coords(c0);
        for (int a = 0; a < F.f; ++a) acc[a][0] += co[a];
    }
    Planes gp = planes_from(g, lim);
    Planes gk = gp;
    std::int64_t kmax = vg > 0 ? (lim - 1) / vg : 0;
    if (!f.t.empty()) kmax = std::min(kmax, f.t.rbegin()->first);
    for (std::int64_t k = 1; k <= kmax; ++k) {
        if (k > 1) gk = planes_mul(gk, gp, lim);
        FqElem a_k = ts_get(f, k);
        if (!F.is_zero(a_k)) planes_axpy(acc, a_k, 0, gk, lim);
    }
    return acc_to_series(F, acc, lim);
}

} // namespace

NearIdentityPlan::NearIdentityPlan(const TruncSeries& g, std::int64_t cutoff)
    : F_(g.F), cutoff_(cutoff) {
    if (cutoff < 0) throw InternalError("charp.near_identity", "negative cutoff");
    if (!(ts_get(g, 1) == g.F->one()))
        throw InternalError("charp.near_identity", "linear coefficient is not 1");
    if (g.t.count(0))
        throw InternalError("charp.near_identity", "inner series has a constant term");
    TruncSeries delta = g;
    delta.t.erase(1);
    delta.t.erase(delta.t.lower_bound(cutoff), delta.t.end());
    vdelta_ = ts_val(delta).value_or(cutoff);
    jmax_ = (vdelta_ > 0 && vdelta_ < cutoff) ? (cutoff - 1) / vdelta_ : 0;
    if (jmax_ == 0) return;
    Planes dp = planes_from(delta, cutoff);
    Planes cur = dp;
    pow_.reserve(jmax_);
    pow_.push_back(cur.v);
    for (std::int64_t j = 2; j <= jmax_; ++j) {
        cur = planes_mul(cur, dp, cutoff);
        pow_.push_back(cur.v);
    }
}

TruncSeries NearIdentityPlan::apply(const TruncSeries& f) const {
    const FqCtx& F = *F_;
    std::int64_t lim = min_cutoff(f.cutoff, cutoff_);
    if (lim <= 0) return ts_make(F, std::max<std::int64_t>(lim, 0));
    std::vector<std::vector<std::uint64_t>> acc(F.f, std::vector<std::uint64_t>(lim, 0));
    SmallBinom B(F.p);
    for (const auto& [k, a] : f.t) {
        // f(Y + D) = sum over j of C(k, j) a Y^{k-j} D^j (Hasse expansion)
        if (k < lim) {
            auto co = F.coords(a);
            for (int pl = 0; pl < F.f; ++pl) acc[pl][k] += co[pl];
        }
        std::int64_t jtop = std::min<std::int64_t>(k, jmax_);
        for (std::int64_t j = 1; j <= jtop; ++j) {
            if (k - j + j * vdelta_ >= lim) break;
            std::int64_t c = B.binom(k, j);
            if (c == 0) continue;
            FqElem w = F.mul(a, F.from_int(c));
            planes_axpy_raw(acc, F, w, k - j, pow_[j - 1].data(), cutoff_, j * vdelta_, lim);
        }
    }
    return acc_to_series(F, acc, lim);
}

TruncSeries ts_compose(const TruncSeries& f, const TruncSeries& g) {
    require_same_ctx(f.F, g.F, "charp.ts_compose");
    const FqCtx& F = *f.F;
    if (g.t.count(0)) throw Error("charp.ts_compose", "inner series has a constant term");
    std::int64_t vg = ts_val(g).value_or(std::max<std::int64_t>(g.cutoff, 1));
    std::int64_t lim = min_cutoff(mul_clamped(f.cutoff, vg), g.cutoff);
    FqElem c0 = ts_get(f, 0);
    if (f.t.empty() || (f.t.size() == 1 && f.t.count(0))) {
        TruncSeries r = ts_make(F, std::max<std::int64_t>(lim, 0));
        ts_set(r, 0, c0);
        return r;
    }
    if (lim <= 1) {
        // below Y^1 only the constant part of f is visible
        TruncSeries r = ts_make(F, std::max<std::int64_t>(lim, 0));
        ts_set(r, 0, c0);
        return r;
    }
    // common factor of the outer support: f = c0 + F1(Y^{p^r * tp})
    std::int64_t s = 0;
    for (const auto& [e, c] : f.t) {
        (void)c;
        if (e > 0) s = std::gcd(s, e);
    }
    if (s > 1) {
        int r_pow = 0;
        std::int64_t tp = s;
        while (tp % F.p == 0) {
            tp /= F.p;
            ++r_pow;
        }
        TruncSeries F1 = ts_make(F, (f.cutoff + s - 1) / s);
        for (const auto& [e, c] : f.t)
            if (e > 0) F1.t.emplace(e / s, c);
        TruncSeries h = r_pow > 0 ? ts_frobenius(g, r_pow) : g;
        if (tp > 1) h = ts_pow(h, tp);
        h = ts_truncate(h, lim);
        TruncSeries res = ts_compose(F1, h);
        res.cutoff = std::min(res.cutoff, lim);
        res.t.erase(res.t.lower_bound(res.cutoff), res.t.end());
        if (!F.is_zero(c0)) ts_set(res, 0, F.add(ts_get(res, 0), c0));
        return res;
    }
    // common factor of the inner support: g = v(Y^sg)
    std::int64_t sg = 0;
    for (const auto& [e, c] : g.t) {
        (void)c;
        sg = std::gcd(sg, e);
    }
    if (sg > 1) {
        TruncSeries v = ts_make(F, (g.cutoff + sg - 1) / sg);
        for (const auto& [e, c] : g.t) v.t.emplace(e / sg, c);
        TruncSeries inner = ts_compose(f, v);
        TruncSeries res = ts_make(F, std::min(mul_clamped(inner.cutoff, sg), lim));
        for (const auto& [e, c] : inner.t) {
            __int128 ee = (__int128)e * sg;
            if (ee < res.cutoff) res.t.emplace((std::int64_t)ee, c);
        }
        return res;
    }
    // near-identity fast path
    if (ts_get(g, 1) == F.one()) {
        TruncSeries delta = g;
        delta.t.erase(1);
        if (delta.t.empty()) return ts_truncate(f, lim);
        NearIdentityPlan plan(ts_truncate(g, lim), lim);
        return plan.apply(f);
    }
    return compose_powers(f, ts_truncate(g, lim), lim);
}

/* -------- compositional inverse -------- */

namespace {

/* multiplicative inverse of a unit series below lim */
TruncSeries ts_series_inv(const TruncSeries& u, std::int64_t lim) {
    const FqCtx& F = *u.F;
    FqElem c0 = ts_get(u, 0);
    if (F.is_zero(c0)) throw Error("charp.series_inv", "series has zero constant term");
    TruncSeries uc = ts_truncate(u, lim);
    TruncSeries z = ts_make(F, lim);
    ts_set(z, 0, F.inv(c0));
    TruncSeries two = ts_make(F, lim);
    ts_set(two, 0, F.from_int(2));
    std::int64_t reach = 1;
    while (reach < lim) {
        reach *= 2;
        z = ts_mul(z, ts_sub(two, ts_mul(uc, z)));
        z.cutoff = lim;
    }
    z.cutoff = std::min(lim, u.cutoff);
    return z;
}

} // namespace

TruncSeries ts_comp_inverse(const TruncSeries& f) {
    const FqCtx& F = *f.F;
    auto v = ts_val(f);
    if (!v || *v != 1)
        throw Error("charp.ts_comp_inverse",
                    "series is not invertible for composition (valuation != 1)");
    FqElem c1 = ts_get(f, 1);
    const std::int64_t N = f.cutoff;
    TruncSeries h = ts_make(F, 2);
    ts_set(h, 1, F.inv(c1));
    TruncSeries fd = ts_derivative(f);
    std::int64_t reach = 2;
    while (reach < N) {
        std::int64_t prev = reach;
        reach = std::min(reach * 2, N);
        TruncSeries hr = h;
        hr.cutoff = reach; // iterate taken as a polynomial; higher terms refined now
        TruncSeries e = ts_compose(ts_truncate(f, reach), hr);
        ts_set(e, 1, F.sub(ts_get(e, 1), F.one())); // e = f(h) - Y
        if (e.t.empty()) {
            h = hr;
            continue;
        }
        if (e.t.begin()->first < prev)
            throw InternalError("charp.ts_comp_inverse", "iteration lost convergence order");
        TruncSeries fdh = ts_compose(ts_truncate(fd, reach), hr);
        TruncSeries z = ts_series_inv(fdh, reach);
        // val(e) >= 2, so coefficients of z at degrees >= reach - 1 cannot
        // influence the correction below reach
        z.cutoff = reach;
        TruncSeries corr = ts_mul(e, z);
        h = ts_sub(hr, corr);
    }
    h.cutoff = N;
    TruncSeries idY = ts_identity(F, N);
    if (!ts_eq(ts_compose(f, h), idY) || !ts_eq(ts_compose(h, f), idY))
        throw InternalError("charp.ts_comp_inverse", "inverse failed composition verification");
    return h;
}

/* -------- bivariate checks -------- */

bool s2_is_symmetric(const TruncSeries2& S) {
    for (const auto& [e, c] : S.t)
        if (!(s2_get(S, e.second, e.first) == c)) return false;
    return true;
}

bool s2_assoc_check(const TruncSeries2& S) {
    const FqCtx& F = *S.F;
    const int f = F.f;
    const std::int64_t p = F.p;
    const std::int64_t N = S.cutoff;
    if (N <= 0 || S.t.empty()) return true;
    if (N > 400) throw InternalError("charp.s2_assoc", "cutoff too large for the dense check");
    // every cube cell accumulates at most 2*f*N products of two values < p
    if ((__int128)2 * f * N * (p - 1) * (p - 1) >= ((__int128)1 << 32))
        throw InternalError("charp.s2_assoc", "accumulator width insufficient at this size");

    auto red = basis_red_table(F);
    const std::size_t NN = (std::size_t)N * N;
    const std::size_t NNN = NN * N;

    // dense square planes of S; vW = min total degree drives valuation pruning
    std::vector<std::uint8_t> W((std::size_t)f * NN, 0);
    std::int64_t vW = N;
    std::vector<std::vector<std::pair<std::int64_t, FqElem>>> aterms(N), bterms(N);
    for (const auto& [e, c] : S.t) {
        if (e.first + e.second >= N || e.first < 0 || e.second < 0) continue;
        auto co = F.coords(c);
        for (int a = 0; a < f; ++a)
            W[(std::size_t)a * NN + (std::size_t)e.first * N + e.second] = co[a];
        vW = std::min(vW, e.first + e.second);
        aterms[e.first].push_back({e.second, c});
        bterms[e.second].push_back({e.first, c});
    }
    std::int64_t kmax = 0;
    for (std::int64_t k = 0; k < N; ++k)
        if (!aterms[k].empty() || !bterms[k].empty()) kmax = k;

    // one cube accumulates S(S(T,U),V) minus S(T,S(U,V)); must vanish mod p
    std::vector<std::vector<std::uint32_t>> cube(f, std::vector<std::uint32_t>(NNN, 0));

    // zeroth power of S contributes the bare third/first variable monomials
    for (auto& [j, c] : aterms[0]) {
        auto co = F.coords(c);
        for (int a = 0; a < f; ++a) cube[a][(std::size_t)j] += co[a]; // cell (0, 0, j)
    }
    for (auto& [m, c] : bterms[0]) {
        auto co = F.coords(c);
        for (int a = 0; a < f; ++a)
            cube[a][(std::size_t)m * NN] += (std::uint32_t)((p - co[a]) % p); // cell (m, 0, 0)
    }

    std::vector<std::uint8_t> Wk = W;
    std::vector<std::uint8_t> next((std::size_t)f * NN);
    std::vector<std::uint64_t> scratch((std::size_t)(2 * f - 1) * NN);

    auto accum = [&](std::int64_t k, const std::vector<std::uint8_t>& P) {
        // left side: term (k, j) of S lands on cells (i1, j1, j) weighted by P(i1, j1)
        for (auto& [j, c] : aterms[k]) {
            auto sco = F.coords(c);
            for (int pb = 0; pb < f; ++pb) {
                const std::uint8_t* Pp = P.data() + (std::size_t)pb * NN;
                for (int pa = 0; pa < f; ++pa) {
                    std::uint32_t wgt = 0;
                    for (int sa = 0; sa < f; ++sa)
                        wgt += (std::uint32_t)sco[sa] * red[((std::size_t)sa * f + pb) * f + pa];
                    wgt %= (std::uint32_t)p;
                    if (wgt == 0) continue;
                    std::uint32_t* C = cube[pa].data();
                    for (std::int64_t i1 = 0; i1 + j < N; ++i1) {
                        const std::uint8_t* row = Pp + (std::size_t)i1 * N;
                        std::uint32_t* crow = C + (std::size_t)i1 * NN + j;
                        std::int64_t jtop = N - i1 - j;
                        for (std::int64_t j1 = 0; j1 < jtop; ++j1)
                            if (row[j1]) crow[(std::size_t)j1 * N] += wgt * row[j1];
                    }
                }
            }
        }
        // right side, negated: term (m, k) of S lands on cells (m, i2, j2)
        for (auto& [m, c] : bterms[k]) {
            auto sco = F.coords(c);
            for (int pb = 0; pb < f; ++pb) {
                const std::uint8_t* Pp = P.data() + (std::size_t)pb * NN;
                for (int pa = 0; pa < f; ++pa) {
                    std::uint32_t wgt = 0;
                    for (int sa = 0; sa < f; ++sa)
                        wgt += (std::uint32_t)sco[sa] * red[((std::size_t)sa * f + pb) * f + pa];
                    wgt = (std::uint32_t)((p - wgt % p) % p);
                    if (wgt == 0) continue;
                    std::uint32_t* C = cube[pa].data() + (std::size_t)m * NN;
                    std::int64_t lim2 = N - m;
                    for (std::int64_t i2 = 0; i2 < lim2; ++i2) {
                        const std::uint8_t* row = Pp + (std::size_t)i2 * N;
                        std::uint32_t* crow = C + (std::size_t)i2 * N;
                        std::int64_t jtop = lim2 - i2;
                        for (std::int64_t j2 = 0; j2 < jtop; ++j2)
                            if (row[j2]) crow[j2] += wgt * row[j2];
                    }
                }
            }
        }
    };

    if (kmax >= 1) accum(1, Wk);
    for (std::int64_t k = 2; k <= kmax; ++k) {
        // next = Wk * W below total degree N; Wk has total-degree valuation (k-1)*vW
        std::int64_t vWk = (k - 1) * vW;
        std::fill(scratch.begin(), scratch.end(), 0);
        for (int pa = 0; pa < f; ++pa) {
            const std::uint8_t* A = Wk.data() + (std::size_t)pa * NN;
            for (int pb = 0; pb < f; ++pb) {
                const std::uint8_t* Bp = W.data() + (std::size_t)pb * NN;
                std::uint64_t* Sc = scratch.data() + (std::size_t)(pa + pb) * NN;
                for (std::int64_t i1 = 0; i1 + vW < N; ++i1) {
                    std::int64_t j1lo = std::max<std::int64_t>(0, vWk - i1);
                    for (std::int64_t j1 = j1lo; i1 + j1 + vW < N; ++j1) {
                        std::uint64_t x = A[(std::size_t)i1 * N + j1];
                        if (x == 0) continue;
                        std::int64_t room = N - i1 - j1; // need i2 + j2 < room
                        for (std::int64_t i2 = 0; i2 < room; ++i2) {
                            const std::uint8_t* brow = Bp + (std::size_t)i2 * N;
                            std::uint64_t* srow = Sc + (std::size_t)(i1 + i2) * N + j1;
                            std::int64_t jt = room - i2;
                            for (std::int64_t j2 = 0; j2 < jt; ++j2)
                                if (brow[j2]) srow[j2] += x * brow[j2];
                        }
                    }
                }
            }
        }
        std::fill(next.begin(), next.end(), 0);
        for (int c = 0; c < f; ++c) {
            std::uint8_t* O = next.data() + (std::size_t)c * NN;
            for (int s = 0; s < 2 * f - 1; ++s) {
                int pa = std::min<int>(s, f - 1), pb = s - pa;
                std::uint8_t m = red[((std::size_t)pa * f + pb) * f + c];
                if (m == 0) continue;
                const std::uint64_t* Sc = scratch.data() + (std::size_t)s * NN;
                for (std::size_t e = 0; e < NN; ++e)
                    O[e] = (std::uint8_t)((O[e] + m * (Sc[e] % p)) % p);
            }
        }
        Wk.swap(next);
        accum(k, Wk);
    }

    for (int a = 0; a < f; ++a)
        for (std::size_t cell = 0; cell < NNN; ++cell)
            if (cube[a][cell] % p != 0) {
                std::size_t i = cell / NN, r2 = cell % NN;
                if (i + r2 / N + r2 % N < (std::size_t)N) return false;
            }
    return true;
}

/* -------- Laurent plumbing -------- */

LaurentSeries l_make(Frac shift, PerfSeries body) { return LaurentSeries{shift, std::move(body)}; }

LaurentSeries l_add(const LaurentSeries& a, const LaurentSeries& b) {
    Frac common = frac_min(a.shift, b.shift);
    auto rebase = [&](const LaurentSeries& s) {
        Frac d = s.shift - common;
        PerfSeries r = ps_make(*s.body.F, s.body.cutoff + d);
        for (const auto& [e, c] : s.body.t) r.t.emplace(e + d, c);
        return r;
    };
    PerfSeries sum = ps_add(rebase(a), rebase(b));
    return LaurentSeries{common, std::move(sum)};
}

LaurentSeries l_mul(const LaurentSeries& a, const LaurentSeries& b) {
    return LaurentSeries{a.shift + b.shift, ps_mul(a.body, b.body)};
}

std::optional<Frac> l_val(const LaurentSeries& a) {
    auto v = ps_val(a.body);
    if (!v) return std::nullopt;
    return *v + a.shift;
}

} // namespace ltsh
