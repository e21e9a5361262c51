#include "ltsh/okring.hpp"

#include <algorithm>

namespace ltsh {

namespace {

/* ---- F_p[x] helpers for the build-time irreducibility test ---- */

using Poly = std::vector<std::int64_t>; // little-endian, coeffs in [0, p)

void trim(Poly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

Poly pmod(const Poly& a, const Poly& m, std::int64_t p) {
    // m is monic
    Poly r = a;
    trim(r);
    while (r.size() >= m.size()) {
        std::int64_t c = r.back();
        std::size_t shift = r.size() - m.size();
        for (std::size_t i = 0; i < m.size(); ++i) {
            std::int64_t& t = r[shift + i];
            t = (t - c * m[i]) % p;
            if (t < 0) t += p;
        }
        trim(r);
    }
    return r;
}

Poly pmul(const Poly& a, const Poly& b, const Poly& m, std::int64_t p) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            r[i + j] = (r[i + j] + a[i] * b[j]) % p;
    return pmod(r, m, p);
}

Poly ppow(Poly base, std::int64_t e, const Poly& m, std::int64_t p) {
    Poly r = {1};
    while (e > 0) {
        if (e & 1) r = pmul(r, base, m, p);
        base = pmul(base, base, m, p);
        e >>= 1;
    }
    return r;
}

Poly pgcd(Poly a, Poly b, std::int64_t p) {
    auto inv_mod_p = [p](std::int64_t v) {
        std::int64_t r = 1, e = p - 2, base = v % p;
        while (e > 0) {
            if (e & 1) r = r * base % p;
            base = base * base % p;
            e >>= 1;
        }
        return r;
    };
    trim(a);
    trim(b);
    while (!b.empty()) {
        // make b monic, reduce a mod b
        std::int64_t li = inv_mod_p(b.back());
        Poly bm = b;
        for (auto& c : bm) c = c * li % p;
        a = pmod(a, bm, p);
        std::swap(a, b);
    }
    return a;
}

/* x^(p^k) mod m */
Poly frob_power_of_x(int k, const Poly& m, std::int64_t p) {
    Poly t = {0, 1};
    for (int i = 0; i < k; ++i) t = ppow(t, p, m, p);
    return t;
}

bool is_irreducible(const Poly& m, std::int64_t p) {
    int f = (int)m.size() - 1;
    if (f < 1) return false;
    if (f == 1) return true;
    Poly xpf = frob_power_of_x(f, m, p);
    Poly x = pmod({0, 1}, m, p);
    if (xpf != x) return false;
    for (int r = 2; r <= f; ++r) {
        if (f % r != 0) continue;
        bool prime = true;
        for (int s = 2; s * s <= r; ++s)
            if (r % s == 0) { prime = false; break; }
        if (!prime) continue;
        Poly t = frob_power_of_x(f / r, m, p);
        // gcd(t - x, m) must be 1
        Poly diff = t;
        if (diff.size() < 2) diff.resize(2, 0);
        diff[1] = (diff[1] - 1 % p + p) % p;
        trim(diff);
        Poly g = pgcd(diff, m, p);
        if (g.size() > 1) return false;
    }
    return true;
}

bool is_prime_small(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t i = 2; i * i <= n; ++i)
        if (n % i == 0) return false;
    return true;
}

std::uint64_t inv_mod_pow2free(std::uint64_t a, std::uint64_t mod) {
    // extended gcd; a must be a unit mod `mod`
    __int128 t = 0, newt = 1, r = mod, newr = a % mod;
    while (newr != 0) {
        __int128 qq = r / newr;
        __int128 tmp = t - qq * newt;
        t = newt;
        newt = tmp;
        tmp = r - qq * newr;
        r = newr;
        newr = tmp;
    }
    if (r != 1) throw Error("okring.inv_mod", "not a unit");
    if (t < 0) t += mod;
    return (std::uint64_t)t;
}

} // namespace

/* ---------------- FqCtx ---------------- */

FqCtx FqCtx::build(std::int64_t p, const std::vector<std::int64_t>& m_poly) {
    if (p == 2) throw ConfigError("okring.fq_build", "p = 2 is out of scope (odd residue characteristic required)");
    if (p > 1024) throw ConfigError("okring.fq_build", "q = p^f exceeds the supported table size (q <= 1024)");
    if (!is_prime_small(p)) throw ConfigError("okring.fq_build", "p = " + std::to_string(p) + " is not prime");
    if (m_poly.size() < 2) throw ConfigError("okring.fq_build", "m_poly must have degree >= 1");
    FqCtx ctx;
    ctx.p = p;
    ctx.f = (int)m_poly.size() - 1;
    ctx.m_mod_p.resize(m_poly.size());
    for (std::size_t i = 0; i < m_poly.size(); ++i) {
        std::int64_t c = m_poly[i] % p;
        if (c < 0) c += p;
        ctx.m_mod_p[i] = (std::uint8_t)c;
    }
    if (ctx.m_mod_p.back() != 1)
        throw ConfigError("okring.fq_build", "m_poly must be monic (mod p)");
    std::int64_t q = 1;
    for (int i = 0; i < ctx.f; ++i) {
        q *= p;
        if (q > 1024)
            throw ConfigError("okring.fq_build", "q = p^f exceeds the supported table size (q <= 1024)");
    }
    ctx.q = q;

    Poly m(ctx.m_mod_p.begin(), ctx.m_mod_p.end());
    if (!is_irreducible(m, p))
        throw ConfigError("okring.fq_build", "m_poly is reducible mod p");

    // coordinate codecs
    auto to_coords = [&](std::uint16_t idx) {
        std::vector<std::int64_t> c(ctx.f);
        for (int i = 0; i < ctx.f; ++i) { c[i] = idx % p; idx = (std::uint16_t)(idx / p); }
        return c;
    };
    auto from_coords_ = [&](const std::vector<std::int64_t>& c) {
        std::int64_t idx = 0, w = 1;
        for (int i = 0; i < ctx.f; ++i) { idx += (c[i] % p) * w; w *= p; }
        return (std::uint16_t)idx;
    };

    ctx.add_t_.resize((std::size_t)q * q);
    ctx.mul_t_.resize((std::size_t)q * q);
    ctx.neg_t_.resize(q);
    ctx.inv_t_.resize(q);
    ctx.frob_t_.resize(q);

    for (std::int64_t a = 0; a < q; ++a) {
        auto ca = to_coords((std::uint16_t)a);
        std::vector<std::int64_t> cn(ctx.f);
        for (int i = 0; i < ctx.f; ++i) cn[i] = (p - ca[i]) % p;
        ctx.neg_t_[a] = from_coords_(cn);
        for (std::int64_t b = 0; b < q; ++b) {
            auto cb = to_coords((std::uint16_t)b);
            std::vector<std::int64_t> cs(ctx.f);
            for (int i = 0; i < ctx.f; ++i) cs[i] = (ca[i] + cb[i]) % p;
            ctx.add_t_[a * q + b] = from_coords_(cs);
            Poly prod = pmul(Poly(ca.begin(), ca.end()), Poly(cb.begin(), cb.end()), m, p);
            prod.resize(ctx.f, 0);
            ctx.mul_t_[a * q + b] = from_coords_(prod);
        }
    }
    for (std::int64_t a = 1; a < q; ++a) {
        ctx.inv_t_[a] = ctx.pow(FqElem{(std::uint16_t)a}, q - 2).idx;
        ctx.frob_t_[a] = ctx.pow(FqElem{(std::uint16_t)a}, p).idx;
    }
    ctx.inv_t_[0] = 0;
    ctx.frob_t_[0] = 0;
    return ctx;
}

FqElem FqCtx::pow(FqElem a, std::int64_t e) const {
    if (e < 0) { a = inv(a); e = -e; }
    FqElem r = one();
    while (e > 0) {
        if (e & 1) r = mul(r, a);
        a = mul(a, a);
        e >>= 1;
    }
    return r;
}

FqElem FqCtx::from_coords(const std::vector<std::uint8_t>& c) const {
    std::int64_t idx = 0, w = 1;
    for (int i = 0; i < f; ++i) {
        std::int64_t v = i < (int)c.size() ? c[i] % p : 0;
        idx += v * w;
        w *= p;
    }
    return FqElem{(std::uint16_t)idx};
}

std::vector<std::uint8_t> FqCtx::coords(FqElem a) const {
    std::vector<std::uint8_t> c(f);
    std::uint16_t idx = a.idx;
    for (int i = 0; i < f; ++i) { c[i] = (std::uint8_t)(idx % p); idx = (std::uint16_t)(idx / p); }
    return c;
}

FqElem FqCtx::from_int(std::int64_t n) const {
    std::int64_t v = n % p;
    if (v < 0) v += p;
    return FqElem{(std::uint16_t)v};
}

/* ---------------- OKRing ---------------- */

OKRing OKRing::build(std::int64_t p, const std::vector<std::int64_t>& m_poly,
                     const std::vector<std::int64_t>& E_poly, int M) {
    OKRing R;
    R.p = p;
    R.M = M;
    R.m_poly = m_poly;
    R.E_poly = E_poly;
    if (M < 2) throw ConfigError("okring.build", "precision M must be >= 2");
    R.Fq = FqCtx::build(p, m_poly); // validates p and m_poly mod p
    if (m_poly.back() != 1) throw ConfigError("okring.build", "m_poly must be monic over the integers");
    R.fK = R.Fq.f;
    R.q = R.Fq.q;
    if (E_poly.size() < 2) throw ConfigError("okring.build", "E_poly must have degree >= 1");
    if (E_poly.back() != 1) throw ConfigError("okring.build", "E_poly must be monic");
    R.eK = (int)E_poly.size() - 1;
    R.d = R.eK * R.fK;
    if (R.d > OKElem::max_d)
        throw ConfigError("okring.build", "d = e*f exceeds the supported rank (d <= 8)");
    for (int i = 0; i < R.eK; ++i)
        if (E_poly[i] % p != 0)
            throw ConfigError("okring.build", "E_poly is not Eisenstein: coefficient " + std::to_string(i) +
                                                  " is a unit");
    if ((E_poly[0] / p) % p == 0)
        throw ConfigError("okring.build", "E_poly is not Eisenstein: constant term divisible by p^2");

    __int128 pm = 1;
    for (int i = 0; i < M; ++i) {
        pm *= p;
        if (pm > (__int128)1 << 62)
            throw ConfigError("okring.build", "p^M exceeds the 64-bit working range");
    }
    R.pM = (std::uint64_t)pm;

    auto redc = [&](std::int64_t v) {
        std::int64_t r = v % (std::int64_t)R.pM;
        if (r < 0) r += (std::int64_t)R.pM;
        return (std::uint64_t)r;
    };

    // u0 = E_0 / p for e >= 2, (-E_0)/p for e == 1 (where pi = -E_0 is the
    // image of the Eisenstein root y); both are units by the checks above.
    std::int64_t u0_int = R.eK == 1 ? -E_poly[0] / p : E_poly[0] / p;
    R.u0_inv_ = inv_mod_pow2free(redc(u0_int), R.pM);

    /* Basis multiplication table via bivariate reduction. Representation
       during reduction: grid[ydeg][xdeg] over Z/p^M. */
    int f = R.fK, e = R.eK, d = R.d;
    R.mult_table_.assign((std::size_t)d * d * d, 0);
    auto mt = [&](int i, int j, int k) -> std::uint64_t& {
        return R.mult_table_[((std::size_t)i * d + j) * d + k];
    };
    for (int i = 0; i < d; ++i) {
        int a1 = i % f, b1 = i / f;
        for (int j = 0; j < d; ++j) {
            int a2 = j % f, b2 = j / f;
            std::vector<std::vector<std::uint64_t>> grid(2 * e - 1,
                                                         std::vector<std::uint64_t>(2 * f - 1, 0));
            grid[b1 + b2][a1 + a2] = 1;
            // reduce y-degree with E (integer scalar coefficients)
            for (int t = 2 * e - 2; t >= e; --t) {
                for (int xi = 0; xi < 2 * f - 1; ++xi) {
                    std::uint64_t c = grid[t][xi];
                    if (c == 0) continue;
                    grid[t][xi] = 0;
                    for (int s = 0; s < e; ++s) {
                        std::uint64_t sub = (std::uint64_t)((__int128)c * redc(E_poly[s]) % R.pM);
                        std::uint64_t& tgt = grid[t - e + s][xi];
                        tgt = (tgt + R.pM - sub) % R.pM;
                    }
                }
            }
            // reduce x-degree with m
            for (int t = 0; t < e; ++t) {
                for (int xi = 2 * f - 2; xi >= f; --xi) {
                    std::uint64_t c = grid[t][xi];
                    if (c == 0) continue;
                    grid[t][xi] = 0;
                    for (int s = 0; s < f; ++s) {
                        std::uint64_t sub = (std::uint64_t)((__int128)c * redc(m_poly[s]) % R.pM);
                        std::uint64_t& tgt = grid[t][xi - f + s];
                        tgt = (tgt + R.pM - sub) % R.pM;
                    }
                }
            }
            for (int k = 0; k < d; ++k) mt(i, j, k) = grid[k / f][k % f];
        }
    }

    /* The table defines the ring; check the ring laws exhaustively on basis
       monomials (enough by bilinearity). */
    auto basis = [&](int i) {
        OKElem b{};
        b.c[i] = 1;
        b.kappa = (std::int16_t)R.kappa_max();
        return b;
    };
    for (int i = 0; i < d; ++i) {
        if (!(R.mul(R.one(), basis(i)) == basis(i)))
            throw InternalError("okring.build", "unit law fails on the multiplication table");
        for (int j = 0; j < d; ++j) {
            if (!(R.mul(basis(i), basis(j)) == R.mul(basis(j), basis(i))))
                throw InternalError("okring.build", "multiplication table is not commutative");
            for (int k = 0; k < d; ++k) {
                OKElem lhs = R.mul(R.mul(basis(i), basis(j)), basis(k));
                OKElem rhs = R.mul(basis(i), R.mul(basis(j), basis(k)));
                if (!(lhs == rhs))
                    throw InternalError("okring.build", "multiplication table is not associative");
            }
        }
    }
    return R;
}

OKElem OKRing::zero() const {
    OKElem z{};
    z.kappa = (std::int16_t)kappa_max();
    return z;
}

OKElem OKRing::one() const {
    OKElem z = zero();
    z.c[0] = 1;
    return z;
}

OKElem OKRing::pi() const {
    OKElem z = zero();
    if (eK == 1) {
        std::int64_t c = -E_poly[0] % (std::int64_t)pM;
        if (c < 0) c += (std::int64_t)pM;
        z.c[0] = (std::uint64_t)c;
    } else {
        z.c[fK] = 1; // x^0 y^1
    }
    return z;
}

OKElem OKRing::from_int(std::int64_t n) const {
    OKElem z = zero();
    std::int64_t r = n % (std::int64_t)pM;
    if (r < 0) r += (std::int64_t)pM;
    z.c[0] = (std::uint64_t)r;
    return z;
}

OKElem OKRing::from_coords(const std::vector<std::int64_t>& coords) const {
    if ((int)coords.size() > d)
        throw ConfigError("okring.from_coords", "coordinate list longer than the rank d");
    OKElem z = zero();
    for (std::size_t i = 0; i < coords.size(); ++i) {
        std::int64_t r = coords[i] % (std::int64_t)pM;
        if (r < 0) r += (std::int64_t)pM;
        z.c[i] = (std::uint64_t)r;
    }
    return z;
}

std::vector<std::uint64_t> OKRing::coords(const OKElem& x) const {
    return std::vector<std::uint64_t>(x.c.begin(), x.c.begin() + d);
}

OKElem OKRing::add(const OKElem& a, const OKElem& b) const {
    OKElem r{};
    for (int i = 0; i < d; ++i) {
        std::uint64_t s = a.c[i] + b.c[i];
        r.c[i] = s >= pM ? s - pM : s;
    }
    r.kappa = std::min(a.kappa, b.kappa);
    return r;
}

OKElem OKRing::sub(const OKElem& a, const OKElem& b) const {
    OKElem r{};
    for (int i = 0; i < d; ++i) {
        std::uint64_t s = a.c[i] + pM - b.c[i];
        r.c[i] = s >= pM ? s - pM : s;
    }
    r.kappa = std::min(a.kappa, b.kappa);
    return r;
}

OKElem OKRing::neg(const OKElem& a) const { return sub(zero(), a); }

OKElem OKRing::mul(const OKElem& a, const OKElem& b) const {
    OKElem r{};
    std::array<__int128, OKElem::max_d> acc{};
    for (int i = 0; i < d; ++i) {
        if (a.c[i] == 0) continue;
        for (int j = 0; j < d; ++j) {
            if (b.c[j] == 0) continue;
            std::uint64_t cij = mod_mul(a.c[i], b.c[j]);
            const std::uint64_t* row = &mult_table_[((std::size_t)i * d + j) * d];
            for (int k = 0; k < d; ++k) acc[k] += (__int128)cij * row[k];
        }
    }
    for (int k = 0; k < d; ++k) r.c[k] = (std::uint64_t)(acc[k] % pM);
    int va = val_pi_capped(a), vb = val_pi_capped(b);
    int kr = std::min(va + b.kappa, vb + a.kappa);
    r.kappa = (std::int16_t)std::min(kr, kappa_max());
    return r;
}

OKElem OKRing::mul_int(const OKElem& a, std::int64_t n) const {
    std::int64_t r = n % (std::int64_t)pM;
    if (r < 0) r += (std::int64_t)pM;
    OKElem out{};
    for (int i = 0; i < d; ++i) out.c[i] = mod_mul(a.c[i], (std::uint64_t)r);
    // the scalar is exact; only its valuation boosts trust
    OKElem scal = from_int(n);
    int vs = val_pi_capped(scal);
    out.kappa = (std::int16_t)std::min(a.kappa + vs, kappa_max());
    return out;
}

int OKRing::val_pi_capped(const OKElem& x) const {
    auto val_p_u64 = [&](std::uint64_t v) {
        if (v == 0) return M;
        int k = 0;
        while (v % (std::uint64_t)p == 0) { v /= (std::uint64_t)p; ++k; }
        return k;
    };
    int best = kappa_max();
    for (int b = 0; b < eK; ++b) {
        int wv = M;
        for (int a = 0; a < fK; ++a) wv = std::min(wv, val_p_u64(x.c[a + fK * b]));
        if (wv < M) best = std::min(best, eK * wv + b);
    }
    return std::min(best, (int)x.kappa);
}

std::optional<Frac> OKRing::val(const OKElem& x) const {
    int v = val_pi_capped(x);
    if (v >= x.kappa) return std::nullopt;
    return Frac(v, eK);
}

OKElem OKRing::shift_down_one(const OKElem& x) const {
    if (x.kappa < 1)
        throw PrecisionError("okring.div_exact", "no trusted digits left to divide");
    OKElem r{};
    if (eK == 1) {
        for (int a = 0; a < fK; ++a) {
            if (x.c[a] % (std::uint64_t)p != 0)
                throw Error("okring.div_exact", "inexact division (operand not divisible by pi)");
            r.c[a] = mod_mul(x.c[a] / (std::uint64_t)p, u0_inv_);
        }
    } else {
        // z_{e-1} = -(w_0/p) * u0^{-1};  z_{b-1} = w_b + z_{e-1} * E_b
        std::array<std::uint64_t, OKElem::max_d> ztop{};
        for (int a = 0; a < fK; ++a) {
            if (x.c[a] % (std::uint64_t)p != 0)
                throw Error("okring.div_exact", "inexact division (operand not divisible by pi)");
            std::uint64_t t = mod_mul(x.c[a] / (std::uint64_t)p, u0_inv_);
            ztop[a] = (pM - t) % pM;
            r.c[a + fK * (eK - 1)] = ztop[a];
        }
        for (int b = 1; b < eK; ++b) {
            std::int64_t Eb = E_poly[b] % (std::int64_t)pM;
            if (Eb < 0) Eb += (std::int64_t)pM;
            for (int a = 0; a < fK; ++a) {
                std::uint64_t t = x.c[a + fK * b] + mod_mul(ztop[a], (std::uint64_t)Eb);
                r.c[a + fK * (b - 1)] = t % pM;
            }
        }
    }
    r.kappa = (std::int16_t)(x.kappa - 1);
    return r;
}

OKElem OKRing::shift_down(const OKElem& x, int j) const {
    OKElem r = x;
    for (int i = 0; i < j; ++i) r = shift_down_one(r);
    return r;
}

OKElem OKRing::div_exact(const OKElem& x, const OKElem& y) const {
    int vy = val_pi_capped(y);
    if (vy >= y.kappa)
        throw PrecisionError("okring.div_exact", "divisor indistinguishable from zero at its precision");
    if (vy > 0) {
        int vx = val_pi_capped(x);
        if (vx < vy && vx < x.kappa)
            throw Error("okring.div_exact", "inexact division (valuation of divisor exceeds dividend)");
        if (x.kappa < vy)
            throw PrecisionError("okring.div_exact", "dividend precision below divisor valuation");
    }
    OKElem u = vy > 0 ? shift_down(y, vy) : y;
    OKElem z = mul(x, inv_unit(u));
    z = vy > 0 ? shift_down(z, vy) : z;
    if (z.kappa < 1)
        throw PrecisionError("okring.div_exact", "result has no trusted digits");
    return z;
}

OKElem OKRing::inv_unit(const OKElem& u) const {
    FqElem r0 = residue_of(u);
    if (Fq.is_zero(r0)) throw Error("okring.inv_unit", "element is not a unit");
    OKElem z = lift_residue(Fq.inv(r0));
    int steps = 1;
    while ((1 << steps) < kappa_max() + 1) ++steps;
    OKElem two = from_int(2);
    for (int i = 0; i <= steps; ++i) z = mul(z, sub(two, mul(u, z)));
    OKElem check = sub(mul(u, z), one());
    if (val_pi_capped(check) < std::min<int>(u.kappa, check.kappa))
        throw InternalError("okring.inv_unit", "Newton lift failed to certify u * u^{-1} = 1");
    z.kappa = u.kappa;
    return z;
}

FqElem OKRing::residue_of(const OKElem& x) const {
    if (x.kappa < 1)
        throw PrecisionError("okring.residue_of", "no trusted digits: residue undefined");
    std::vector<std::uint8_t> c(fK);
    for (int a = 0; a < fK; ++a) c[a] = (std::uint8_t)(x.c[a] % (std::uint64_t)p);
    return Fq.from_coords(c);
}

OKElem OKRing::lift_residue(FqElem r) const {
    auto c = Fq.coords(r);
    OKElem z = zero();
    for (int a = 0; a < fK; ++a) z.c[a] = c[a];
    return z;
}

bool OKRing::is_unit(const OKElem& x) const {
    return x.kappa >= 1 && !Fq.is_zero(residue_of(x));
}

OKElem OKRing::random(Rng& rng) const {
    OKElem z = zero();
    for (int i = 0; i < d; ++i) z.c[i] = rng.below(pM);
    return z;
}

OKElem OKRing::random_unit(Rng& rng) const {
    for (;;) {
        OKElem z = random(rng);
        if (is_unit(z)) return z;
    }
}

std::string OKRing::describe() const {
    auto poly_str = [](const std::vector<std::int64_t>& c) {
        std::string s = "[";
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(c[i]);
        }
        return s + "]";
    };
    return "p=" + std::to_string(p) + " f=" + std::to_string(fK) + " e=" + std::to_string(eK) +
           " q=" + std::to_string(q) + " M=" + std::to_string(M) + " m_poly=" + poly_str(m_poly) +
           " E_poly=" + poly_str(E_poly);
}

/* ---------------- BinomModPM ---------------- */

BinomModPM::BinomModPM(std::int64_t p, int M, std::int64_t n_max) : p_(p), M_(M) {
    __int128 pm = 1;
    for (int i = 0; i < M; ++i) pm *= p;
    pM_ = (std::uint64_t)pm;
    unit_prefix_.resize(n_max + 1);
    unit_prefix_[0] = 1;
    for (std::int64_t i = 1; i <= n_max; ++i) {
        if (i % p == 0)
            unit_prefix_[i] = unit_prefix_[i - 1];
        else
            unit_prefix_[i] = (std::uint64_t)((__int128)unit_prefix_[i - 1] * (i % (std::int64_t)pM_) % pM_);
    }
}

std::int64_t BinomModPM::sum_digits(std::int64_t n) const {
    std::int64_t s = 0;
    while (n > 0) { s += n % p_; n /= p_; }
    return s;
}

int BinomModPM::val_p_binom(std::int64_t n, std::int64_t k) const {
    return (int)((sum_digits(k) + sum_digits(n - k) - sum_digits(n)) / (p_ - 1));
}

std::uint64_t BinomModPM::at(std::int64_t n, std::int64_t k) const {
    if (k < 0 || k > n) return 0;
    int v = val_p_binom(n, k);
    if (v >= M_) return 0;
    auto unit_fact = [&](std::int64_t m) {
        __int128 u = 1;
        while (m > 0) {
            u = u * unit_prefix_[m] % pM_;
            m /= p_;
        }
        return (std::uint64_t)u;
    };
    std::uint64_t num = unit_fact(n);
    std::uint64_t den = (std::uint64_t)((__int128)unit_fact(k) * unit_fact(n - k) % pM_);
    std::uint64_t r = (std::uint64_t)((__int128)num * inv_mod_pow2free(den, pM_) % pM_);
    for (int i = 0; i < v; ++i) r = (std::uint64_t)((__int128)r * p_ % pM_);
    return r;
}

} // namespace ltsh
