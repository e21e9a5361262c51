#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ltsh/errors.hpp"
#include "ltsh/fraction.hpp"
#include "ltsh/rng.hpp"

namespace ltsh {

/* Residue field F_q = F_p[x]/(m mod p), q = p^f. Elements are indices
   idx = sum c_a p^a for the coordinate vector (c_0..c_{f-1}); all arithmetic
   goes through tables built once, so the hot paths are pure lookups.
   Supported size is capped (q <= 1024) to keep the tables cache-friendly;
   the tool targets desk-scale fields. */
struct FqElem {
    std::uint16_t idx = 0;
    friend bool operator==(FqElem a, FqElem b) { return a.idx == b.idx; }
    friend bool operator!=(FqElem a, FqElem b) { return a.idx != b.idx; }
    friend bool operator<(FqElem a, FqElem b) { return a.idx < b.idx; }
};

class FqCtx {
public:
    std::int64_t p = 0;
    int f = 0;
    std::int64_t q = 0;
    std::vector<std::uint8_t> m_mod_p; // monic irreducible, little-endian, length f+1

    /* Validates primality of p (p >= 3), monicity and irreducibility of m mod p. */
    static FqCtx build(std::int64_t p, const std::vector<std::int64_t>& m_poly);

    FqElem zero() const { return FqElem{0}; }
    FqElem one() const { return FqElem{1}; }
    bool is_zero(FqElem a) const { return a.idx == 0; }

    FqElem add(FqElem a, FqElem b) const { return FqElem{add_t_[a.idx * q + b.idx]}; }
    FqElem sub(FqElem a, FqElem b) const { return add(a, neg(b)); }
    FqElem neg(FqElem a) const { return FqElem{neg_t_[a.idx]}; }
    FqElem mul(FqElem a, FqElem b) const { return FqElem{mul_t_[a.idx * q + b.idx]}; }
    FqElem inv(FqElem a) const {
        if (a.idx == 0) throw Error("okring.fq_inv", "inverse of zero");
        return FqElem{inv_t_[a.idx]};
    }
    FqElem pow(FqElem a, std::int64_t e) const;

    /* phi^n with phi(x) = x^p; negative n uses perfectness (phi has order f). */
    FqElem frobenius(FqElem a, std::int64_t n) const {
        std::int64_t r = ((n % f) + f) % f;
        for (std::int64_t i = 0; i < r; ++i) a = FqElem{frob_t_[a.idx]};
        return a;
    }

    FqElem from_coords(const std::vector<std::uint8_t>& c) const;
    std::vector<std::uint8_t> coords(FqElem a) const;
    FqElem from_int(std::int64_t n) const; // image of a rational integer

    FqElem random(Rng& rng) const { return FqElem{(std::uint16_t)rng.below((std::uint64_t)q)}; }
    FqElem random_nonzero(Rng& rng) const { return FqElem{(std::uint16_t)(1 + rng.below((std::uint64_t)(q - 1)))}; }

private:
    std::vector<std::uint16_t> add_t_, mul_t_;
    std::vector<std::uint16_t> neg_t_, inv_t_, frob_t_;
};

/* Element of O_K at working precision p^M. Coordinates over the basis
   x^a y^b (a < f_K, b < e_K), stored index a + f_K*b, each mod p^M.
   kappa counts trusted pi-adic digits: the stored value differs from the
   true one by something of valuation >= kappa/e_K (in p-units). Arithmetic
   never creates trust it does not have; exact division is the only
   operation that spends digits. */
struct OKElem {
    static constexpr int max_d = 8;
    std::array<std::uint64_t, max_d> c{};
    std::int16_t kappa = 0; // pi-digits, <= e_K * M

    friend bool operator==(const OKElem& a, const OKElem& b) {
        return a.c == b.c && a.kappa == b.kappa;
    }
};

class OKRing {
public:
    std::int64_t p = 0;
    int M = 0;
    int fK = 0, eK = 0, d = 0;
    std::int64_t q = 0;
    std::uint64_t pM = 0;
    std::vector<std::int64_t> m_poly, E_poly; // little-endian integer coefficients
    FqCtx Fq;

    /* Builds the ring and validates everything: p odd prime, m_poly monic and
       irreducible mod p, E_poly monic Eisenstein (integer coefficients,
       val_p = 1 exactly at the constant term), M >= 2, d <= 8. The basis
       multiplication table is checked exhaustively for associativity,
       commutativity and the unit law before the ring is returned. */
    static OKRing build(std::int64_t p, const std::vector<std::int64_t>& m_poly,
                        const std::vector<std::int64_t>& E_poly, int M);

    int kappa_max() const { return eK * M; }

    OKElem zero() const;
    OKElem one() const;
    OKElem pi() const;
    OKElem from_int(std::int64_t n) const;
    OKElem from_coords(const std::vector<std::int64_t>& coords) const;
    std::vector<std::uint64_t> coords(const OKElem& x) const;

    OKElem add(const OKElem& a, const OKElem& b) const;
    OKElem sub(const OKElem& a, const OKElem& b) const;
    OKElem neg(const OKElem& a) const;
    OKElem mul(const OKElem& a, const OKElem& b) const;
    OKElem mul_int(const OKElem& a, std::int64_t n) const;

    bool is_zero_at_precision(const OKElem& x) const { return val_pi_capped(x) >= x.kappa; }

    /* pi-adic valuation capped at kappa (a vanishing stored value only
       certifies val >= kappa). */
    int val_pi_capped(const OKElem& x) const;

    /* Valuation in p-units, val(p) = 1, val(pi) = 1/e_K; nullopt when every
       trusted digit vanishes (infinity at precision kappa). */
    std::optional<Frac> val(const OKElem& x) const;

    /* Exact division; spends ceil(val(y)) worth of pi-digits from the common
       trust. Throws on inexact division or when y is indistinguishable from
       zero at its own precision. */
    OKElem div_exact(const OKElem& x, const OKElem& y) const;

    /* Division by pi^j, the primitive the general case reduces to. */
    OKElem shift_down(const OKElem& x, int j) const;

    OKElem inv_unit(const OKElem& u) const;

    FqElem residue_of(const OKElem& x) const; // requires kappa >= 1
    OKElem lift_residue(FqElem r) const;      // coordinate lift, exact

    bool is_unit(const OKElem& x) const;

    OKElem random(Rng& rng) const;
    OKElem random_unit(Rng& rng) const;

    std::string describe() const; // short human-readable field description

private:
    std::vector<std::uint64_t> mult_table_; // [ (i*d + j)*d + k ]
    std::uint64_t u0_inv_ = 0;              // inverse of E_0/p mod p^M
    std::uint64_t mod_mul(std::uint64_t a, std::uint64_t b) const {
        return (std::uint64_t)((__int128)a * b % pM);
    }
    OKElem shift_down_one(const OKElem& x) const;
};

/* C(n, k) mod p^M with exact p-part handling; precomputes factorial unit
   parts up to n_max once. Used by the Lubin-Tate inductions where binomial
   coefficients of f-powers appear. */
class BinomModPM {
public:
    BinomModPM(std::int64_t p, int M, std::int64_t n_max);
    std::uint64_t at(std::int64_t n, std::int64_t k) const; // 0 <= k <= n <= n_max
    int val_p_binom(std::int64_t n, std::int64_t k) const;

private:
    std::int64_t p_;
    std::uint64_t pM_;
    int M_;
    std::vector<std::uint64_t> unit_prefix_; // prod of i <= n with p not dividing i
    std::int64_t sum_digits(std::int64_t n) const;
};

} // namespace ltsh
