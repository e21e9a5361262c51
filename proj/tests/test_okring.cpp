#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ltsh/fraction.hpp"
#include "ltsh/okring.hpp"
#include "ltsh/rng.hpp"

using namespace ltsh;

TEST_CASE("fraction exact arithmetic") {
    CHECK(Frac(1, 2) + Frac(1, 3) == Frac(5, 6));
    CHECK(Frac(1, 2) - Frac(1, 3) == Frac(1, 6));
    CHECK(Frac(2, 4) == Frac(1, 2));
    CHECK(Frac(-3, -6) == Frac(1, 2));
    CHECK(Frac(3, -6) == Frac(-1, 2));
    CHECK(Frac(7, 3) * Frac(3, 7) == Frac(1));
    CHECK(Frac(5, 6) / Frac(5, 3) == Frac(1, 2));
    CHECK(Frac(1, 3) < Frac(1, 2));
    CHECK(Frac(-1, 2) < Frac(1, 3));
    CHECK(Frac(7, 2).str() == "7/2");
    CHECK(Frac::parse("7/2") == Frac(7, 2));
    CHECK(Frac::parse("-12") == Frac(-12));
    CHECK(Frac::parse(Frac(-5, 9).str()) == Frac(-5, 9));
    CHECK(denominator_power_of(Frac(1, 27), 3) == 3);
    CHECK(denominator_power_of(Frac(1, 12), 3) == -1);
    CHECK(frac_pow(3, -2) == Frac(1, 9));
    CHECK_THROWS_AS(Frac(1, 0), std::domain_error);
}

TEST_CASE("splitmix rng determinism and bounds") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng c(42);
    for (int i = 0; i < 1000; ++i) CHECK(c.below(7) < 7);
    Rng d(42);
    Rng forked = d.fork(1);
    CHECK(forked.next() != Rng(42).next());
}

TEST_CASE("residue field F_9 = F_3[x]/(x^2+1)") {
    FqCtx F = FqCtx::build(3, {1, 0, 1});
    CHECK(F.q == 9);
    FqElem x = F.from_coords({0, 1});
    // x^2 = -1 = 2
    CHECK(F.mul(x, x) == F.from_int(2));
    // (1+x)^2 = 1 + 2x + x^2 = 2x
    FqElem u = F.add(F.one(), x);
    CHECK(F.mul(u, u) == F.from_coords({0, 2}));
    // x * 2x = 2x^2 = 4 = 1
    CHECK(F.inv(x) == F.from_coords({0, 2}));
    // Frobenius: x^3 = x * x^2 = 2x, and phi^2 = id
    CHECK(F.frobenius(x, 1) == F.from_coords({0, 2}));
    CHECK(F.frobenius(x, 2) == x);
    CHECK(F.frobenius(x, -1) == F.frobenius(x, 1));
    for (std::int64_t i = 1; i < 9; ++i) {
        FqElem a{(std::uint16_t)i};
        CHECK(F.mul(a, F.inv(a)) == F.one());
        CHECK(F.pow(a, 8) == F.one());
    }
    CHECK_THROWS_AS(F.inv(F.zero()), Error);
}

TEST_CASE("residue field construction rejects bad input") {
    // x^2 + 2 = (x-1)(x+1) mod 3
    CHECK_THROWS_AS(FqCtx::build(3, {2, 0, 1}), ConfigError);
    CHECK_THROWS_AS(FqCtx::build(9, {0, 1}), ConfigError);
    CHECK_THROWS_AS(FqCtx::build(2, {0, 1}), ConfigError);
}

TEST_CASE("O_K arithmetic, unramified base case") {
    // K = Q_3, M = 6
    OKRing R = OKRing::build(3, {0, 1}, {-3, 1}, 6);
    CHECK(R.d == 1);
    CHECK(R.kappa_max() == 6);
    OKElem three = R.from_int(3);
    CHECK(R.pi() == three);
    CHECK(R.val(three).value() == Frac(1));
    CHECK(R.val(R.from_int(9)).value() == Frac(2));
    CHECK(!R.val(R.zero()).has_value());

    OKElem six = R.from_int(6);
    OKElem quot = R.div_exact(six, three);
    CHECK(quot.c[0] == 2);
    CHECK(quot.kappa == 5);

    OKElem half = R.inv_unit(R.from_int(2));
    CHECK(R.mul(R.from_int(2), half) == R.one());
    CHECK(half.c[0] == (729 + 1) / 2);

    CHECK_THROWS_AS(R.div_exact(R.one(), three), Error);
    CHECK_THROWS_AS(R.div_exact(R.one(), R.zero()), PrecisionError);
    CHECK_THROWS_AS(R.inv_unit(three), Error);
}

TEST_CASE("O_K arithmetic, ramified quadratic") {
    // K = Q_3(pi), pi^2 = 3, M = 6
    OKRing R = OKRing::build(3, {0, 1}, {-3, 0, 1}, 6);
    CHECK(R.d == 2);
    CHECK(R.eK == 2);
    CHECK(R.kappa_max() == 12);
    OKElem pi = R.pi();
    CHECK(R.val(pi).value() == Frac(1, 2));
    OKElem pi2 = R.mul(pi, pi);
    CHECK(pi2 == R.from_int(3));

    // dividing 3 by pi^2 recovers 1 with two digits spent
    OKElem one_again = R.shift_down(R.from_int(3), 2);
    CHECK(one_again.c == R.one().c);
    CHECK(one_again.kappa == 10);

    // pi * x / pi = x at the surviving precision; the top pi-digit is
    // genuinely lost to the mod p^M wraparound and kappa says so
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        OKElem x = R.random(rng);
        OKElem back = R.div_exact(R.mul(pi, x), pi);
        CHECK(back.kappa == R.kappa_max() - 1);
        CHECK(R.is_zero_at_precision(R.sub(back, x)));
    }

    CHECK_THROWS_AS(R.div_exact(R.one(), pi), Error);
}

TEST_CASE("O_K arithmetic, unramified quadratic") {
    // K = Q_9, M = 4
    OKRing R = OKRing::build(3, {1, 0, 1}, {-3, 1}, 4);
    CHECK(R.d == 2);
    CHECK(R.fK == 2);
    OKElem x = R.from_coords({0, 1});
    // x^2 = -1
    CHECK(R.mul(x, x) == R.from_int(-1));

    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        OKElem u = R.random_unit(rng);
        OKElem v = R.inv_unit(u);
        CHECK(R.mul(u, v) == R.one());
        CHECK(R.Fq.mul(R.residue_of(u), R.residue_of(v)) == R.Fq.one());
    }
    // residue / lift round trip
    for (std::int64_t i = 0; i < 9; ++i) {
        FqElem r{(std::uint16_t)i};
        CHECK(R.residue_of(R.lift_residue(r)) == r);
    }
}

TEST_CASE("O_K arithmetic, mixed e=2 f=2") {
    // K = Q_9(pi), pi^2 = 3, M = 5
    OKRing R = OKRing::build(3, {1, 0, 1}, {-3, 0, 1}, 5);
    CHECK(R.d == 4);
    OKElem x = R.from_coords({0, 1, 0, 0});
    OKElem y = R.pi();
    CHECK(y == R.from_coords({0, 0, 1, 0}));
    OKElem xy = R.mul(x, y);
    CHECK(xy == R.from_coords({0, 0, 0, 1}));
    // (xy)^2 = x^2 y^2 = -3
    CHECK(R.mul(xy, xy) == R.from_int(-3));
    CHECK(R.val(xy).value() == Frac(1, 2));

    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
        OKElem a = R.random(rng), b = R.random(rng), c = R.random(rng);
        CHECK(R.mul(a, R.add(b, c)).c == R.add(R.mul(a, b), R.mul(a, c)).c);
        OKElem u = R.random_unit(rng);
        CHECK(R.div_exact(R.mul(a, u), u).c == a.c);
    }
}

TEST_CASE("O_K construction rejects bad input") {
    CHECK_THROWS_AS(OKRing::build(3, {0, 1}, {-9, 1}, 6), ConfigError);  // val_p(E_0) = 2
    CHECK_THROWS_AS(OKRing::build(3, {0, 1}, {-3, 1, 1}, 6), ConfigError); // middle coeff unit
    CHECK_THROWS_AS(OKRing::build(3, {0, 1}, {-3, 2}, 6), ConfigError);  // not monic
    CHECK_THROWS_AS(OKRing::build(3, {0, 1}, {-3, 1}, 1), ConfigError);  // M too small
    CHECK_THROWS_AS(OKRing::build(3, {0, 1}, {-3, 1}, 45), ConfigError); // p^M overflows
    CHECK_THROWS_AS(OKRing::build(5, {0, 1}, {-3, 1}, 6), ConfigError);  // E_0 not divisible by p
}

TEST_CASE("precision bookkeeping never overstates trust") {
    OKRing R = OKRing::build(3, {0, 1}, {-3, 0, 1}, 6);
    OKElem pi = R.pi();
    // stored zero with reduced trust: (pi*pi*x - 3x) is exactly 0, but trust
    // stays bounded by the operands
    OKElem x = R.from_coords({5, 7});
    OKElem z = R.sub(R.mul(R.mul(pi, pi), x), R.mul_int(x, 3));
    CHECK(R.is_zero_at_precision(z));
    CHECK(!R.val(z).has_value());
    // multiplying by a high-valuation element boosts kappa up to the cap
    OKElem big = R.mul(R.from_int(81), x); // val 8 in pi-units
    CHECK(big.kappa == R.kappa_max());
    // dividing spends digits one at a time
    OKElem w = R.from_int(9);
    OKElem w1 = R.shift_down(w, 2); // = 3
    CHECK(w1.c == R.from_int(3).c);
    CHECK(w1.kappa == 10);
    OKElem w2 = R.shift_down(w1, 2); // = 1
    CHECK(w2.c == R.one().c);
    CHECK(w2.kappa == 8);
}

TEST_CASE("binomial coefficients mod p^M") {
    BinomModPM B(3, 3, 200);
    CHECK(B.at(9, 3) == 84 % 27);
    CHECK(B.val_p_binom(9, 3) == 1);
    CHECK(B.at(4, 2) == 6);
    CHECK(B.at(10, 5) == 252 % 27);
    CHECK(B.val_p_binom(10, 5) == 2); // 252 = 4 * 63 = 2^2 * 3^2 * 7
    for (std::int64_t k = 1; k < 9; ++k) CHECK(B.val_p_binom(9, k) >= 1);
    CHECK(B.val_p_binom(9, 1) == 2);
    CHECK(B.at(9, 1) == 9);
    // row sums: sum_k C(n,k) = 2^n mod 27
    for (std::int64_t n = 0; n <= 12; ++n) {
        std::uint64_t s = 0, pw = 1;
        for (std::int64_t k = 0; k <= n; ++k) s = (s + B.at(n, k)) % 27;
        for (std::int64_t i = 0; i < n; ++i) pw = pw * 2 % 27;
        CHECK(s == pw);
    }
    BinomModPM B5(5, 4, 100);
    CHECK(B5.at(25, 5) == 53130 % 625);
    CHECK(B5.val_p_binom(25, 5) == 1);
}
