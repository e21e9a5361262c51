#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ltsh/commutant.hpp"
#include "ltsh/superholder.hpp"

using namespace ltsh;

namespace {

OKRing q3(int M = 8) { return OKRing::build(3, {0, 1}, {-3, 1}, M); }
OKRing q9(int M = 8) { return OKRing::build(3, {1, 0, 1}, {-3, 1}, M); }
OKRing ram(int M = 10) { return OKRing::build(3, {0, 1}, {-3, 0, 1}, M); }

std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

// independent coefficient twist for the (w o v)^(m) identity
TruncSeries twist(const TruncSeries& s, int m) {
    TruncSeries r = ts_make(*s.F, s.cutoff);
    for (const auto& [e, c] : s.t) r.t.emplace(e, s.F->frobenius(c, m));
    return r;
}

} // namespace

TEST_CASE("make_commuting produces the classified elements") {
    OKRing R = q3();
    LTData lt = build_lt(R, 12);

    // [1](Y^(q^n)) is a bare monomial
    PerfSeries u0 = make_commuting(lt, R.one(), 0, Frac(40));
    CHECK(u0.t.size() == 1);
    CHECK(ps_get(u0, Frac(1)) == R.Fq.one());
    PerfSeries u1 = make_commuting(lt, R.one(), 1, Frac(40));
    CHECK(u1.t.size() == 1);
    CHECK(ps_get(u1, Frac(3)) == R.Fq.one());

    // val_y = q^n across signs, and negative n lands at perfection level f*|n|
    Rng rng(0x5eedULL);
    for (int n = -1; n <= 2; ++n) {
        OKElem b = R.random_unit(rng);
        PerfSeries u = make_commuting(lt, b, n, Frac(ipow(3, n + 3)));
        REQUIRE(ps_val(u).has_value());
        CHECK(*ps_val(u) == frac_pow(3, n));
        if (n < 0) CHECK(perf_level(u, R.fK).level == R.fK * (-n));
    }

    CHECK_THROWS_AS(make_commuting(lt, R.pi(), 0, Frac(40)), ConfigError);
    CHECK_THROWS_AS(make_commuting(lt, R.one(), 9, Frac(40)), ConfigError);
    CHECK_THROWS_AS(make_commuting(lt, R.one(), 2, Frac(9)), ConfigError);
}

TEST_CASE("check_commutation separates commutants from bystanders") {
    for (auto build : {+[] { return q3(); }, +[] { return q9(); }}) {
        OKRing R = build();
        LTData lt = build_lt(R, 12);
        std::vector<OKElem> gs = standard_g_samples(R, 4);

        Rng rng(0xabcULL);
        PerfSeries u = make_commuting(lt, R.random_unit(rng), 1, Frac(3 * R.q * R.q));
        CommuteCheck ok = check_commutation(lt, u, gs);
        CHECK_FALSE(ok.residual.has_value());
        CHECK(ok.informative);

        // u = Y + Y^2: both sides agree to degree 1, then the sample g = 2
        // forces the degree-2 mismatch u2*(g^2 - g) exactly
        PerfSeries bad = ps_monomial(R.Fq, Frac(1), R.Fq.one(), Frac(40));
        ps_set(bad, Frac(2), R.Fq.one());
        CommuteCheck cc = check_commutation(lt, bad, gs);
        REQUIRE(cc.residual.has_value());
        CHECK(*cc.residual == Frac(2));
    }

    // a cutoff at q*val cannot even see the first nonlinear interaction
    OKRing R = q3();
    LTData lt = build_lt(R, 12);
    PerfSeries thin = ps_monomial(R.Fq, Frac(3), R.Fq.one(), Frac(9));
    CommuteCheck cc = check_commutation(lt, thin, standard_g_samples(R, 2));
    CHECK_FALSE(cc.informative);
    CHECK_FALSE(cc.residual.has_value());

    PerfSeries c0 = ps_monomial(R.Fq, Frac(0), R.Fq.one(), Frac(9));
    CHECK_THROWS_AS(check_commutation(lt, c0, standard_g_samples(R, 2)), ConfigError);
    CHECK_THROWS_AS(check_commutation(lt, thin, std::vector<OKElem>{}), ConfigError);
}

TEST_CASE("solver roundtrips across fields and twists") {
    int checked = 0;
    for (auto build : {+[] { return q3(); }, +[] { return q9(); }, +[] { return ram(); }}) {
        OKRing R = build();
        LTData lt = build_lt(R, 12);
        Rng rng(0x90112ULL);
        for (int n = -2; n <= 2; ++n) {
            for (int rep = 0; rep < 2; ++rep) {
                OKElem b = R.random_unit(rng);
                Frac C = frac_pow(R.q, n + 3);
                PerfSeries u = make_commuting(lt, b, n, C);
                CommutantSolution sol = solve_commutant(lt, u);

                CHECK(sol.n == n);
                CHECK(sol.b_precision == 3); // cutoff q^(n+3) certifies 3 digits
                CHECK_FALSE(sol.residual.has_value());
                CHECK(R.is_zero_at_precision(R.sub(sol.b, b)));
                ++checked;
            }
        }
        // no randomness on the recovery path
        PerfSeries u = make_commuting(lt, R.from_int(2), 1, frac_pow(R.q, 4));
        CommutantSolution s1 = solve_commutant(lt, u);
        CommutantSolution s2 = solve_commutant(lt, u);
        CHECK(s1.b == s2.b);
        CHECK(s1.n == s2.n);
    }
    CHECK(checked == 30);
}

TEST_CASE("solver rejects what is not in the family") {
    OKRing R3 = q3();
    LTData lt3 = build_lt(R3, 12);
    OKRing R9 = q9();
    LTData lt9 = build_lt(R9, 12);

    // valuation 2 is no q-power; valuation p is a p-power but not a q-power
    PerfSeries v2 = ps_monomial(R3.Fq, Frac(2), R3.Fq.one(), Frac(30));
    CHECK_THROWS_AS(solve_commutant(lt3, v2), MathFail);
    PerfSeries v3 = ps_monomial(R9.Fq, Frac(3), R9.Fq.one(), Frac(30));
    CHECK_THROWS_AS(solve_commutant(lt9, v3), MathFail);

    // exponent off the q^n lattice
    PerfSeries offlat = ps_monomial(R3.Fq, Frac(3), R3.Fq.one(), Frac(30));
    ps_set(offlat, Frac(10, 3), R3.Fq.one());
    CHECK_THROWS_AS(solve_commutant(lt3, offlat), MathFail);

    // 2Y is not a corruption: f is odd, so [-1](Y) = -Y exactly and the
    // digit search converges to b = -1
    PerfSeries negy = ps_monomial(R3.Fq, Frac(1), R3.Fq.from_int(2), Frac(30));
    CommutantSolution sneg = solve_commutant(lt3, negy);
    CHECK(sneg.n == 0);
    CHECK(R3.is_zero_at_precision(R3.sub(sneg.b, R3.from_int(-1))));

    // a corrupted coefficient leaves the family: finite residual, then REJECT
    Rng rng(0xbadULL);
    for (auto* lt : {&lt3, &lt9}) {
        const OKRing& R = *lt->ring;
        PerfSeries u = make_commuting(*lt, R.random_unit(rng), 1, frac_pow(R.q, 4));
        Frac e(2 * R.q);
        ps_set(u, e, R.Fq.add(ps_get(u, e), R.Fq.one()));
        CommuteCheck cc = check_commutation(*lt, u, standard_g_samples(R, 3));
        REQUIRE(cc.residual.has_value());
        CHECK(Frac(0) < *cc.residual);
        CHECK_THROWS_AS(solve_commutant(*lt, u), MathFail);
    }

    PerfSeries empty = ps_make(R3.Fq, Frac(30));
    CHECK_THROWS_AS(solve_commutant(lt3, empty), ConfigError);
}

TEST_CASE("the order bookkeeping certifies invertibility") {
    OKRing R = q3();
    LTData lt = build_lt(R, 12);
    TruncSeries w = *lt_endo(lt, R.add(R.one(), R.pi()), 30);
    Rng rng(0x10bULL);
    TruncSeries f = *lt_endo(lt, R.random_unit(rng), 30);

    // an invertible f commuting with w: n = 1, j = 0, r = q, no iteration
    LubnarchReport rep = check_lubnarch(w, f, 0);
    CHECK(rep.commutes);
    CHECK(rep.n == 1);
    CHECK(rep.j == 0);
    CHECK(rep.r == 3);
    CHECK(rep.iter_pow == 0);
    CHECK(rep.arranged);
    CHECK(rep.nontorsion_ok);
    CHECK(rep.invertible);
    CHECK_FALSE(rep.counterexample);

    // same conclusion under a coefficient twist (F_p-rational coefficients)
    CHECK(check_lubnarch(w, f, 1).commutes);

    // f = Y^2: order 2 cannot commute; the clash sits at degree r + j = 4
    TruncSeries f2 = ts_monomial(R.Fq, 2, R.Fq.one(), 30);
    LubnarchReport r2 = check_lubnarch(w, f2, 0);
    CHECK_FALSE(r2.commutes);
    REQUIRE(r2.residual.has_value());
    CHECK(*r2.residual == 4);
    CHECK(r2.n == 2);
    CHECK(r2.j == 1);
    CHECK_FALSE(r2.invertible);
    CHECK_FALSE(r2.counterexample);

    // f = Y commutes with everything and is its own witness of n = 1
    LubnarchReport rid = check_lubnarch(w, ts_identity(R.Fq, 30), 0);
    CHECK(rid.commutes);
    CHECK(rid.invertible);

    // f' of order 3 forces one p-fold iterate: (1+pi)^3 = 1 + pi^2*7, so the
    // iterated w leads with Y^(q^2)
    TruncSeries f34 = ts_monomial(R.Fq, 3, R.Fq.one(), 30);
    ts_set(f34, 4, R.Fq.one());
    LubnarchReport r3 = check_lubnarch(w, f34, 0);
    CHECK(r3.n == 3);
    CHECK(r3.j == 3);
    CHECK(r3.iter_pow == 1);
    CHECK(r3.r == 9);
    CHECK(r3.arranged);
    CHECK_FALSE(r3.commutes);
    CHECK_FALSE(r3.counterexample);

    // w = Y is torsion at any cutoff and gets flagged
    LubnarchReport ridw = check_lubnarch(ts_identity(R.Fq, 30), f, 0);
    CHECK_FALSE(ridw.nontorsion_ok);
    CHECK_FALSE(ridw.arranged);

    // hypothesis violations
    CHECK_THROWS_AS(check_lubnarch(ts_monomial(R.Fq, 2, R.Fq.one(), 30), f, 0), ConfigError);
    CHECK_THROWS_AS(check_lubnarch(ts_monomial(R.Fq, 1, R.Fq.from_int(2), 30), f, 0),
                    ConfigError);
    CHECK_THROWS_AS(check_lubnarch(w, ts_make(R.Fq, 30), 0), ConfigError);
    CHECK_THROWS_AS(check_lubnarch(w, ts_monomial(R.Fq, 3, R.Fq.one(), 30), 0), ConfigError);
    CHECK_THROWS_AS(check_lubnarch(w, f, 0, 0), ConfigError);
}

TEST_CASE("coefficient twist distributes over composition") {
    OKRing R = q9();
    Rng rng(0x7157ULL);
    for (int rep = 0; rep < 6; ++rep) {
        TruncSeries w = ts_make(R.Fq, 25);
        TruncSeries v = ts_make(R.Fq, 25);
        for (std::int64_t e = 0; e < 12; ++e) ts_set(w, e, R.Fq.random(rng));
        for (std::int64_t e = 1; e < 12; ++e) ts_set(v, e, R.Fq.random(rng));
        if (ts_get(v, 1) == R.Fq.zero()) ts_set(v, 1, R.Fq.one());
        for (int m : {1, 2, 3}) {
            TruncSeries lhs = twist(ts_compose(w, v), m);
            TruncSeries rhs = ts_compose(twist(w, m), twist(v, m));
            CHECK(ts_eq(lhs, rhs));
        }
    }
}

TEST_CASE("commutants are super-Holder with exponent from their valuation") {
    // orbit bound: val((g-1)*u) = val(u) * p^(d(i+j)) >= p^(lambda + eK*i)
    // with p^lambda = val_y(u); minima are exact q-power gaps
    struct Case {
        OKRing R;
        std::int64_t min0;
    };
    for (auto& [R, min0] : std::vector<Case>{{q9(), 81}, {ram(), 27}}) {
        LTData lt = build_lt(R, 12);
        Rng rng(0x10caULL);
        OKElem b = R.random_unit(rng);
        PerfSeries u = make_commuting(lt, b, 1, Frac(243));

        ShParams params{R.eK, Frac(R.fK), Frac(0), 1};
        ShReport rep = sh_check(lt, u, params, 1, 3, 11);
        CHECK(rep.verdict == ShVerdict::PASS);
        REQUIRE(rep.levels.size() == 2);
        REQUIRE(rep.levels[0].min_val.has_value());
        CHECK(*rep.levels[0].min_val == Frac(min0));
    }
}
