#include "ltsh/superholder.hpp"

#include <algorithm>
#include <cmath>

#include "ltsh/charp_series.hpp"
#include "ltsh/errors.hpp"
#include "ltsh/rng.hpp"

namespace ltsh {

namespace {

/* Sign of x - p^e for x a positive rational and e rational. Integer e is
   decided exactly; |e| beyond 64-bit reach is decided by magnitude (positive
   rationals fit strictly between 3^-61 and 3^61). Fractional e falls back to
   long-double logs with a guard band and refuses ties instead of guessing. */
int cmp_frac_ppow(const Frac& x, std::int64_t p, const Frac& e) {
    if (x.num <= 0) return -1;
    if (e.is_integer()) {
        if (e.num > 61) return -1;
        if (e.num < -61) return 1;
        Frac pe = frac_pow(p, (int)e.num);
        if (x < pe) return -1;
        return x == pe ? 0 : 1;
    }
    const long double lhs = std::log((long double)x.num) - std::log((long double)x.den);
    const long double rhs = e.to_double() * std::log((long double)p);
    const long double margin = 1e-9L * std::max({(long double)1, std::abs(lhs), std::abs(rhs)});
    if (lhs < rhs - margin) return -1;
    if (lhs > rhs + margin) return 1;
    throw PrecisionError("cmp_frac_ppow",
                         "fractional bound exponent too close to decide in floating point");
}

/* v as a pure power of p: v = p^r with r integer. */
std::optional<int> pure_p_power(const Frac& v, std::int64_t p) {
    if (v.num <= 0) return std::nullopt;
    std::int64_t n = v.num;
    int a = 0;
    while (n % p == 0) { n /= p; ++a; }
    if (n != 1) return std::nullopt;
    const int b = denominator_power_of(v, p);
    if (b < 0) return std::nullopt;
    return a - b;
}

struct LevelScan {
    std::vector<OKElem> gs;
    std::vector<std::optional<Frac>> vals;
    std::optional<Frac> min_val;
};

LevelScan scan_level(const LTData& lt, const PerfSeries& m, int j, int i,
                     int samples, std::uint64_t seed) {
    LevelScan out;
    out.gs = filtration_samples(*lt.ring, j, i, samples, seed);
    for (const OKElem& g : out.gs) {
        const PerfSeries diff = ps_sub(gamma_act(lt, g, m), m);
        const std::optional<Frac> v = ps_val(diff);
        out.vals.push_back(v);
        if (v && (!out.min_val || *v < *out.min_val)) out.min_val = *v;
    }
    return out;
}

void validate_scan_args(int j, int i_max, int samples) {
    if (j < 1) throw ConfigError("superholder", "subgroup index j must be >= 1");
    if (i_max < 0) throw ConfigError("superholder", "i_max must be >= 0");
    if (samples < 1) throw ConfigError("superholder", "need at least one sample per level");
}

} // namespace

std::vector<OKElem> filtration_samples(const OKRing& ring, int j, int i,
                                       int count, std::uint64_t seed) {
    if (j < 1) throw ConfigError("filtration_samples", "subgroup index j must be >= 1");
    if (i < 0) throw ConfigError("filtration_samples", "level i must be >= 0");
    if (count < 1) throw ConfigError("filtration_samples", "count must be >= 1");

    OKElem pij = ring.one();
    for (int t = 0; t < i + j; ++t) pij = ring.mul_int(pij, (std::int64_t)ring.p);

    Rng rng = Rng(seed).fork(((std::uint64_t)(std::uint32_t)i << 20) ^ (std::uint64_t)j);
    std::vector<OKElem> out;
    out.reserve((std::size_t)count);
    for (int k = 0; k < count; ++k) {
        OKElem u;
        if (k == 0)
            u = ring.one(); // canonical coset representative, always a unit
        else if (k % 4 == 3)
            u = ring.mul(ring.pi(), ring.random_unit(rng)); // reaches deeper classes
        else
            u = ring.random_unit(rng);
        out.push_back(ring.add(ring.one(), ring.mul(pij, u)));
    }
    return out;
}

ShReport sh_check(const LTData& lt, const PerfSeries& m, const ShParams& params,
                  int i_max, int samples, std::uint64_t seed) {
    validate_scan_args(params.j, i_max, samples);
    const OKRing& R = *lt.ring;

    ShReport rep;
    rep.j = params.j;
    rep.s = params.s;
    rep.seed = seed;
    rep.cutoff = m.cutoff;

    for (int i = 0; i <= i_max; ++i) {
        const Frac bexp = params.lambda + Frac(params.s) * Frac(i);
        ShLevel lev;
        lev.i = i;
        lev.sample_count = samples;
        lev.bound_exp = bexp;
        lev.mu = params.mu;

        // a bound at or past the cutoff cannot be satisfied by truncated data;
        // it can still be refuted, since an observed valuation is exact
        const bool vacuous =
            cmp_frac_ppow(m.cutoff - params.mu, (std::int64_t)R.p, bexp) <= 0;
        lev.verdict = vacuous ? ShVerdict::INCONCLUSIVE : ShVerdict::PASS;

        const LevelScan scan = scan_level(lt, m, params.j, i, samples, seed);
        lev.min_val = scan.min_val;
        for (std::size_t k = 0; k < scan.vals.size(); ++k) {
            const auto& v = scan.vals[k];
            // a vanished difference has val at least the cutoff
            if (!v) continue;
            if (cmp_frac_ppow(*v - params.mu, (std::int64_t)R.p, bexp) < 0) {
                lev.verdict = ShVerdict::FAIL;
                if (!rep.witness)
                    rep.witness = ShWitness{scan.gs[k], i, (int)k, *v};
            }
        }
        rep.levels.push_back(lev);
    }

    rep.verdict = ShVerdict::PASS;
    for (const auto& lev : rep.levels)
        if (lev.verdict == ShVerdict::INCONCLUSIVE) rep.verdict = ShVerdict::INCONCLUSIVE;
    for (const auto& lev : rep.levels)
        if (lev.verdict == ShVerdict::FAIL) rep.verdict = ShVerdict::FAIL;
    return rep;
}

ShReport sh_estimate(const LTData& lt, const PerfSeries& m, int j, int i_max,
                     int samples, std::uint64_t seed) {
    validate_scan_args(j, i_max, samples);
    const OKRing& R = *lt.ring;
    const int s = R.d;

    ShReport rep;
    rep.j = j;
    rep.s = s;
    rep.seed = seed;
    rep.cutoff = m.cutoff;

    for (int i = 0; i <= i_max; ++i) {
        const LevelScan scan = scan_level(lt, m, j, i, samples, seed);
        ShLevel lev;
        lev.i = i;
        lev.sample_count = samples;
        lev.min_val = scan.min_val;
        lev.mu = Frac(0);
        lev.verdict = scan.min_val ? ShVerdict::PASS : ShVerdict::INCONCLUSIVE;
        rep.levels.push_back(lev);
    }

    ShFit fit;
    fit.infinite = true;
    fit.exact = true;
    bool first = true;
    for (const auto& lev : rep.levels) {
        if (!lev.min_val) continue;
        fit.infinite = false;
        const double fl =
            (std::log((double)lev.min_val->num) - std::log((double)lev.min_val->den)) /
                std::log((double)R.p) -
            (double)s * lev.i;
        if (first || fl < fit.value) fit.value = fl;
        const auto r = pure_p_power(*lev.min_val, (std::int64_t)R.p);
        if (!r) {
            fit.exact = false;
        } else {
            const Frac fe = Frac(*r) - Frac(s) * Frac(lev.i);
            if (fit.exact && (first || fe < fit.value_exact)) fit.value_exact = fe;
        }
        first = false;
    }
    if (fit.infinite) fit.exact = false;
    rep.fit = fit;
    rep.verdict = fit.infinite ? ShVerdict::INCONCLUSIVE : ShVerdict::PASS;
    return rep;
}

DecompReport decompletion_scan(const LTData& lt, const PerfSeries& m, int j,
                               int i_max, int samples, std::uint64_t seed) {
    DecompReport out;
    out.scan = sh_estimate(lt, m, j, i_max, samples, seed);
    const OKRing& R = *lt.ring;

    // n-hat = max over levels of the least t >= 0 with v_i >= p^(d(j+i) - f t),
    // which is the exact form of ceil((d j - lambda-hat)/f) clamped at 0
    int n_hat = 0;
    for (const auto& lev : out.scan.levels) {
        if (!lev.min_val) continue;
        int t = 0;
        while (t <= 256 &&
               cmp_frac_ppow(*lev.min_val, (std::int64_t)R.p,
                             Frac((std::int64_t)R.d * (j + lev.i) -
                                  (std::int64_t)R.fK * t)) < 0)
            ++t;
        if (t > 256)
            throw InternalError("decompletion_scan", "level prediction did not converge");
        n_hat = std::max(n_hat, t);
    }
    out.n_hat = n_hat;
    out.perf_n = perf_level(m, R.fK).n;
    out.agree = out.n_hat == out.perf_n;
    return out;
}

} // namespace ltsh
