#include "ltsh/notrace.hpp"

#include <algorithm>

#include "ltsh/errors.hpp"

namespace ltsh {

namespace {

// ceil(a) for a >= 0
std::int64_t ceil_frac(Frac a) { return (a.num + a.den - 1) / a.den; }

OKElem unit_pow(const OKRing& R, const OKElem& g, int e) {
    OKElem acc = R.one();
    for (int i = 0; i < e; ++i) acc = R.mul(acc, g);
    return acc;
}

} // namespace

std::optional<std::int64_t> check_derivative_const(const LTData& lt, const OKElem& g,
                                                   std::int64_t cutoff) {
    const OKRing& R = *lt.ring;
    if (cutoff == 0) cutoff = lt.N;
    if (!R.is_unit(g)) throw ConfigError("check_derivative_const", "g must be a unit");
    if (cutoff < 2)
        throw ConfigError("check_derivative_const",
                          "cutoff below 2 leaves no room for the derivative");
    auto endo = lt_endo(lt, g, cutoff);
    TruncSeries der = ts_derivative(*endo);
    TruncSeries cst = ts_monomial(R.Fq, 0, R.residue_of(g), der.cutoff);
    return ts_val(ts_sub(der, cst));
}

FixedKernel fixed_kernel(const LTData& lt, const OKElem& g, int D) {
    const OKRing& R = *lt.ring;
    const FqCtx& F = R.Fq;
    if (!R.is_unit(g)) throw ConfigError("fixed_kernel", "g must be a unit");
    if (D < 0) throw ConfigError("fixed_kernel", "degree bound must be nonnegative");
    OKElem tor = unit_pow(R, g, static_cast<int>(R.q - 1));
    if (R.is_zero_at_precision(R.sub(tor, R.one())))
        throw ConfigError("fixed_kernel",
                          "g is torsion at working precision; its action fixes "
                          "more than the constants");
    const std::int64_t need = R.q * D + 1;
    if (lt.N < need)
        throw PrecisionError("fixed_kernel",
                             "cutoff " + std::to_string(lt.N) +
                                 " is below the faithfulness bound q*D+1 = " +
                                 std::to_string(need));

    // columns: (gamma - 1)Y^n = [g]^n - Y^n for n = 0..D, all at cutoff lt.N
    auto endo = lt_endo(lt, g, lt.N);
    std::vector<TruncSeries> cols;
    cols.reserve(static_cast<std::size_t>(D) + 1);
    TruncSeries pw = ts_monomial(F, 0, F.one(), lt.N);
    for (int n = 0; n <= D; ++n) {
        TruncSeries mono = ts_monomial(F, n, F.one(), lt.N);
        cols.push_back(ts_sub(pw, mono));
        if (n < D) pw = ts_mul(pw, *endo);
    }

    // one equation per exponent that appears in any column
    std::map<std::int64_t, std::vector<FqElem>> eq;
    for (int n = 0; n <= D; ++n)
        for (const auto& [e, c] : cols[static_cast<std::size_t>(n)].t) {
            auto it = eq.find(e);
            if (it == eq.end())
                it = eq.emplace(e, std::vector<FqElem>(static_cast<std::size_t>(D) + 1,
                                                       F.zero()))
                         .first;
            it->second[static_cast<std::size_t>(n)] = c;
        }
    std::vector<std::vector<FqElem>> rows;
    rows.reserve(eq.size());
    for (auto& [e, row] : eq) rows.push_back(std::move(row));

    // reduced row echelon over F_q; free columns span the kernel
    std::vector<int> pivot_row(static_cast<std::size_t>(D) + 1, -1);
    std::size_t r = 0;
    for (int c = 0; c <= D && r < rows.size(); ++c) {
        std::size_t sel = r;
        while (sel < rows.size() && F.is_zero(rows[sel][static_cast<std::size_t>(c)]))
            ++sel;
        if (sel == rows.size()) continue;
        std::swap(rows[r], rows[sel]);
        FqElem inv = F.inv(rows[r][static_cast<std::size_t>(c)]);
        for (int j = c; j <= D; ++j)
            rows[r][static_cast<std::size_t>(j)] =
                F.mul(rows[r][static_cast<std::size_t>(j)], inv);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r) continue;
            FqElem fct = rows[i][static_cast<std::size_t>(c)];
            if (F.is_zero(fct)) continue;
            for (int j = c; j <= D; ++j)
                rows[i][static_cast<std::size_t>(j)] =
                    F.sub(rows[i][static_cast<std::size_t>(j)],
                          F.mul(fct, rows[r][static_cast<std::size_t>(j)]));
        }
        pivot_row[static_cast<std::size_t>(c)] = static_cast<int>(r);
        ++r;
    }

    FixedKernel out;
    out.D = D;
    out.cutoff = lt.N;
    for (int c = 0; c <= D; ++c) {
        if (pivot_row[static_cast<std::size_t>(c)] >= 0) continue;
        TruncSeries b = ts_make(F, static_cast<std::int64_t>(D) + 1);
        ts_set(b, c, F.one());
        for (int j = 0; j < c; ++j) {
            int pr = pivot_row[static_cast<std::size_t>(j)];
            if (pr < 0) continue;
            FqElem v = rows[static_cast<std::size_t>(pr)][static_cast<std::size_t>(c)];
            if (!F.is_zero(v)) ts_set(b, j, F.neg(v));
        }
        out.basis.push_back(std::move(b));
    }
    return out;
}

NoTraceReport no_trace_witness(const LTData& lt, Frac cutoff) {
    const OKRing& R = *lt.ring;
    const FqCtx& F = R.Fq;
    if (R.d < 2)
        throw ConfigError("no_trace_witness",
                          "the constant-derivative dichotomy needs [K:Q_p] >= 2");
    const std::int64_t q = R.q;
    const std::int64_t p = R.p;
    const std::int64_t wq = q / p;
    if (cutoff.num == 0) cutoff = Frac(q * q + q);
    if (!(Frac(q * q, p) < cutoff))
        throw ConfigError("no_trace_witness",
                          "cutoff does not reach q^2/p, the leading exponent of "
                          "(gamma-1)w");

    NoTraceReport rep;
    rep.cutoff = cutoff;
    rep.w_exponent = Frac(wq);
    rep.w_not_in_qZ = (wq % q != 0);
    if (!rep.w_not_in_qZ)
        throw MathFail("no_trace_witness",
                       "witness exponent " + std::to_string(wq) +
                           " is divisible by q = " + std::to_string(q));

    OKElem gamma = R.add(R.one(), R.pi());
    std::int64_t nc = ceil_frac(cutoff);
    TruncSeries dev = ts_sub(*lt_endo(lt, gamma, nc), ts_identity(F, nc));
    rep.gamma_dev_in_pZ = true;
    for (const auto& [e, c] : dev.t) {
        rep.gamma_dev_support.push_back(e);
        if (e % p != 0)
            throw MathFail("no_trace_witness",
                           "exponent " + std::to_string(e) +
                               " of gamma(Y) - Y is outside pZ");
    }

    PerfSeries w = ps_monomial(F, Frac(wq), F.one(), cutoff);
    PerfSeries v = ps_sub(gamma_act(lt, gamma, w), w);
    rep.v_in_qZ = true;
    for (const auto& [e, c] : v.t) {
        if (e.den != 1)
            throw InternalError("no_trace_witness",
                                "fractional exponent " + e.str() +
                                    " in (gamma-1)w; the p-power image of an "
                                    "integral series must be integral");
        rep.v_support.push_back(e.num);
        if (e.num % q != 0)
            throw MathFail("no_trace_witness",
                           "exponent " + std::to_string(e.num) +
                               " of (gamma-1)w is not divisible by q = " +
                               std::to_string(q));
    }
    if (rep.v_support.empty())
        throw MathFail("no_trace_witness",
                       "(gamma-1)w vanished below the cutoff; the witness "
                       "carries no information there");
    return rep;
}

} // namespace ltsh
