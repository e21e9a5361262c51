#include "ltsh/serialize.hpp"

namespace ltsh {

namespace {

using nlohmann::json;

json coeff_digits(const FqCtx& F, FqElem c) {
    json arr = json::array();
    for (std::uint8_t d : F.coords(c)) arr.push_back((int)d);
    return arr;
}

FqElem coeff_from_digits(const FqCtx& F, const json& arr, const char* where) {
    if (!arr.is_array() || (int)arr.size() != F.f)
        throw ConfigError(where, "coeff must be a digit list of length " + std::to_string(F.f));
    std::vector<std::uint8_t> co(F.f);
    for (int i = 0; i < F.f; ++i) {
        if (!arr[i].is_number_integer())
            throw ConfigError(where, "coeff digits must be integers");
        std::int64_t d = arr[i].get<std::int64_t>();
        if (d < 0 || d >= F.p)
            throw ConfigError(where, "coeff digit out of range [0, p)");
        co[i] = (std::uint8_t)d;
    }
    return F.from_coords(co);
}

Frac parse_frac(const json& v, const char* where) {
    if (!v.is_string()) throw ConfigError(where, "expected an exact fraction string");
    try {
        return Frac::parse(v.get<std::string>());
    } catch (const std::exception& ex) {
        throw ConfigError(where, std::string("bad fraction: ") + ex.what());
    }
}

void require_shape(const json& j, const char* where) {
    if (!j.is_object() || !j.contains("cutoff") || !j.contains("terms") ||
        !j["terms"].is_array())
        throw ConfigError(where, "series must be an object with cutoff and terms");
}

} // namespace

json to_json_series(const PerfSeries& s) {
    json terms = json::array();
    for (const auto& [e, c] : s.t)
        terms.push_back({{"exp", e.str()}, {"coeff", coeff_digits(*s.F, c)}});
    return {{"cutoff", s.cutoff.str()}, {"terms", std::move(terms)}};
}

json to_json_series(const TruncSeries& s) {
    json terms = json::array();
    for (const auto& [e, c] : s.t)
        terms.push_back({{"exp", Frac(e).str()}, {"coeff", coeff_digits(*s.F, c)}});
    return {{"cutoff", Frac(s.cutoff).str()}, {"terms", std::move(terms)}};
}

json to_json_series2(const TruncSeries2& s) {
    json terms = json::array();
    for (const auto& [e, c] : s.t)
        terms.push_back(
            {{"exp", json::array({e.first, e.second})}, {"coeff", coeff_digits(*s.F, c)}});
    return {{"cutoff", s.cutoff}, {"terms", std::move(terms)}};
}

PerfSeries perf_series_from_json(const FqCtx& F, const json& j) {
    const char* where = "serialize.perf_series";
    require_shape(j, where);
    Frac cutoff = parse_frac(j["cutoff"], where);
    if (cutoff < Frac(0)) throw ConfigError(where, "negative cutoff");
    PerfSeries s = ps_make(F, cutoff);
    for (const json& t : j["terms"]) {
        if (!t.is_object() || !t.contains("exp") || !t.contains("coeff"))
            throw ConfigError(where, "term must carry exp and coeff");
        Frac e = parse_frac(t["exp"], where);
        if (e < Frac(0)) throw ConfigError(where, "negative exponent");
        if (denominator_power_of(e, F.p) < 0)
            throw ConfigError(where, "exponent denominator is not a p-power");
        if (!(e < cutoff)) throw ConfigError(where, "term at or beyond the cutoff");
        FqElem c = coeff_from_digits(F, t["coeff"], where);
        if (F.is_zero(c)) throw ConfigError(where, "explicit zero coefficient");
        if (!s.t.emplace(e, c).second) throw ConfigError(where, "duplicate exponent");
    }
    return s;
}

TruncSeries trunc_series_from_json(const FqCtx& F, const json& j) {
    const char* where = "serialize.trunc_series";
    PerfSeries p = perf_series_from_json(F, j);
    for (const auto& [e, c] : p.t) {
        (void)c;
        if (e.den != 1) throw ConfigError(where, "fractional exponent in an integer series");
    }
    if (p.cutoff.den != 1) throw ConfigError(where, "fractional cutoff in an integer series");
    return to_trunc(p);
}

TruncSeries2 series2_from_json(const FqCtx& F, const json& j) {
    const char* where = "serialize.series2";
    require_shape(j, where);
    if (!j["cutoff"].is_number_integer()) throw ConfigError(where, "cutoff must be an integer");
    std::int64_t cutoff = j["cutoff"].get<std::int64_t>();
    if (cutoff < 0) throw ConfigError(where, "negative cutoff");
    TruncSeries2 s = s2_make(F, cutoff);
    for (const json& t : j["terms"]) {
        if (!t.is_object() || !t.contains("exp") || !t.contains("coeff"))
            throw ConfigError(where, "term must carry exp and coeff");
        const json& e = t["exp"];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer())
            throw ConfigError(where, "bivariate exp must be [i, j]");
        std::int64_t i = e[0].get<std::int64_t>(), jj = e[1].get<std::int64_t>();
        if (i < 0 || jj < 0) throw ConfigError(where, "negative exponent");
        if (i + jj >= cutoff) throw ConfigError(where, "term at or beyond the cutoff");
        FqElem c = coeff_from_digits(F, t["coeff"], where);
        if (F.is_zero(c)) throw ConfigError(where, "explicit zero coefficient");
        if (!s.t.emplace(std::make_pair(i, jj), c).second)
            throw ConfigError(where, "duplicate exponent");
    }
    return s;
}

} // namespace ltsh
