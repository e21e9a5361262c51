#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ltsh {

/* Exact rational with int64 numerator/denominator, always reduced, den > 0.
   Used for series exponents and valuations; all comparisons are exact.
   Intermediate products go through __int128 so desk-scale magnitudes
   (exponents up to ~2^40) never overflow silently. */
struct Frac {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Frac() = default;
    Frac(std::int64_t n) : num(n), den(1) {}
    Frac(std::int64_t n, std::int64_t d) : num(n), den(d) { reduce(); }

    void reduce() {
        if (den == 0) throw std::domain_error("Frac: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    bool is_integer() const { return den == 1; }

    friend Frac operator+(const Frac& a, const Frac& b) {
        __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make_checked(n, d);
    }
    friend Frac operator-(const Frac& a, const Frac& b) {
        __int128 n = (__int128)a.num * b.den - (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make_checked(n, d);
    }
    friend Frac operator*(const Frac& a, const Frac& b) {
        return make_checked((__int128)a.num * b.num, (__int128)a.den * b.den);
    }
    friend Frac operator/(const Frac& a, const Frac& b) {
        if (b.num == 0) throw std::domain_error("Frac: division by zero");
        return make_checked((__int128)a.num * b.den, (__int128)a.den * b.num);
    }
    Frac operator-() const { Frac r; r.num = -num; r.den = den; return r; }

    friend bool operator==(const Frac& a, const Frac& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Frac& a, const Frac& b) { return !(a == b); }
    friend bool operator<(const Frac& a, const Frac& b) {
        return (__int128)a.num * b.den < (__int128)b.num * a.den;
    }
    friend bool operator>(const Frac& a, const Frac& b) { return b < a; }
    friend bool operator<=(const Frac& a, const Frac& b) { return !(b < a); }
    friend bool operator>=(const Frac& a, const Frac& b) { return !(a < b); }

    double to_double() const { return double(num) / double(den); }

    /* "num/den", denominator always explicit ("3/1") so serialized forms
       round-trip byte-exactly. */
    std::string str() const {
        return std::to_string(num) + "/" + std::to_string(den);
    }

    static Frac parse(const std::string& s) {
        auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return Frac(std::stoll(s));
            std::int64_t n = std::stoll(s.substr(0, slash));
            std::int64_t d = std::stoll(s.substr(slash + 1));
            return Frac(n, d);
        } catch (const std::logic_error&) {
            throw std::invalid_argument("Frac: cannot parse '" + s + "'");
        }
    }

private:
    static Frac make_checked(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n;
        __int128 g = gcd128(a, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("Frac: magnitude exceeds 64-bit range");
        Frac r;
        r.num = (std::int64_t)n;
        r.den = n == 0 ? 1 : (std::int64_t)d;
        return r;
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) { __int128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }
};

/* Largest e with base^e dividing f.den; requires the leftover cofactor to be 1,
   i.e. the denominator must be a pure power of base. Returns -1 otherwise. */
inline int denominator_power_of(const Frac& f, std::int64_t base) {
    std::int64_t d = f.den;
    int e = 0;
    while (d % base == 0) { d /= base; ++e; }
    return d == 1 ? e : -1;
}

inline Frac frac_pow(std::int64_t base, int e) {
    if (e >= 0) {
        __int128 v = 1;
        for (int i = 0; i < e; ++i) {
            v *= base;
            if (v > INT64_MAX) throw std::overflow_error("frac_pow overflow");
        }
        return Frac((std::int64_t)v);
    }
    Frac f = frac_pow(base, -e);
    return Frac(1) / f;
}

} // namespace ltsh
