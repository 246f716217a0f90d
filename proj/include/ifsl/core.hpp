#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ifsl {

using Q = mpq_class;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResourceLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultWordBudget = 10'000'000;

inline Q qabs(const Q& a) { return a < 0 ? Q(-a) : a; }
inline const Q& qmin(const Q& a, const Q& b) { return b < a ? b : a; }
inline const Q& qmax(const Q& a, const Q& b) { return a < b ? b : a; }
inline double to_d(const Q& q) { return q.get_d(); }

inline Q qpow(const Q& base, long e) {
    Q out = 1;
    Q b = base;
    bool neg = e < 0;
    unsigned long k = neg ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
    while (k) {
        if (k & 1u) out *= b;
        b *= b;
        k >>= 1u;
    }
    if (neg) out = 1 / out;
    return out;
}

inline std::string qstr(const Q& q) { return q.get_str(); }

// Accepts "p/q", integers, and decimal or scientific literals; always exact.
inline Q parse_rational(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw InputError("empty number");
    if (s.find('/') != std::string::npos) {
        Q q;
        if (q.set_str(s, 10) != 0) throw InputError("bad rational '" + raw + "'");
        if (q.get_den() == 0) throw InputError("zero denominator in '" + raw + "'");
        q.canonicalize();
        return q;
    }
    std::size_t pos = 0;
    bool neg = false;
    if (s[pos] == '+' || s[pos] == '-') neg = s[pos++] == '-';
    std::string digits;
    long exp10 = 0;
    bool seen_dot = false, any = false;
    for (; pos < s.size(); ++pos) {
        char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            any = true;
            if (seen_dot) --exp10;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!any) throw InputError("bad number '" + raw + "'");
    if (pos < s.size()) {
        if (s[pos] != 'e' && s[pos] != 'E') throw InputError("bad number '" + raw + "'");
        ++pos;
        std::string e = s.substr(pos);
        if (e.empty()) throw InputError("bad exponent in '" + raw + "'");
        std::size_t used = 0;
        long ev = 0;
        try {
            ev = std::stol(e, &used);
        } catch (const std::exception&) {
            throw InputError("bad exponent in '" + raw + "'");
        }
        if (used != e.size()) throw InputError("bad exponent in '" + raw + "'");
        exp10 += ev;
    }
    mpz_class num(digits, 10);
    Q out(num);
    out *= qpow(Q(10), exp10);
    if (neg) out = -out;
    out.canonicalize();
    return out;
}

// Closed rational interval with exact arithmetic (outward rounding is exact here).
struct Interval {
    Q lo, hi;
    Interval() = default;
    Interval(const Q& a) : lo(a), hi(a) {}
    Interval(const Q& a, const Q& b) : lo(a), hi(b) {
        if (hi < lo) std::swap(lo, hi);
    }
    Q width() const { return hi - lo; }
    Q mid() const { return (lo + hi) / 2; }
    Q mag() const { return qmax(qabs(lo), qabs(hi)); }
    Q mig() const {
        if (lo <= 0 && hi >= 0) return 0;
        return qmin(qabs(lo), qabs(hi));
    }
    bool contains(const Q& x) const { return lo <= x && x <= hi; }
    bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
};

inline Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator-(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }
inline Interval operator*(const Interval& a, const Interval& b) {
    Q p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return {qmin(qmin(p1, p2), qmin(p3, p4)), qmax(qmax(p1, p2), qmax(p3, p4))};
}
inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }
inline Interval hull_of(const Interval& a, const Interval& b) { return {qmin(a.lo, b.lo), qmax(a.hi, b.hi)}; }

inline bool intersects(const Interval& a, const Interval& b) { return !(a.hi < b.lo || b.hi < a.lo); }
inline Q gap_between(const Interval& a, const Interval& b) {
    if (a.hi < b.lo) return b.lo - a.hi;
    if (b.hi < a.lo) return a.lo - b.hi;
    return 0;
}

// Value, first and second derivative carried together.
template <class T>
struct Jet {
    T v, d, s;
};

// MPFR scratch value with RAII.
class Mpfr {
public:
    explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(x_, prec); }
    ~Mpfr() { mpfr_clear(x_); }
    Mpfr(const Mpfr&) = delete;
    Mpfr& operator=(const Mpfr&) = delete;
    mpfr_ptr get() { return x_; }
    mpfr_srcptr get() const { return x_; }

private:
    mpfr_t x_;
};

inline void mpfr_log_q(mpfr_ptr out, const Q& q, mpfr_rnd_t rnd) {
    mpfr_prec_t p = mpfr_get_prec(out);
    Mpfr tmp(p + 16);
    mpfr_set_q(tmp.get(), q.get_mpq_t(), rnd);
    mpfr_log(out, tmp.get(), rnd);
}

// Sign of (c1*log a1 + c2*log a2 + ... ) decided with directed rounding; returns
// -1, 0 (undecided) or +1.
inline int log_combination_sign(const std::vector<std::pair<Q, Q>>& terms, mpfr_prec_t prec) {
    Mpfr lo(prec), hi(prec), t_lo(prec), t_hi(prec), c(prec), a(prec), b(prec);
    mpfr_set_zero(lo.get(), 1);
    mpfr_set_zero(hi.get(), 1);
    for (const auto& [coef, arg] : terms) {
        if (arg <= 0) throw PreconditionError("log of non-positive rational");
        mpfr_log_q(t_lo.get(), arg, MPFR_RNDD);
        mpfr_log_q(t_hi.get(), arg, MPFR_RNDU);
        mpfr_set_q(c.get(), coef.get_mpq_t(), MPFR_RNDD);
        // product interval [c] * [t]; c is exact when representable, so bracket both.
        Mpfr c_hi(prec);
        mpfr_set_q(c_hi.get(), coef.get_mpq_t(), MPFR_RNDU);
        Mpfr p1(prec), p2(prec), p3(prec), p4(prec);
        mpfr_mul(p1.get(), c.get(), t_lo.get(), MPFR_RNDD);
        mpfr_mul(p2.get(), c.get(), t_hi.get(), MPFR_RNDD);
        mpfr_mul(p3.get(), c_hi.get(), t_lo.get(), MPFR_RNDD);
        mpfr_mul(p4.get(), c_hi.get(), t_hi.get(), MPFR_RNDD);
        mpfr_min(a.get(), p1.get(), p2.get(), MPFR_RNDD);
        mpfr_min(a.get(), a.get(), p3.get(), MPFR_RNDD);
        mpfr_min(a.get(), a.get(), p4.get(), MPFR_RNDD);
        mpfr_add(lo.get(), lo.get(), a.get(), MPFR_RNDD);
        mpfr_mul(p1.get(), c.get(), t_lo.get(), MPFR_RNDU);
        mpfr_mul(p2.get(), c.get(), t_hi.get(), MPFR_RNDU);
        mpfr_mul(p3.get(), c_hi.get(), t_lo.get(), MPFR_RNDU);
        mpfr_mul(p4.get(), c_hi.get(), t_hi.get(), MPFR_RNDU);
        mpfr_max(b.get(), p1.get(), p2.get(), MPFR_RNDU);
        mpfr_max(b.get(), b.get(), p3.get(), MPFR_RNDU);
        mpfr_max(b.get(), b.get(), p4.get(), MPFR_RNDU);
        mpfr_add(hi.get(), hi.get(), b.get(), MPFR_RNDU);
    }
    if (mpfr_sgn(lo.get()) > 0) return 1;
    if (mpfr_sgn(hi.get()) < 0) return -1;
    return 0;
}

// Same as above but retries with doubled precision until decided (cap 1<<15 bits).
inline int log_combination_sign_auto(const std::vector<std::pair<Q, Q>>& terms, mpfr_prec_t start = 128) {
    for (mpfr_prec_t p = start; p <= (1 << 15); p *= 2) {
        int s = log_combination_sign(terms, p);
        if (s != 0) return s;
    }
    return 0;
}

// Sign of log(a) - c with directed rounding, doubling precision until decided.
inline int log_minus_sign(const Q& a, const Q& c, mpfr_prec_t start = 128) {
    if (a <= 0) throw PreconditionError("log of non-positive rational");
    for (mpfr_prec_t p = start; p <= (1 << 15); p *= 2) {
        Mpfr lo(p), hi(p), cl(p), ch(p);
        mpfr_log_q(lo.get(), a, MPFR_RNDD);
        mpfr_log_q(hi.get(), a, MPFR_RNDU);
        mpfr_set_q(cl.get(), c.get_mpq_t(), MPFR_RNDD);
        mpfr_set_q(ch.get(), c.get_mpq_t(), MPFR_RNDU);
        if (mpfr_cmp(lo.get(), ch.get()) > 0) return 1;
        if (mpfr_cmp(hi.get(), cl.get()) < 0) return -1;
    }
    return 0;
}

inline double log_q(const Q& q) {
    Mpfr x(128);
    mpfr_log_q(x.get(), q, MPFR_RNDN);
    return mpfr_get_d(x.get(), MPFR_RNDN);
}

}  // namespace ifsl
