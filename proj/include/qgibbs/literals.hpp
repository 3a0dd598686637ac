#pragma once

#include <qgibbs/errors.hpp>
#include <qgibbs/padic.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace qgibbs {

// p-adic literal text format, used by configs and reports:
//   "v:d0,d1,...,dm"  means p^v * (d0 + d1 p + ... + dm p^m), base-p digits, d0 != 0
//   "a/b"             exact rational
//   "n"               plain integer
// Printing emits the natural form of each backend (rational -> "a/b"/"n",
// digits -> "v:d0,..."), and parse(print(x)) == x.

namespace detail {

inline bool parse_long(const std::string& s, std::size_t& pos, long& out) {
    std::size_t start = pos;
    if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        ++pos;
        ++digits;
    }
    if (digits == 0) return false;
    out = std::stol(s.substr(start, pos - start));
    return true;
}

struct ParsedLiteral {
    enum class Form { integer, fraction, digits };
    Form form;
    mpq_class rational;                // integer / fraction forms
    long valuation = 0;                // digits form
    std::vector<std::uint32_t> digits; // digits form
};

inline ParsedLiteral parse_literal_text(const std::string& s) {
    if (s.empty()) throw config_error("p-adic literal: empty string");
    ParsedLiteral out;

    const auto colon = s.find(':');
    if (colon != std::string::npos) {
        out.form = ParsedLiteral::Form::digits;
        std::size_t pos = 0;
        if (!parse_long(s, pos, out.valuation) || pos != colon) {
            throw config_error("p-adic literal: bad valuation in '" + s + "'");
        }
        pos = colon + 1;
        while (true) {
            long d = 0;
            if (!parse_long(s, pos, d) || d < 0) {
                throw config_error("p-adic literal: bad digit in '" + s + "'");
            }
            out.digits.push_back(static_cast<std::uint32_t>(d));
            if (pos == s.size()) break;
            if (s[pos] != ',') throw config_error("p-adic literal: expected ',' in '" + s + "'");
            ++pos;
        }
        if (out.digits.front() == 0) {
            throw config_error("p-adic literal: leading digit must be nonzero in '" + s + "'");
        }
        return out;
    }

    const auto slash = s.find('/');
    try {
        if (slash != std::string::npos) {
            out.form = ParsedLiteral::Form::fraction;
            mpz_class num(s.substr(0, slash));
            mpz_class den(s.substr(slash + 1));
            if (den == 0) throw config_error("p-adic literal: zero denominator in '" + s + "'");
            out.rational = mpq_class(num, den);
            out.rational.canonicalize();
        } else {
            out.form = ParsedLiteral::Form::integer;
            out.rational = mpq_class(mpz_class(s));
        }
    } catch (const std::invalid_argument&) {
        throw config_error("p-adic literal: cannot parse '" + s + "'");
    }
    return out;
}

} // namespace detail

inline PAdicRational parse_literal(const std::string& s, const RationalContext& ctx) {
    const auto lit = detail::parse_literal_text(s);
    if (lit.form == detail::ParsedLiteral::Form::digits) {
        // finite digit expansion is an exact rational
        mpz_class u(0);
        for (std::size_t i = lit.digits.size(); i-- > 0;) {
            if (lit.digits[i] >= ctx.prime.value()) {
                throw config_error("p-adic literal: digit out of range for p in '" + s + "'");
            }
            u = u * ctx.prime.value() + lit.digits[i];
        }
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), ctx.prime.value(),
                      static_cast<unsigned long>(lit.valuation < 0 ? -lit.valuation : lit.valuation));
        mpq_class q = lit.valuation >= 0 ? mpq_class(u * scale) : mpq_class(u, scale);
        return PAdicRational::from_mpq(ctx, q);
    }
    return PAdicRational::from_mpq(ctx, lit.rational);
}

inline PAdicDigits parse_literal(const std::string& s, const DigitsContext& ctx) {
    const auto lit = detail::parse_literal_text(s);
    if (lit.form == detail::ParsedLiteral::Form::digits) {
        for (auto d : lit.digits) {
            if (d >= ctx.prime.value()) {
                throw config_error("p-adic literal: digit out of range for p in '" + s + "'");
            }
        }
        return PAdicDigits::from_parts(ctx, lit.valuation, lit.digits);
    }
    return PAdicDigits::from_mpq(ctx, lit.rational);
}

inline std::string to_literal(const PAdicRational& x) {
    const mpq_class& q = x.value();
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline std::string to_literal(const PAdicDigits& x) {
    if (x.is_exact_zero()) return "0";
    if (x.is_flagged_zero()) {
        throw precision_error("to_literal: zero-at-precision has no literal form");
    }
    std::string out = std::to_string(x.valuation().value()) + ":";
    const auto ds = x.digits();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(ds[i]);
    }
    return out;
}

} // namespace qgibbs
