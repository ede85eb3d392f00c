#include "roundtable/rational.hpp"

#include <cctype>
#include <cstdlib>

namespace roundtable {

std::string to_string(const Rational& r) {
    if (r.denominator() == 1) {
        return std::to_string(r.numerator());
    }
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::string format_fixed2(const Rational& r) {
    // Scale to hundredths and round half to even, all in integer arithmetic.
    std::int64_t num = r.numerator() * 100;
    std::int64_t den = r.denominator();
    bool negative = num < 0;
    if (negative) num = -num;

    std::int64_t whole = num / den;
    std::int64_t rem = num % den;
    if (2 * rem > den || (2 * rem == den && whole % 2 == 1)) {
        ++whole;
    }

    std::string digits = std::to_string(whole);
    while (digits.size() < 3) digits.insert(digits.begin(), '0');
    std::string out = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
    return negative && whole != 0 ? "-" + out : out;
}

Rational rational_from_decimal(std::string_view text) {
    size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        negative = text[i] == '-';
        ++i;
    }

    std::int64_t num = 0;
    std::int64_t den = 1;
    std::int64_t exponent = 0;
    bool any_digit = false;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.') {
            if (seen_point) throw std::invalid_argument("bad decimal: " + std::string(text));
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            num = num * 10 + (c - '0');
            if (seen_point) den *= 10;
            any_digit = true;
        } else if ((c == 'e' || c == 'E') && any_digit) {
            bool exp_negative = false;
            ++i;
            if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
                exp_negative = text[i] == '-';
                ++i;
            }
            bool exp_digit = false;
            for (; i < text.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
                    throw std::invalid_argument("bad decimal: " + std::string(text));
                }
                exponent = exponent * 10 + (text[i] - '0');
                exp_digit = true;
            }
            if (!exp_digit) throw std::invalid_argument("bad decimal: " + std::string(text));
            if (exp_negative) exponent = -exponent;
            break;
        } else {
            throw std::invalid_argument("bad decimal: " + std::string(text));
        }
    }
    if (!any_digit) throw std::invalid_argument("bad decimal: " + std::string(text));
    for (; exponent > 0; --exponent) num *= 10;
    for (; exponent < 0; ++exponent) den *= 10;
    return Rational(negative ? -num : num, den);
}

Rational rational_from_string(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return Rational(std::strtoll(std::string(text).c_str(), nullptr, 10), 1);
    }
    std::string num(text.substr(0, slash));
    std::string den(text.substr(slash + 1));
    return Rational(std::strtoll(num.c_str(), nullptr, 10),
                    std::strtoll(den.c_str(), nullptr, 10));
}

}  // namespace roundtable
