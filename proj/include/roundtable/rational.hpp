#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace roundtable {

// Exact rational arithmetic for propagation speeds, confidence values and
// cost accounting. Values stay tiny (token counts x price denominators), so
// int64 components are plenty.
using Rational = boost::rational<std::int64_t>;

// "5/3" for non-integers, "2" when the denominator normalizes to 1.
std::string to_string(const Rational& r);

// Fixed two-decimal rendering with round-half-even, computed exactly on the
// rational (no floating point). 2/3 -> "0.67", 1/8 -> "0.12".
std::string format_fixed2(const Rational& r);

// Parses "0.0015", "-3.25", "42" into an exact rational.
// Throws std::invalid_argument on anything else.
Rational rational_from_decimal(std::string_view text);

// Parses the to_string form back ("5/3" or "2").
Rational rational_from_string(std::string_view text);

inline double to_double(const Rational& r) {
    return boost::rational_cast<double>(r);
}

}  // namespace roundtable
