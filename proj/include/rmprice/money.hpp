#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>

namespace rmprice {

/// Fixed-point currency amount stored as integer micro-dollars.
///
/// Sums and differences are exact, so ledger audits and the counterfactual
/// identity can be checked with `==`. Conversions from real-valued formulas
/// round to the nearest micro-dollar.
class Money {
public:
  static constexpr std::int64_t kMicrosPerDollar = 1'000'000;

  constexpr Money() = default;

  static constexpr Money from_micros(std::int64_t micros) {
    Money m;
    m.micros_ = micros;
    return m;
  }

  static Money from_dollars(double dollars) {
    return from_micros(std::llround(dollars * static_cast<double>(kMicrosPerDollar)));
  }

  /// Parses a plain decimal string ("2.18", "-0.5", "4922") exactly, up to
  /// six fractional digits. Returns false on malformed input.
  static bool parse(const std::string& text, Money& out) {
    std::size_t pos = 0;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
      negative = text[pos] == '-';
      ++pos;
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool any_digit = false;
    for (; pos < text.size() && text[pos] >= '0' && text[pos] <= '9'; ++pos) {
      whole = whole * 10 + (text[pos] - '0');
      any_digit = true;
    }
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      for (; pos < text.size() && text[pos] >= '0' && text[pos] <= '9'; ++pos) {
        if (frac_digits == 6) return false;
        frac = frac * 10 + (text[pos] - '0');
        ++frac_digits;
        any_digit = true;
      }
    }
    if (!any_digit || pos != text.size()) return false;
    for (int i = frac_digits; i < 6; ++i) frac *= 10;
    const std::int64_t micros = whole * kMicrosPerDollar + frac;
    out = from_micros(negative ? -micros : micros);
    return true;
  }

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double dollars() const {
    return static_cast<double>(micros_) / static_cast<double>(kMicrosPerDollar);
  }

  /// Six-decimal rendering, exact for every representable value.
  std::string str() const {
    const std::int64_t abs = micros_ < 0 ? -micros_ : micros_;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld", micros_ < 0 ? "-" : "",
                  static_cast<long long>(abs / kMicrosPerDollar),
                  static_cast<long long>(abs % kMicrosPerDollar));
    return buf;
  }

  constexpr Money operator-() const { return from_micros(-micros_); }
  constexpr Money& operator+=(Money o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return a += b; }
  friend constexpr Money operator-(Money a, Money b) { return a -= b; }
  friend constexpr auto operator<=>(Money, Money) = default;
  friend constexpr bool operator==(Money, Money) = default;

  friend std::ostream& operator<<(std::ostream& os, Money m) { return os << '$' << m.str(); }

private:
  std::int64_t micros_ = 0;
};

}  // namespace rmprice
