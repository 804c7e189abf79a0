#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace apfsm {

/// Exact rational on 64-bit numerator/denominator. Model probabilities and
/// weights are kept exact until state-space build converts them to doubles.
/// Intermediate products go through 128-bit; anything that does not fit back
/// into 64 bits after normalization throws.
struct Rat {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rat() = default;
  Rat(std::int64_t n) : num(n), den(1) {}
  Rat(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::domain_error("rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  static Rat from_i128(__int128 n, __int128 d);

  bool is_zero() const { return num == 0; }
  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return Rat::from_i128(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                          static_cast<__int128>(a.den) * b.den);
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return Rat::from_i128(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                          static_cast<__int128>(a.den) * b.den);
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return Rat::from_i128(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num == 0) throw std::domain_error("rational: division by zero");
    return Rat::from_i128(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
  }
  Rat operator-() const {
    Rat r = *this;
    r.num = -r.num;
    return r;
  }

  friend bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Rat& a, const Rat& b) { return a == b || a < b; }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator>=(const Rat& a, const Rat& b) { return b <= a; }

  Rat abs() const { return num < 0 ? -*this : *this; }
};

inline Rat Rat::from_i128(__int128 n, __int128 d) {
  if (d == 0) throw std::domain_error("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 an = n < 0 ? -n : n;
  __int128 a = an, b = d;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    n /= a;
    d /= a;
  }
  constexpr __int128 kMax = INT64_MAX;
  constexpr __int128 kMin = INT64_MIN;
  if (n > kMax || n < kMin || d > kMax) throw std::overflow_error("rational: 64-bit overflow");
  Rat r;
  r.num = static_cast<std::int64_t>(n);
  r.den = static_cast<std::int64_t>(d);
  return r;
}

/// Parses "123", "-7", "1/3" or "0.05" exactly. Throws std::invalid_argument
/// on malformed input.
Rat parse_rational(const std::string& text);

}  // namespace apfsm
