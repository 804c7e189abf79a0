#include "apfsm/rational.hpp"

#include <cctype>
#include <cstdlib>

namespace apfsm {

namespace {

std::int64_t parse_int(const std::string& s, std::size_t from, std::size_t to) {
  if (from >= to) throw std::invalid_argument("rational: empty integer in '" + s + "'");
  std::int64_t v = 0;
  bool neg = false;
  std::size_t i = from;
  if (s[i] == '-') {
    neg = true;
    ++i;
  }
  if (i >= to) throw std::invalid_argument("rational: malformed integer in '" + s + "'");
  for (; i < to; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      throw std::invalid_argument("rational: malformed integer in '" + s + "'");
    v = v * 10 + (s[i] - '0');
  }
  return neg ? -v : v;
}

}  // namespace

Rat parse_rational(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::int64_t n = parse_int(text, 0, slash);
    std::int64_t d = parse_int(text, slash + 1, text.size());
    return Rat(n, d);
  }
  auto dot = text.find('.');
  if (dot != std::string::npos) {
    std::int64_t whole = dot == 0 ? 0 : parse_int(text, 0, dot);
    bool neg = !text.empty() && text[0] == '-';
    std::size_t frac_len = text.size() - dot - 1;
    if (frac_len == 0 || frac_len > 18) throw std::invalid_argument("rational: bad decimal '" + text + "'");
    std::int64_t frac = parse_int(text, dot + 1, text.size());
    if (frac < 0) throw std::invalid_argument("rational: bad decimal '" + text + "'");
    __int128 den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    __int128 num = static_cast<__int128>(whole < 0 ? -whole : whole) * den + frac;
    if (neg || whole < 0) num = -num;
    return Rat::from_i128(num, den);
  }
  return Rat(parse_int(text, 0, text.size()));
}

}  // namespace apfsm
