#include <boost/multiprecision/cpp_int.hpp>

#include <numeric>
#include <stdexcept>

#include "abl/blacklist/entry.hpp"
#include "abl/util/text.hpp"

namespace abl::blacklist {

GrowthFactor GrowthFactor::parse(std::string_view text)
{
  auto const fail = [&] { return std::invalid_argument("invalid growth factor: " + std::string(text)); };
  text = text::trim(text);

  std::uint64_t num = 0;
  std::uint64_t den = 1;
  if (auto const slash = text.find('/'); slash != std::string_view::npos) {
    auto const n = text::parse_uint(text.substr(0, slash));
    auto const d = text::parse_uint(text.substr(slash + 1));
    if (!n || !d || *d == 0)
      throw fail();
    num = *n;
    den = *d;
  } else if (auto const dot = text.find('.'); dot != std::string_view::npos) {
    auto const whole = text.substr(0, dot);
    auto const frac = text.substr(dot + 1);
    if (whole.empty() || frac.empty() || frac.size() > 6)
      throw fail();
    auto const w = text::parse_uint(whole);
    auto const f = text::parse_uint(frac);
    if (!w || !f)
      throw fail();
    for (std::size_t i = 0; i < frac.size(); ++i)
      den *= 10;
    num = *w * den + *f;
  } else {
    auto const n = text::parse_uint(text);
    if (!n)
      throw fail();
    num = *n;
  }
  if (num < den)
    throw std::invalid_argument("growth factor must be >= 1: " + std::string(text));
  auto const g = std::gcd(num, den);
  return {num / g, den / g};
}

std::string GrowthFactor::to_string() const
{
  if (den == 1)
    return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

bool TtlPolicy::valid() const noexcept
{
  return base_ttl >= 1 && max_ttl >= base_ttl && growth.den > 0 && growth.num >= growth.den;
}

Seconds TtlPolicy::ttl(std::uint64_t hit_count) const
{
  using boost::multiprecision::cpp_int;
  if (hit_count <= 1 || growth.num == growth.den)
    return std::min(base_ttl, max_ttl);

  // floor(b * num^k / den^k) >= M  <=>  b * num^k >= M * den^k
  cpp_int numer = base_ttl;
  cpp_int denom = 1;
  cpp_int const cap = max_ttl;
  for (std::uint64_t k = 1; k < hit_count; ++k) {
    numer *= growth.num;
    denom *= growth.den;
    if (numer >= cap * denom)
      return max_ttl;
  }
  return static_cast<Seconds>(numer / denom);
}

std::uint64_t TtlPolicy::cap_hit_count() const
{
  using boost::multiprecision::cpp_int;
  if (base_ttl >= max_ttl)
    return 1;
  if (growth.num == growth.den)
    return 0;
  cpp_int numer = base_ttl;
  cpp_int denom = 1;
  cpp_int const cap = max_ttl;
  std::uint64_t h = 1;
  while (numer < cap * denom) {
    numer *= growth.num;
    denom *= growth.den;
    ++h;
  }
  return h;
}

}  // namespace abl::blacklist
