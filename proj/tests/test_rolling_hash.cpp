#include <gmpxx.h>
#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "privedm/rolling_hash.hpp"
#include "privedm/random.hpp"

using namespace privedm;

namespace {

// sum s_i * b^(l-i) mod m, term by term in arbitrary precision.
std::uint64_t big_hash(const std::vector<std::uint64_t>& s, std::uint64_t b, std::uint64_t m) {
  mpz_class acc = 0;
  const std::size_t l = s.size();
  for (std::size_t i = 0; i < l; ++i) {
    mpz_class term;
    mpz_ui_pow_ui(term.get_mpz_t(), b, l - 1 - i);
    acc += term * mpz_class(static_cast<unsigned long>(s[i]));
  }
  acc %= mpz_class(static_cast<unsigned long>(m));
  return acc.get_ui();
}

std::string random_string(Rng& rng, std::size_t len) {
  std::string s(len, '\0');
  for (auto& c : s) c = static_cast<char>(uniform_below(rng, 256));
  return s;
}

std::vector<std::uint64_t> symbols_of(const std::string& s) {
  return {reinterpret_cast<const unsigned char*>(s.data()), reinterpret_cast<const unsigned char*>(s.data()) + s.size()};
}

}  // namespace

TEST(RollingHash, SingleSymbolIsItselfModM) {
  const RollingHash h(HashConfig{1031, 256});
  for (std::uint64_t s : {0u, 1u, 97u, 255u}) {
    const std::vector<std::uint64_t> seq{s};
    EXPECT_EQ(h.hash(std::span<const std::uint64_t>(seq)).value, s % 1031);
  }
  const RollingHash small(HashConfig{7, 256});
  EXPECT_EQ(small.hash("d").value, 100u % 7);
}

TEST(RollingHash, EmptySequence) {
  const RollingHash h(HashConfig{1031, 256});
  const HashValue v = h.hash("");
  EXPECT_EQ(v.value, 0u);
  EXPECT_EQ(v.length, 0u);
}

TEST(RollingHash, TwoSymbolValueMatchesBigIntegerEvaluation) {
  const RollingHash h(HashConfig{1031, 256});
  EXPECT_EQ(h.hash("ab").value, big_hash({97, 98}, 256, 1031));
  EXPECT_EQ(h.hash("ab").length, 2u);
}

TEST(RollingHash, RandomStringsMatchBigIntegerEvaluation) {
  Rng rng(11);
  for (const std::uint64_t m : {1031ull, 1900416ull, (1ull << 61) - 1}) {
    const RollingHash h(HashConfig{m, 256});
    for (int i = 0; i < 200; ++i) {
      const std::string s = random_string(rng, uniform_below(rng, 40));
      EXPECT_EQ(h.hash(s).value, big_hash(symbols_of(s), 256, m));
    }
  }
}

TEST(RollingHash, RejectsSymbolOutsideAlphabet) {
  const RollingHash h(HashConfig{1031, 4});
  const std::vector<std::uint64_t> ok{0, 3, 2};
  const std::vector<std::uint64_t> bad{0, 4};
  EXPECT_NO_THROW(h.hash(std::span<const std::uint64_t>(ok)));
  EXPECT_THROW(h.hash(std::span<const std::uint64_t>(bad)), std::invalid_argument);
  EXPECT_THROW(h.symbol(4), std::invalid_argument);
  EXPECT_THROW(RollingHash(HashConfig{1, 256}), std::invalid_argument);
  EXPECT_THROW(RollingHash(HashConfig{1031, 1}), std::invalid_argument);
}

TEST(RollingHash, CombineIdentityAndConcatenation) {
  const RollingHash h(HashConfig{1031, 256});
  const HashValue x = h.hash("hello");
  EXPECT_EQ(h.combine(x, h.hash("")), x);
  EXPECT_EQ(h.combine(h.hash(""), x), x);
  EXPECT_EQ(h.combine(h.hash("a"), h.hash("b")), h.hash("ab"));
}

TEST(RollingHash, CombineMatchesDirectHashOnRandomSplits) {
  Rng rng(12);
  const RollingHash h(HashConfig{10313, 256});
  for (int i = 0; i < 1000; ++i) {
    const std::string s = random_string(rng, 1 + uniform_below(rng, 64));
    const std::size_t cut = uniform_below(rng, s.size() + 1);
    const HashValue hx = h.hash(std::string_view(s).substr(0, cut));
    const HashValue hy = h.hash(std::string_view(s).substr(cut));
    ASSERT_EQ(h.combine(hx, hy), h.hash(s)) << "cut " << cut;
  }
}

TEST(RollingHash, CombineIsAssociative) {
  Rng rng(13);
  const RollingHash h(HashConfig{1031, 256});
  for (int i = 0; i < 500; ++i) {
    const HashValue a = h.hash(random_string(rng, uniform_below(rng, 10)));
    const HashValue b = h.hash(random_string(rng, uniform_below(rng, 10)));
    const HashValue c = h.hash(random_string(rng, uniform_below(rng, 10)));
    ASSERT_EQ(h.combine(h.combine(a, b), c), h.combine(a, h.combine(b, c)));
  }
}

TEST(RollingHash, PowerCacheIsSafeUnderConcurrentUse) {
  const RollingHash h(HashConfig{103123, 256});
  std::vector<std::uint64_t> got(8);
  std::vector<std::thread> ts;
  for (int t = 0; t < 8; ++t) {
    ts.emplace_back([&, t] {
      std::uint64_t acc = 0;
      for (std::uint64_t e = 0; e < 5000; ++e) acc ^= h.power(5000 - e + static_cast<std::uint64_t>(t)) * (e + 1);
      got[t] = acc;
    });
  }
  for (auto& t : ts) t.join();
  const RollingHash fresh(HashConfig{103123, 256});
  for (int t = 0; t < 8; ++t) {
    std::uint64_t acc = 0;
    for (std::uint64_t e = 0; e < 5000; ++e) acc ^= fresh.power(5000 - e + static_cast<std::uint64_t>(t)) * (e + 1);
    EXPECT_EQ(got[t], acc);
  }
}

TEST(ConflictProbability, NoPairNoConflict) {
  EXPECT_EQ(conflict_probability(0, 1031), 0.0);
  EXPECT_EQ(conflict_probability(1, 1031), 0.0);
  EXPECT_EQ(conflict_probability(1, 1), 0.0);
}

TEST(ConflictProbability, MatchesHighPrecisionValue) {
  // 1 - exp(-10000 / 3800832), evaluated to 40 digits
  const double expected = 0.002627544841470211536414008488718064507606;
  EXPECT_NEAR(conflict_probability(100, 1900416), expected, 1e-15);
}

TEST(ConflictProbability, StrictlyDecreasingInM) {
  double prev = 1.0;
  for (std::uint64_t m = 1000; m < 2000000; m = m * 3 / 2) {
    const double p = conflict_probability(100, m);
    EXPECT_LT(p, prev);
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

TEST(CheckBound, ReferenceModulusIsAdmissible) { EXPECT_TRUE(check_bound(100, 0.05, 1900416)); }

TEST(CheckBound, DirectEvaluation) {
  // -ln(0.95) * sqrt(200000) is about 22.9, far below 100
  EXPECT_LT(-std::log(0.95) * std::sqrt(200000.0), 100.0);
  EXPECT_FALSE(check_bound(100, 0.05, 100000));
  EXPECT_TRUE(check_bound(0, 0.05, 2));
  EXPECT_TRUE(check_bound(0, 0.5, 1031));
}

TEST(CheckBound, RejectsThresholdOutsideOpenInterval) {
  EXPECT_THROW(check_bound(10, 0.0, 1031), std::invalid_argument);
  EXPECT_THROW(check_bound(10, 1.0, 1031), std::invalid_argument);
  EXPECT_THROW(check_bound(10, -0.1, 1031), std::invalid_argument);
  EXPECT_THROW(min_modulus(10, 1.5), std::invalid_argument);
}

TEST(CheckBound, StrictSlackAtTheReferenceModulusIsTiny) {
  // The example sits just under the real-valued boundary; slack to 30
  // digits is -1.60980463855881832e-5. It is admitted at integer resolution.
  EXPECT_NEAR(eq1_margin(100, 0.05, 1900416), -1.60980463855881832e-5, 1e-9);
  EXPECT_GT(eq1_margin(100, 0.05, 1900418), 0.0);
}

TEST(MinModulus, IsTheSmallestAdmissibleModulus) {
  for (const std::uint64_t n : {1ull, 2ull, 10ull, 100ull, 1000ull, 12345ull}) {
    for (const double p : {0.01, 0.05, 0.2, 0.5}) {
      const std::uint64_t m = min_modulus(n, p);
      EXPECT_TRUE(check_bound(n, p, m)) << n << ' ' << p;
      if (m > 1) EXPECT_FALSE(check_bound(n, p, m - 1)) << n << ' ' << p;
    }
  }
  EXPECT_LE(min_modulus(100, 0.05), 1900416u);
}

TEST(MinModulus, ExactInversionIsLooserAndSound) {
  for (const std::uint64_t n : {10ull, 100ull, 1000ull}) {
    const std::uint64_t m = min_modulus_exact(n, 0.05);
    EXPECT_LE(conflict_probability(n, m), 0.05);
    EXPECT_GT(conflict_probability(n, m - 1), 0.05);
    EXPECT_LT(m, min_modulus(n, 0.05));
  }
}

TEST(DefaultModulus, FollowsModulusTable) {
  EXPECT_EQ(default_modulus(1), 1031u);
  EXPECT_EQ(default_modulus(100), 1031u);
  EXPECT_EQ(default_modulus(101), 10313u);
  EXPECT_EQ(default_modulus(10000), 103123u);
  EXPECT_EQ(default_modulus(100000), 1031347u);
  EXPECT_EQ(default_modulus(10000000), 1031347u);
}

TEST(HashStatistics, BucketHistogramLooksUniform) {
  Rng rng(14);
  const std::uint64_t m = 1031;
  const RollingHash h(HashConfig{m, 256});
  std::vector<double> counts(m, 0);
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) counts[h.hash(random_string(rng, 8)).value] += 1;
  const double expected = static_cast<double>(samples) / m;
  double chi2 = 0;
  for (const double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // df = 1030; the 0.001 upper critical value is about 1180. Reported, and
  // only a gross failure is treated as an error.
  RecordProperty("chi2", std::to_string(chi2));
  std::cout << "chi-square over " << m << " buckets: " << chi2 << " (0.001 critical ~1180)\n";
  EXPECT_LT(chi2, 2000.0);
}

TEST(HashStatistics, EmpiricalConflictRateTracksFormula) {
  Rng rng(15);
  const std::uint64_t n = 100, m = 10313;
  const RollingHash h(HashConfig{m, 256});
  const int trials = 1000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    std::set<std::string> strings;
    while (strings.size() < n) strings.insert(random_string(rng, 12));
    std::set<std::uint64_t> values;
    for (const auto& s : strings) values.insert(h.hash(s).value);
    if (values.size() < n) ++hits;
  }
  const double p = conflict_probability(n, m);
  const double rate = static_cast<double>(hits) / trials;
  const double se = std::sqrt(p * (1 - p) / trials);
  EXPECT_NEAR(rate, p, 3 * se);
}
