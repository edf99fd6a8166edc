#include <gtest/gtest.h>

#include <deque>
#include <set>
#include <string>
#include <unordered_map>

#include "privedm/oracles.hpp"
#include "privedm/random.hpp"

using namespace privedm;

namespace {

// Plain breadth-first search from x with its own neighbour generator.
std::optional<unsigned> bfs_edm(const std::string& x, const std::string& y, const std::string& alphabet,
                                unsigned cap) {
  std::unordered_map<std::string, unsigned> dist{{x, 0}};
  std::deque<std::string> q{x};
  while (!q.empty()) {
    const std::string s = q.front();
    q.pop_front();
    const unsigned d = dist[s];
    if (s == y) return d;
    if (d == cap) continue;
    std::set<std::string> next;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      for (const char c : alphabet) next.insert(s.substr(0, i) + c + s.substr(i));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      next.insert(s.substr(0, i) + s.substr(i + 1));
      for (const char c : alphabet) {
        std::string t = s;
        t[i] = c;
        next.insert(t);
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t len = 1; i + len <= s.size(); ++len) {
        const std::string piece = s.substr(i, len);
        const std::string rest = s.substr(0, i) + s.substr(i + len);
        for (std::size_t j = 0; j <= rest.size(); ++j) next.insert(rest.substr(0, j) + piece + rest.substr(j));
      }
    }
    for (const auto& t : next) {
      if (dist.emplace(t, d + 1).second) q.push_back(t);
    }
  }
  return std::nullopt;
}

}  // namespace

TEST(ExactEdm, KnownDistances) {
  EXPECT_EQ(exact_edm("abc", "abc", 4).value, 0u);
  EXPECT_EQ(exact_edm("ab", "ba", 4).value, 1u);
  EXPECT_EQ(exact_edm("abcd", "cdab", 4).value, 1u);
  EXPECT_EQ(exact_edm("abcdef", "defabc", 4).value, 1u);
  EXPECT_EQ(exact_edm("abc", "abxc", 4).value, 1u);
  EXPECT_EQ(exact_edm("aaaa", "bbbb", 4).value, 4u);
  EXPECT_EQ(exact_edm("a", "", 4).value, 1u);
}

TEST(ExactEdm, CapIsNeverAGuess) {
  const EdmResult r = exact_edm("aaaa", "bbbb", 3);
  EXPECT_TRUE(r.exceeds_cap());
  EXPECT_EQ(r.cap, 3u);
  EXPECT_TRUE(exact_edm("ab", "ba", 0).exceeds_cap());
  EXPECT_EQ(exact_edm("aaaa", "bbbb", 5).value, 4u);
}

TEST(ExactEdm, AgreesWithBreadthFirstSearch) {
  Rng rng(61);
  for (int t = 0; t < 150; ++t) {
    std::string x(uniform_below(rng, 6), 'a'), y(uniform_below(rng, 6), 'a');
    for (auto& c : x) c = static_cast<char>('a' + uniform_below(rng, 3));
    for (auto& c : y) c = static_cast<char>('a' + uniform_below(rng, 3));
    const unsigned cap = 3;
    const auto want = bfs_edm(x, y, working_alphabet(x, y), cap);
    ASSERT_EQ(exact_edm(x, y, cap).value, want) << x << " / " << y;
  }
}

TEST(ExactEdm, SymmetricAndBelowLevenshtein) {
  Rng rng(62);
  for (int t = 0; t < 200; ++t) {
    std::string x(1 + uniform_below(rng, 7), 'a'), y(1 + uniform_below(rng, 7), 'a');
    for (auto& c : x) c = static_cast<char>('a' + uniform_below(rng, 2));
    for (auto& c : y) c = static_cast<char>('a' + uniform_below(rng, 2));
    const auto xy = exact_edm(x, y, 4), yx = exact_edm(y, x, 4);
    ASSERT_EQ(xy, yx) << x << " / " << y;
    if (xy.value) ASSERT_LE(*xy.value, levenshtein(x, y));
  }
}

TEST(ExactEdm, TableAgreesWithDirectSearch) {
  const auto strings = all_strings("ab", 4);
  const EdmTable table(working_alphabet("ab", ""), strings, 2);
  for (std::size_t i = 0; i < strings.size(); i += 3) {
    for (std::size_t j = 0; j < strings.size(); j += 2) {
      ASSERT_EQ(table.distance(i, j, 4), exact_edm(strings[i], strings[j], 4)) << strings[i] << " / " << strings[j];
    }
  }
  EXPECT_THROW(table.distance(0, 1, 5), std::invalid_argument);
}

TEST(WorkingAlphabet, AddsOneFreshSymbol) {
  const std::string a = working_alphabet("abba", "ca");
  EXPECT_EQ(a.size(), 4u);
  EXPECT_NE(a.find('a'), std::string::npos);
  EXPECT_NE(a.find('c'), std::string::npos);
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("abc", "abc"), 0u);
  EXPECT_EQ(levenshtein("ab", "ba"), 2u);
}

TEST(ReferenceLabeling, RanksOverTheUnion) {
  const auto r = reference_labeling(LabelSet({9, 2}), LabelSet({5, 9}));
  EXPECT_EQ(r, (std::map<std::uint64_t, std::uint64_t>{{2, 1}, {5, 2}, {9, 3}}));
  EXPECT_TRUE(reference_labeling(LabelSet{}, LabelSet{}).empty());
}

TEST(AllStrings, CountsAndOrder) {
  const auto s = all_strings("ab", 3);
  EXPECT_EQ(s.size(), 2u + 4u + 8u);
  EXPECT_EQ(s.front(), "a");
  EXPECT_EQ(s.back(), "bbb");
}

TEST(Approximation, ReportOnAMove) {
  const auto r = approximation_report("abcd", "cdab", 4);
  EXPECT_EQ(r.l1, 2u);
  EXPECT_EQ(r.edm.value, 1u);
  EXPECT_EQ(r.levenshtein, 4u);
  EXPECT_DOUBLE_EQ(*r.ratio(), 2.0);
  EXPECT_TRUE(r.lower_bound_holds());
  EXPECT_FALSE(approximation_report("ab", "ab", 2).ratio().has_value());
  EXPECT_THROW(approximation_report("", "a", 2), EmptyTextError);
}

TEST(Approximation, SmallSweepHasNoViolations) {
  const SweepResult r = lower_bound_sweep("ab", 4, 4, 2);
  EXPECT_EQ(r.pairs, 30u * 30u);
  EXPECT_EQ(r.lower_bound_violations, 0u);
  EXPECT_EQ(r.asymmetric, 0u);
  EXPECT_EQ(r.above_levenshtein, 0u);
  EXPECT_GE(r.min_ratio, 0.5);
}
