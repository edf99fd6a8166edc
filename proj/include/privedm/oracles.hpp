#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "privedm/esp.hpp"
#include "privedm/labeling.hpp"
#include "privedm/rolling_hash.hpp"

namespace privedm {

// Exact EDM or the fact that it exceeds the cap. Never a guess.
struct EdmResult {
  std::optional<unsigned> value;
  unsigned cap = 0;

  bool exceeds_cap() const noexcept { return !value.has_value(); }
  friend bool operator==(const EdmResult&, const EdmResult&) = default;
};

namespace detail {

// All strings one unit operation away: insert, delete, rename, or move of a
// contiguous span to any other position.
template <class F>
void for_each_neighbor(const std::string& s, std::string_view alphabet, F&& visit) {
  const std::size_t n = s.size();
  std::string t;
  for (std::size_t i = 0; i <= n; ++i) {
    for (const char c : alphabet) {
      t = s;
      t.insert(t.begin() + static_cast<std::ptrdiff_t>(i), c);
      visit(t);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    t = s;
    t.erase(i, 1);
    visit(t);
    for (const char c : alphabet) {
      if (c == s[i]) continue;
      t = s;
      t[i] = c;
      visit(t);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      if (j - i == n) continue;
      const std::string span = s.substr(i, j - i);
      std::string rest = s.substr(0, i) + s.substr(j);
      for (std::size_t k = 0; k <= rest.size(); ++k) {
        if (k == i) continue;
        t = rest;
        t.insert(k, span);
        visit(t);
      }
    }
  }
}

}  // namespace detail

// Breadth-first ball: every string within `radius` operations, with its
// exact distance.
using EdmBall = std::unordered_map<std::string, std::uint8_t>;

inline EdmBall edm_ball(const std::string& center, std::string_view alphabet, unsigned radius) {
  EdmBall ball;
  ball.emplace(center, 0);
  std::vector<std::string> frontier{center};
  for (unsigned d = 1; d <= radius && !frontier.empty(); ++d) {
    std::vector<std::string> next;
    for (const auto& s : frontier) {
      detail::for_each_neighbor(s, alphabet, [&](const std::string& t) {
        if (ball.emplace(t, static_cast<std::uint8_t>(d)).second) next.push_back(t);
      });
    }
    frontier = std::move(next);
  }
  return ball;
}

// Shortest path through the two balls, if any is within the cap.
inline std::optional<unsigned> meet_in_middle(const EdmBall& bx, const EdmBall& by, unsigned cap) {
  const EdmBall& small = bx.size() <= by.size() ? bx : by;
  const EdmBall& large = bx.size() <= by.size() ? by : bx;
  unsigned best = cap + 1;
  for (const auto& [s, d] : small) {
    if (d >= best) continue;
    const auto it = large.find(s);
    if (it != large.end()) best = std::min<unsigned>(best, d + it->second);
  }
  if (best > cap) return std::nullopt;
  return best;
}

// Symbols of x and y plus one symbol that occurs in neither.
inline std::string working_alphabet(std::string_view x, std::string_view y) {
  bool used[256] = {};
  for (const unsigned char c : x) used[c] = true;
  for (const unsigned char c : y) used[c] = true;
  std::string a;
  for (int c = 0; c < 256; ++c) {
    if (used[c]) a.push_back(static_cast<char>(c));
  }
  for (int c = 'a'; c < 'a' + 256; ++c) {
    const int sym = c & 0xff;
    if (!used[sym]) {
      a.push_back(static_cast<char>(sym));
      break;
    }
  }
  return a;
}

// Exact edit distance with moves by two-sided search; every operation is
// invertible at unit cost, so searching ceil(cap/2) from x and floor(cap/2)
// from y covers all scripts up to the cap.
inline EdmResult exact_edm(std::string_view x, std::string_view y, unsigned cap) {
  EdmResult r;
  r.cap = cap;
  if (x == y) {
    r.value = 0;
    return r;
  }
  const std::string alphabet = working_alphabet(x, y);
  const EdmBall bx = edm_ball(std::string(x), alphabet, (cap + 1) / 2);
  const EdmBall by = edm_ball(std::string(y), alphabet, cap / 2);
  r.value = meet_in_middle(bx, by, cap);
  return r;
}

inline EdmResult exact_edm(std::span<const Symbol> x, std::span<const Symbol> y, unsigned cap) {
  return exact_edm(std::string_view(reinterpret_cast<const char*>(x.data()), x.size()),
                   std::string_view(reinterpret_cast<const char*>(y.data()), y.size()), cap);
}

inline std::uint64_t levenshtein(std::string_view x, std::string_view y) {
  std::vector<std::uint64_t> row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::uint64_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::uint64_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[y.size()];
}

// Plaintext relabeling: rank of each label in the sorted union, from 1.
inline std::map<std::uint64_t, std::uint64_t> reference_labeling(const LabelSet& a, const LabelSet& b) {
  std::vector<std::uint64_t> u;
  std::set_union(a.labels.begin(), a.labels.end(), b.labels.begin(), b.labels.end(), std::back_inserter(u));
  std::map<std::uint64_t, std::uint64_t> out;
  for (std::size_t i = 0; i < u.size(); ++i) out.emplace(u[i], i + 1);
  return out;
}

// A Mersenne-prime modulus; conflicts among desk-scale yields are checked,
// not assumed away.
inline constexpr std::uint64_t kWideModulus = (std::uint64_t{1} << 61) - 1;

class HashConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Characteristic vector keyed by yield strings, parsed under the wide hash.
// Throws if two different yields share a label.
inline BasicCharacteristicVector<std::string> exact_yield_vector(std::string_view text) {
  const Text t = to_text(text);
  const EspTree tree = build_esp_tree(t, RollingHash(HashConfig{kWideModulus, 256}));
  std::unordered_map<std::uint64_t, std::string_view> seen;
  for (const auto& nd : tree.nodes()) {
    const std::string_view y = text.substr(nd.start, nd.yield_length);
    const auto [it, fresh] = seen.emplace(nd.label.value, y);
    if (!fresh && it->second != y) throw HashConflict("wide hash conflict between two yields");
  }
  return yield_vector(tree, t);
}

struct ApproximationReport {
  std::uint64_t l1 = 0;
  EdmResult edm;
  std::uint64_t levenshtein = 0;

  // L1 / EDM; undefined when EDM is 0 or beyond the cap.
  std::optional<double> ratio() const {
    if (!edm.value || *edm.value == 0) return std::nullopt;
    return static_cast<double>(l1) / *edm.value;
  }
  bool lower_bound_holds() const { return !edm.value || 2 * l1 >= *edm.value; }
};

inline ApproximationReport approximation_report(std::string_view x, std::string_view y, unsigned cap) {
  if (x.empty() || y.empty()) throw EmptyTextError();
  ApproximationReport r;
  r.l1 = l1_distance(exact_yield_vector(x), exact_yield_vector(y));
  r.edm = exact_edm(x, y, cap);
  r.levenshtein = levenshtein(x, y);
  return r;
}

// Exact EDM for many strings over one alphabet, reusing balls of radius 2.
// Caps up to 4 are exact.
class EdmTable {
 public:
  EdmTable(std::string alphabet, std::vector<std::string> strings, unsigned threads = 0)
      : alphabet_(std::move(alphabet)), strings_(std::move(strings)), balls_(strings_.size()) {
    parallel_for(strings_.size(), threads, [&](std::size_t i) { balls_[i] = edm_ball(strings_[i], alphabet_, 2); });
  }

  const std::vector<std::string>& strings() const noexcept { return strings_; }
  const EdmBall& ball(std::size_t i) const { return balls_.at(i); }

  EdmResult distance(std::size_t i, std::size_t j, unsigned cap) const {
    if (cap > 4) throw std::invalid_argument("EdmTable caps at 4");
    EdmResult r;
    r.cap = cap;
    const EdmBall& bx = balls_[i];
    const EdmBall& by = balls_[j];
    if (const auto it = bx.find(strings_[j]); it != bx.end()) {
      if (it->second <= cap) r.value = it->second;
      return r;
    }
    if (cap < 3) return r;
    for (const auto& [s, d] : by) {
      if (d > 1) continue;
      if (const auto it = bx.find(s); it != bx.end() && it->second + d == 3) {
        r.value = 3;
        return r;
      }
    }
    if (cap < 4) return r;
    for (const auto& [s, d] : by) {
      if (d != 2) continue;
      if (const auto it = bx.find(s); it != bx.end() && it->second == 2) {
        r.value = 4;
        return r;
      }
    }
    return r;
  }

  template <class F>
  static void parallel_for(std::size_t count, unsigned threads, F&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      });
    }
    for (auto& th : pool) th.join();
  }

 private:
  std::string alphabet_;
  std::vector<std::string> strings_;
  std::vector<EdmBall> balls_;
};

// All strings over `symbols` with lengths in [1, max_len], shortest first.
inline std::vector<std::string> all_strings(std::string_view symbols, std::size_t max_len) {
  std::vector<std::string> out;
  std::vector<std::string> level{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& s : level) {
      for (const char c : symbols) next.push_back(s + c);
    }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

struct SweepResult {
  std::uint64_t pairs = 0;
  std::uint64_t within_cap = 0;
  std::uint64_t lower_bound_violations = 0;
  std::uint64_t asymmetric = 0;         // edm(x,y) != edm(y,x)
  std::uint64_t above_levenshtein = 0;  // edm > levenshtein
  double min_ratio = 0;                 // over pairs with 0 < edm <= cap
  double max_ratio = 0;
  std::vector<std::pair<std::string, std::string>> violations;  // first few
};

// Every ordered pair of strings over `symbols` with lengths 1..max_len:
// checks L1 >= edm/2 (conflict-free labels), symmetry, and edm <= levenshtein.
inline SweepResult lower_bound_sweep(std::string_view symbols, std::size_t max_len, unsigned cap,
                                     unsigned threads = 0) {
  const auto strings = all_strings(symbols, max_len);
  // One spare symbol keeps rename/insert scripts complete.
  const std::string alphabet = working_alphabet(symbols, "");
  const EdmTable table(alphabet, strings, threads);
  std::vector<BasicCharacteristicVector<std::string>> vecs(strings.size());
  for (std::size_t i = 0; i < strings.size(); ++i) vecs[i] = exact_yield_vector(strings[i]);

  std::mutex mu;
  SweepResult total;
  total.min_ratio = 1e300;
  EdmTable::parallel_for(strings.size(), threads, [&](std::size_t i) {
    SweepResult part;
    part.min_ratio = 1e300;
    for (std::size_t j = 0; j < strings.size(); ++j) {
      ++part.pairs;
      const EdmResult e = table.distance(i, j, cap);
      if (e.value != table.distance(j, i, cap).value) ++part.asymmetric;
      if (!e.value) continue;
      ++part.within_cap;
      if (*e.value > levenshtein(strings[i], strings[j])) ++part.above_levenshtein;
      const std::uint64_t l1 = l1_distance(vecs[i], vecs[j]);
      if (2 * l1 < *e.value) {
        ++part.lower_bound_violations;
        if (part.violations.size() < 8) part.violations.emplace_back(strings[i], strings[j]);
      }
      if (*e.value > 0) {
        const double r = static_cast<double>(l1) / *e.value;
        part.min_ratio = std::min(part.min_ratio, r);
        part.max_ratio = std::max(part.max_ratio, r);
      }
    }
    std::lock_guard lock(mu);
    total.pairs += part.pairs;
    total.within_cap += part.within_cap;
    total.lower_bound_violations += part.lower_bound_violations;
    total.asymmetric += part.asymmetric;
    total.above_levenshtein += part.above_levenshtein;
    total.min_ratio = std::min(total.min_ratio, part.min_ratio);
    total.max_ratio = std::max(total.max_ratio, part.max_ratio);
    for (auto& v : part.violations) {
      if (total.violations.size() < 8) total.violations.push_back(std::move(v));
    }
  });
  return total;
}

}  // namespace privedm
