#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "privedm/rolling_hash.hpp"

namespace privedm {

using Symbol = std::uint8_t;
using Text = std::vector<Symbol>;

inline Text to_text(std::string_view s) { return Text(s.begin(), s.end()); }

class EmptyTextError : public std::invalid_argument {
 public:
  EmptyTextError() : std::invalid_argument("cannot parse an empty text") {}
};

// Reduces a sequence with no two adjacent equal values to the alphabet
// {0,1,2}, keeping adjacent values distinct. Each round maps position i to
// 2*k + bit_k(a[i]) where k is the lowest bit in which a[i] differs from its
// left neighbour (position 0 uses its right neighbour). Rounds repeat until
// all values are below 6; values 3, 4, 5 are then replaced in turn by the
// smallest of {0,1,2} not used by either neighbour.
inline std::vector<std::uint8_t> alphabet_reduction(std::span<const std::uint64_t> labels) {
  const std::size_t n = labels.size();
  if (n < 2) throw std::invalid_argument("alphabet reduction needs at least two labels");
  for (std::size_t i = 1; i < n; ++i) {
    if (labels[i] == labels[i - 1]) {
      throw std::invalid_argument("alphabet reduction input has equal adjacent labels at " +
                                  std::to_string(i));
    }
  }

  std::vector<std::uint64_t> cur(labels.begin(), labels.end());
  std::vector<std::uint64_t> next(n);
  auto reduce_at = [&](std::size_t i, std::size_t j) {
    const int k = std::countr_zero(cur[i] ^ cur[j]);
    return 2 * static_cast<std::uint64_t>(k) + ((cur[i] >> k) & 1u);
  };
  while (*std::max_element(cur.begin(), cur.end()) > 5) {
    next[0] = reduce_at(0, 1);
    for (std::size_t i = 1; i < n; ++i) next[i] = reduce_at(i, i - 1);
    cur.swap(next);
  }

  for (std::uint64_t v = 3; v <= 5; ++v) {
    for (std::size_t i = 0; i < n; ++i) {
      if (cur[i] != v) continue;
      std::uint64_t pick = 0;
      while ((i > 0 && cur[i - 1] == pick) || (i + 1 < n && cur[i + 1] == pick)) ++pick;
      cur[i] = pick;
    }
  }
  return {cur.begin(), cur.end()};
}

namespace detail {

// Greedy blocking of a run of l >= 2 equal labels: 3s, then 3+1 -> 2+2.
inline void block_run(std::size_t l, std::vector<std::size_t>& out) {
  while (l > 4 || l == 3) {
    out.push_back(3);
    l -= 3;
  }
  if (l == 4) {
    out.insert(out.end(), {2, 2});
  } else if (l == 2) {
    out.push_back(2);
  }
}

// Segments a region without equal neighbours. Landmarks are local maxima of
// the reduced sequence plus local minima that are not next to a maximum;
// a new segment starts at each landmark. Consecutive landmarks are 2 or 3
// apart, so only the outer segments can have length 1.
inline void block_varying(std::span<const std::uint64_t> region, std::vector<std::size_t>& out) {
  const std::size_t k = region.size();
  if (k <= 3) {
    out.push_back(k);
    return;
  }
  const auto d = alphabet_reduction(region);
  auto above = [&](std::size_t i, std::size_t j) { return d[i] > d[j]; };
  std::vector<bool> landmark(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    const bool left = i == 0 || above(i, i - 1);
    const bool right = i + 1 == k || above(i, i + 1);
    if (left && right) landmark[i] = true;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const bool left = i == 0 || above(i - 1, i);
    const bool right = i + 1 == k || above(i + 1, i);
    if (!(left && right)) continue;
    const bool near = (i > 0 && landmark[i - 1]) || (i + 1 < k && landmark[i + 1]);
    if (!near) landmark[i] = true;
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (landmark[i]) {
      out.push_back(i - start);
      start = i;
    }
  }
  out.push_back(k - start);
}

// Folds length-1 segments into a neighbour (the preceding one when it
// exists) and splits any resulting 4 into 2+2.
inline std::vector<std::size_t> normalize_blocks(const std::vector<std::size_t>& segments) {
  std::vector<std::size_t> out;
  out.reserve(segments.size());
  std::size_t carry = 0;
  for (const std::size_t s : segments) {
    if (s == 1 && !out.empty()) {
      if (out.back() == 3) {
        out.back() = 2;
        out.push_back(2);
      } else {
        ++out.back();
      }
      continue;
    }
    if (s == 1) {
      ++carry;
      continue;
    }
    std::size_t len = s + carry;
    carry = 0;
    if (len == 4) {
      out.insert(out.end(), {2, 2});
    } else {
      out.push_back(len);
    }
  }
  if (carry != 0) throw std::logic_error("unabsorbed singleton block");
  return out;
}

}  // namespace detail

// Splits a level of labels (length >= 2) into blocks of 2 or 3. Maximal runs
// of one label are blocked greedily; the stretches in between are blocked
// around landmarks of their alphabet-reduced form. Boundaries depend only on
// the enclosing region, so the locality radius is the distance to the nearest
// run boundary. Returns block lengths in order.
inline std::vector<std::size_t> partition_level(std::span<const std::uint64_t> labels) {
  const std::size_t n = labels.size();
  if (n < 2) throw std::invalid_argument("partition needs a level of length >= 2");
  std::vector<std::size_t> segments;
  std::size_t i = 0;
  std::size_t varying_start = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && labels[j] == labels[i]) ++j;
    if (j - i >= 2) {
      if (varying_start < i) {
        detail::block_varying(labels.subspan(varying_start, i - varying_start), segments);
      }
      detail::block_run(j - i, segments);
      varying_start = j;
    }
    i = j;
  }
  if (varying_start < n) {
    detail::block_varying(labels.subspan(varying_start, n - varying_start), segments);
  }
  return detail::normalize_blocks(segments);
}

struct EspNode {
  std::uint32_t level = 0;
  std::uint8_t child_count = 0;
  std::array<std::uint32_t, 3> children{};
  std::uint64_t start = 0;  // offset of the yield in the text
  std::uint64_t yield_length = 1;
  HashValue label;

  std::span<const std::uint32_t> child_span() const { return {children.data(), child_count}; }
  bool is_leaf() const noexcept { return child_count == 0; }
};

// ESP parse tree. Nodes are stored level by level; leaves come first in text
// order and the root is the last node.
class EspTree {
 public:
  const std::vector<EspNode>& nodes() const noexcept { return nodes_; }
  const EspNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t root() const noexcept { return nodes_.size() - 1; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t height() const noexcept { return level_begin_.size() - 1; }
  std::size_t text_length() const noexcept { return level_begin_.size() > 1 ? level_begin_[1] : nodes_.size(); }

  // Nodes of level l occupy [level_begin(l), level_end(l)).
  std::size_t level_begin(std::size_t l) const { return level_begin_.at(l); }
  std::size_t level_end(std::size_t l) const {
    return l + 1 < level_begin_.size() ? level_begin_[l + 1] : nodes_.size();
  }

  // One node per line, preorder from the root, two spaces of indent per
  // depth: "level yield_length tentative_label".
  void dump(std::ostream& os) const {
    struct Item {
      std::size_t node;
      std::size_t depth;
    };
    std::vector<Item> stack{{root(), 0}};
    while (!stack.empty()) {
      const auto [idx, depth] = stack.back();
      stack.pop_back();
      const EspNode& nd = nodes_[idx];
      os << std::string(2 * depth, ' ') << nd.level << ' ' << nd.yield_length << ' '
         << nd.label.value << '\n';
      for (std::size_t c = nd.child_count; c-- > 0;) stack.push_back({nd.children[c], depth + 1});
    }
  }

  std::string dump() const {
    std::ostringstream os;
    dump(os);
    return os.str();
  }

 private:
  template <class Hasher>
  friend EspTree build_esp_tree(std::span<const Symbol>, const Hasher&);

  std::vector<EspNode> nodes_;
  std::vector<std::size_t> level_begin_;
};

// Parses text bottom-up. Every node is labelled with the hash of its yield,
// obtained from its children with the concatenation rule, so equal yields
// carry equal labels in any tree built with the same hasher.
template <class Hasher>
EspTree build_esp_tree(std::span<const Symbol> text, const Hasher& hasher) {
  if (text.empty()) throw EmptyTextError();
  EspTree tree;
  tree.nodes_.reserve(2 * text.size());
  tree.level_begin_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i) {
    EspNode leaf;
    leaf.start = i;
    leaf.label = hasher.symbol(text[i]);
    tree.nodes_.push_back(leaf);
  }

  std::vector<std::uint64_t> labels;
  std::size_t begin = 0;
  std::size_t end = tree.nodes_.size();
  std::uint32_t level = 0;
  while (end - begin > 1) {
    labels.clear();
    for (std::size_t i = begin; i < end; ++i) labels.push_back(tree.nodes_[i].label.value);
    const auto blocks = partition_level(labels);
    ++level;
    tree.level_begin_.push_back(end);
    std::size_t cursor = begin;
    for (const std::size_t len : blocks) {
      EspNode parent;
      parent.level = level;
      parent.child_count = static_cast<std::uint8_t>(len);
      parent.start = tree.nodes_[cursor].start;
      parent.yield_length = 0;
      for (std::size_t c = 0; c < len; ++c) {
        const EspNode& child = tree.nodes_[cursor + c];
        parent.children[c] = static_cast<std::uint32_t>(cursor + c);
        parent.yield_length += child.yield_length;
        parent.label = c == 0 ? child.label : hasher.combine(parent.label, child.label);
      }
      tree.nodes_.push_back(parent);
      cursor += len;
    }
    begin = end;
    end = tree.nodes_.size();
  }
  return tree;
}

inline EspTree build_esp_tree(std::string_view text, const RollingHash& hasher) {
  return build_esp_tree(
      std::span<const Symbol>(reinterpret_cast<const Symbol*>(text.data()), text.size()), hasher);
}

// Frequency of each label over the nodes of a tree. Absent keys have
// frequency 0; stored frequencies are >= 1.
template <class Key>
struct BasicCharacteristicVector {
  std::map<Key, std::uint64_t> counts;

  void add(const Key& k, std::uint64_t c = 1) {
    if (c != 0) counts[k] += c;
  }
  std::uint64_t at(const Key& k) const {
    const auto it = counts.find(k);
    return it == counts.end() ? 0 : it->second;
  }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [k, c] : counts) t += c;
    return t;
  }
  friend bool operator==(const BasicCharacteristicVector&, const BasicCharacteristicVector&) = default;
};

using CharacteristicVector = BasicCharacteristicVector<std::uint64_t>;

// Counts every node label, leaves included.
inline CharacteristicVector characteristic_vector(const EspTree& tree) {
  CharacteristicVector v;
  for (const auto& nd : tree.nodes()) v.add(nd.label.value);
  return v;
}

// Characteristic vector keyed by the yield string itself: a labelling with
// no conflicts by construction.
inline BasicCharacteristicVector<std::string> yield_vector(const EspTree& tree,
                                                           std::span<const Symbol> text) {
  BasicCharacteristicVector<std::string> v;
  for (const auto& nd : tree.nodes()) {
    v.add(std::string(reinterpret_cast<const char*>(text.data()) + nd.start, nd.yield_length));
  }
  return v;
}

template <class Key>
std::uint64_t l1_distance(const BasicCharacteristicVector<Key>& u,
                          const BasicCharacteristicVector<Key>& v) {
  std::uint64_t d = 0;
  auto a = u.counts.begin();
  auto b = v.counts.begin();
  while (a != u.counts.end() || b != v.counts.end()) {
    if (b == v.counts.end() || (a != u.counts.end() && a->first < b->first)) {
      d += (a++)->second;
    } else if (a == u.counts.end() || b->first < a->first) {
      d += (b++)->second;
    } else {
      d += a->second > b->second ? a->second - b->second : b->second - a->second;
      ++a;
      ++b;
    }
  }
  return d;
}

}  // namespace privedm
