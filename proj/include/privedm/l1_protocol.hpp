#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <utility>
#include <vector>

#include "privedm/labeling.hpp"

namespace privedm {

// Frequencies indexed by final label: entry i holds the count of label i+1.
using RankVector = std::vector<std::int64_t>;

// Moves a tentative-label characteristic vector onto final labels 1..n.
// Tentative labels that share a rank (hash conflicts) add up.
inline RankVector rank_vector(const CharacteristicVector& v, const Phase1Result& r, std::uint64_t n) {
  RankVector out(n, 0);
  for (const auto& [label, count] : v.counts) {
    const auto it = r.final_labels.find(label);
    if (it == r.final_labels.end()) throw ProtocolError("no final label for tentative label " + std::to_string(label));
    if (it->second < 1 || it->second > n) throw ProtocolError("final label outside 1..n");
    out[it->second - 1] += static_cast<std::int64_t>(count);
  }
  return out;
}

inline std::uint64_t l1_distance(const RankVector& u, const RankVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("rank vectors differ in length");
  std::uint64_t d = 0;
  for (std::size_t i = 0; i < u.size(); ++i) d += static_cast<std::uint64_t>(std::llabs(u[i] - v[i]));
  return d;
}

namespace detail {

inline void check_counts(const RankVector& v, std::int64_t bound) {
  for (const auto c : v) {
    if (c < 0 || c > bound) {
      throw ConfigError("label frequency " + std::to_string(c) + " exceeds message bound " + std::to_string(bound) +
                        "; raise sigma or n_cap for a larger M");
    }
  }
}

inline Bytes encode_cardinality(std::uint64_t n) {
  Bytes out;
  ByteWriter w(out);
  w.u64(n);
  return out;
}

inline std::uint64_t decode_cardinality(const Frame& f) {
  ByteReader r(f.body);
  const std::uint64_t n = r.u64();
  r.expect_done();
  return n;
}

}  // namespace detail

// Phase 2 for one party. A sends E_A(v_a); B answers with
// E_A(s_i * (v_a[i] - v_b[i])) under random signs and a random permutation;
// A decrypts and sums absolute values. A returns L1, B returns nullopt.
// Both announce n first and check that they agree.
template <he::TwoLevelScheme S>
std::optional<std::uint64_t> run_phase2_party(PartySession<S>& s, const RankVector& v) {
  s.exchange_keys();
  auto& ep = s.channel();
  const std::uint64_t n = v.size();
  const auto t0 = detail::Clock::now();
  double waited = 0;
  auto timed_expect = [&](std::uint8_t t) {
    const auto w0 = detail::Clock::now();
    Frame f = detail::expect_frame(ep, t);
    waited += detail::seconds_since(w0);
    return f;
  };

  std::optional<std::uint64_t> result;
  if (s.who() == Party::A) {
    const auto& pk = s.keys().pk;
    detail::check_counts(v, pk.bound);
    ep.send({tag::kUnionCardinality, detail::encode_cardinality(n)});
    std::vector<typename S::Ciphertext> enc;
    enc.reserve(n);
    for (const auto c : v) enc.push_back(S::encrypt(pk, c, 1, s.rng()));
    ep.send({tag::kEncVector, detail::encode_ciphertexts<S>(pk, enc)});

    const std::uint64_t peer_n = detail::decode_cardinality(timed_expect(tag::kUnionCardinality));
    if (peer_n != n) {
      throw ProtocolError("union size disagreement: local n = " + std::to_string(n) +
                          ", peer n = " + std::to_string(peer_n));
    }
    const auto diffs = detail::decode_ciphertexts<S>(pk, timed_expect(tag::kBlindedDiffs), 1, n);
    std::uint64_t total = 0;
    for (const auto& c : diffs) total += static_cast<std::uint64_t>(std::llabs(S::decrypt(s.keys().sk, c)));
    result = total;
  } else {
    const auto& pk = s.peer_key();
    detail::check_counts(v, pk.bound);
    ep.send({tag::kUnionCardinality, detail::encode_cardinality(n)});
    const std::uint64_t peer_n = detail::decode_cardinality(timed_expect(tag::kUnionCardinality));
    if (peer_n != n) {
      throw ProtocolError("union size disagreement: local n = " + std::to_string(n) +
                          ", peer n = " + std::to_string(peer_n));
    }
    const auto enc_a = detail::decode_ciphertexts<S>(pk, timed_expect(tag::kEncVector), 1, n);
    std::vector<typename S::Ciphertext> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto eb = S::encrypt(pk, v[i], 1, s.rng());
      const auto diff = S::add(pk, enc_a[i], S::scalar_mul(pk, eb, -1));
      const std::int64_t sign = (s.rng()() & 1) ? 1 : -1;
      out.push_back(S::scalar_mul(pk, diff, sign));
    }
    // Fisher-Yates with our own draw so the permutation is identical across
    // standard libraries.
    for (std::uint64_t i = n; i > 1; --i) std::swap(out[i - 1], out[uniform_below(s.rng(), i)]);
    ep.send({tag::kBlindedDiffs, detail::encode_ciphertexts<S>(pk, out)});
  }
  s.times().phase2 += detail::seconds_since(t0) - waited;
  return result;
}

struct Phase2Run {
  std::uint64_t l1 = 0;
  Transcript transcript;
  Metrics metrics;
};

// Standalone Phase 2 over fresh keys (key exchange is setup traffic).
template <he::TwoLevelScheme S>
Phase2Run run_phase2(const RankVector& va, const RankVector& vb, const Phase1Config& cfg, EndpointPair& channels) {
  Phase2Run run;
  Transcript setup;
  run_two_party(
      *channels.first, *channels.second,
      [&](Endpoint& ep) {
        PartySession<S> s(Party::A, ep, setup.a, cfg);
        s.exchange_keys();
        s.channel().set_log(run.transcript.a);
        run.l1 = run_phase2_party<S>(s, va).value();
      },
      [&](Endpoint& ep) {
        PartySession<S> s(Party::B, ep, setup.b, cfg);
        s.exchange_keys();
        s.channel().set_log(run.transcript.b);
        run_phase2_party<S>(s, vb);
      });
  run.metrics = metrics_snapshot(run.transcript);
  return run;
}

template <he::TwoLevelScheme S>
Phase2Run run_phase2(const RankVector& va, const RankVector& vb, const Phase1Config& cfg) {
  auto channels = make_inproc_pair();
  return run_phase2<S>(va, vb, cfg, channels);
}

}  // namespace privedm
