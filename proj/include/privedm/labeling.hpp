#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "privedm/errors.hpp"
#include "privedm/esp.hpp"
#include "privedm/he/scheme.hpp"
#include "privedm/random.hpp"
#include "privedm/transport.hpp"
#include "privedm/two_party.hpp"

namespace privedm {

// Sorted, duplicate-free tentative labels of one party.
struct LabelSet {
  std::vector<std::uint64_t> labels;

  LabelSet() = default;
  explicit LabelSet(std::vector<std::uint64_t> v) : labels(std::move(v)) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  std::size_t size() const noexcept { return labels.size(); }
  bool contains(std::uint64_t l) const { return std::binary_search(labels.begin(), labels.end(), l); }
  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

inline LabelSet tentative_label_set(const EspTree& tree) {
  std::vector<std::uint64_t> v;
  v.reserve(tree.size());
  for (const auto& nd : tree.nodes()) v.push_back(nd.label.value);
  return LabelSet(std::move(v));
}

using BitVector = std::vector<std::uint8_t>;

inline BitVector build_bit_vector(const LabelSet& s, std::uint64_t m) {
  BitVector bits(m, 0);
  for (const auto l : s.labels) {
    if (l >= m) {
      throw ConfigError("label " + std::to_string(l) + " outside bit vector of length " + std::to_string(m));
    }
    bits[l] = 1;
  }
  return bits;
}

// Position-wise OR of an encrypted bit vector with a plaintext one. The
// plaintext side is encrypted under the same key first, so every output is a
// fresh level-2 ciphertext regardless of the local bit.
template <he::TwoLevelScheme S>
std::vector<typename S::Ciphertext> encrypted_union(const typename S::PublicKey& pk,
                                                    std::span<const typename S::Ciphertext> enc_x,
                                                    const BitVector& y, Rng& rng) {
  if (enc_x.size() != y.size()) {
    throw ProtocolError("bit vector length mismatch: " + std::to_string(enc_x.size()) + " vs " +
                        std::to_string(y.size()));
  }
  std::vector<typename S::Ciphertext> out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto cy = S::encrypt(pk, y[i], 1, rng);
    out.push_back(he::encrypted_or<S>(pk, enc_x[i], cy));
  }
  return out;
}

// Encrypted rank of each queried position: the number of set bits at
// positions <= query. One running sum over the vector; queries may repeat
// and come in any order.
template <he::TwoLevelScheme S>
std::vector<typename S::Ciphertext> encrypted_prefix_ranks(const typename S::PublicKey& pk,
                                                           std::span<const typename S::Ciphertext> uni,
                                                           std::span<const std::uint64_t> queries) {
  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (queries[i] >= uni.size()) {
      throw ProtocolError("rank query " + std::to_string(queries[i]) + " outside vector of length " +
                          std::to_string(uni.size()));
    }
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return queries[a] < queries[b]; });
  std::vector<typename S::Ciphertext> out(queries.size());
  if (queries.empty()) return out;
  auto running = S::encode(pk, 0, 2);
  std::size_t next = 0;
  for (std::size_t i = 0; i < uni.size() && next < order.size(); ++i) {
    running = S::add(pk, running, uni[i]);
    while (next < order.size() && queries[order[next]] == i) out[order[next++]] = running;
  }
  return out;
}

template <class C>
struct BlindedRanks {
  std::vector<C> blinded;
  std::vector<std::int64_t> blinds;
};

template <he::TwoLevelScheme S>
BlindedRanks<typename S::Ciphertext> blind_ranks(const typename S::PublicKey& pk,
                                                 std::span<const typename S::Ciphertext> ranks,
                                                 std::uint64_t range, Rng& rng) {
  if (range < 1) throw ConfigError("blind range must be >= 1");
  BlindedRanks<typename S::Ciphertext> out;
  out.blinded.reserve(ranks.size());
  out.blinds.reserve(ranks.size());
  for (const auto& c : ranks) {
    const auto r = static_cast<std::int64_t>(uniform_below(rng, range));
    out.blinded.push_back(S::add(pk, c, S::encode(pk, r, c.level)));
    out.blinds.push_back(r);
  }
  return out;
}

template <he::TwoLevelScheme S>
std::vector<std::int64_t> decrypt_ranks(const typename S::SecretKey& sk,
                                        std::span<const typename S::Ciphertext> blinded) {
  std::vector<std::int64_t> out;
  out.reserve(blinded.size());
  for (const auto& c : blinded) out.push_back(S::decrypt(sk, c));
  return out;
}

// Removes blinds; every result must land in [lo, hi].
inline std::vector<std::uint64_t> unblind(std::span<const std::int64_t> values,
                                          std::span<const std::int64_t> blinds, std::uint64_t lo,
                                          std::uint64_t hi) {
  if (values.size() != blinds.size()) {
    throw ProtocolError("expected " + std::to_string(blinds.size()) + " decrypted ranks, got " +
                        std::to_string(values.size()));
  }
  std::vector<std::uint64_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::int64_t v = values[i] - blinds[i];
    if (v < 0 || static_cast<std::uint64_t>(v) < lo || static_cast<std::uint64_t>(v) > hi) {
      throw ProtocolError("unblinded rank " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    out[i] = static_cast<std::uint64_t>(v);
  }
  return out;
}

struct Phase1Config {
  std::uint64_t m = 1031;         // bit vector length = hash modulus
  std::uint64_t hash_base = 256;  // b, used when labels come from texts
  int sigma = -1;                 // blind range is n_cap * 2^sigma; -1 = backend default
  std::uint64_t n_cap = 0;        // public bound on n; 0 = m
  bool pad = false;               // pad each query list to n_cap entries
  bool reveal_union_size = true;  // extra query at m-1 publishes n
  int security_bits = he::kDefaultSecurityBits;
  std::uint64_t seed = 0;

  std::uint64_t cap() const { return n_cap == 0 ? m : n_cap; }

  std::uint64_t blind_range() const {
    if (sigma < 0 || sigma > 62) throw ConfigError("sigma must lie in [0, 62], got " + std::to_string(sigma));
    const std::uint64_t c = cap();
    if (c > (std::numeric_limits<std::uint64_t>::max() >> sigma)) throw ConfigError("blind range overflows");
    return c << sigma;
  }

  // M = n_cap + R: the largest plaintext a blinded rank can take.
  std::int64_t message_bound() const {
    const std::uint64_t r = blind_range();
    const std::uint64_t total = cap() + r;
    if (total < r || total > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw ConfigError("message bound overflows");
    }
    return static_cast<std::int64_t>(total);
  }

  template <he::TwoLevelScheme S>
  Phase1Config resolved() const {
    Phase1Config c = *this;
    if (c.sigma < 0) c.sigma = S::default_sigma;
    return c;
  }

  // Called before any message is sent.
  template <he::TwoLevelScheme S>
  void validate() const {
    if (m < 2 || m > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError("modulus m must lie in [2, 2^32), got " + std::to_string(m));
    }
    if (hash_base < 2) throw ConfigError("hash base must be >= 2");
    he::check_security_bits(security_bits);
    const std::int64_t bound = message_bound();
    if (bound > S::max_bound) {
      throw ConfigError("n_cap + blind range = " + std::to_string(bound) + " exceeds the " +
                        std::string(S::name) + " backend's message bound " + std::to_string(S::max_bound) +
                        "; lower sigma or n_cap");
    }
  }
};

struct Phase1Result {
  std::map<std::uint64_t, std::uint64_t> final_labels;  // tentative -> rank in 1..n
  std::uint64_t n = 0;                                  // 0 when not revealed
};

struct PartyTimes {
  double setup = 0;       // key generation and exchange
  double preprocess = 0;  // encrypt own vector, union, prefix ranks
  double relabel = 0;     // blind, decrypt the peer's ranks, unblind
  double phase2 = 0;
  std::uint64_t relabeled = 0;  // labels of this party that received a rank
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::string hex_tag(std::uint8_t t) {
  static const char* digits = "0123456789abcdef";
  return std::string("0x") + digits[t >> 4] + digits[t & 15];
}

inline Frame expect_frame(Endpoint& ep, std::uint8_t tag) {
  Frame f = ep.recv();
  if (f.tag != tag) {
    throw ProtocolError("expected message " + hex_tag(tag) + ", got " + hex_tag(f.tag));
  }
  return f;
}

template <he::TwoLevelScheme S>
Bytes encode_ciphertexts(const typename S::PublicKey& pk, std::span<const typename S::Ciphertext> cs) {
  Bytes out;
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(cs.size()));
  for (const auto& c : cs) he::write_ciphertext<S>(w, pk, c);
  return out;
}

template <he::TwoLevelScheme S>
std::vector<typename S::Ciphertext> decode_ciphertexts(const typename S::PublicKey& pk, const Frame& f,
                                                       int level, std::optional<std::uint64_t> expected) {
  ByteReader r(f.body);
  const std::uint32_t count = r.u32();
  if (expected && count != *expected) {
    throw ProtocolError("message " + hex_tag(f.tag) + " carries " + std::to_string(count) +
                        " ciphertexts, expected " + std::to_string(*expected));
  }
  std::vector<typename S::Ciphertext> out;
  out.reserve(std::min<std::size_t>(count, r.remaining()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    out.push_back(he::read_ciphertext<S>(r, pk));
    if (out.back().level != level) {
      throw MalformedInput("message " + hex_tag(f.tag) + " expects level-" + std::to_string(level) +
                               " ciphertexts",
                           at);
    }
  }
  r.expect_done();
  return out;
}

inline Bytes encode_values(std::span<const std::int64_t> vs) {
  Bytes out;
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(vs.size()));
  for (const auto v : vs) w.i64(v);
  return out;
}

inline std::vector<std::int64_t> decode_values(const Frame& f) {
  ByteReader r(f.body);
  const std::uint32_t count = r.u32();
  std::vector<std::int64_t> out;
  out.reserve(std::min<std::size_t>(count, r.remaining() / 8));
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(r.i64());
  r.expect_done();
  return out;
}

}  // namespace detail

// One party's protocol state: its keys, the peer's public key and a
// recording channel. Strictly sequential; the peer runs its own session
// concurrently on the other end of the channel.
template <he::TwoLevelScheme S>
class PartySession {
 public:
  using Ciphertext = typename S::Ciphertext;

  PartySession(Party who, Endpoint& channel, PartyLog& log, const Phase1Config& cfg, bool keep_frames = false)
      : who_(who),
        cfg_(cfg.template resolved<S>()),
        ep_(channel, log, keep_frames),
        rng_(derive_seed(cfg.seed, who == Party::A ? "party-a" : "party-b")) {
    cfg_.template validate<S>();
  }

  Party who() const noexcept { return who_; }
  const Phase1Config& config() const noexcept { return cfg_; }
  RecordingEndpoint& channel() noexcept { return ep_; }
  Rng& rng() noexcept { return rng_; }
  const PartyTimes& times() const noexcept { return times_; }
  PartyTimes& times() noexcept { return times_; }
  bool has_keys() const noexcept { return keys_.has_value(); }
  const typename S::KeyPair& keys() const { return *keys_; }
  const typename S::PublicKey& peer_key() const { return *peer_pk_; }

  // Key generation and public-key exchange (setup traffic).
  void exchange_keys() {
    if (keys_) return;
    const auto t0 = detail::Clock::now();
    keys_ = S::keygen(cfg_.security_bits, cfg_.message_bound(), rng_);
    ep_.send({tag::kPublicKey, S::serialize_public_key(keys_->pk)});
    const Frame f = detail::expect_frame(ep_, tag::kPublicKey);
    peer_pk_ = S::parse_public_key(f.body);
    if (peer_pk_->bound != keys_->pk.bound) {
      throw ProtocolError("peer key uses message bound " + std::to_string(peer_pk_->bound) + ", expected " +
                          std::to_string(keys_->pk.bound));
    }
    times_.setup += detail::seconds_since(t0);
  }

  // Runs both directions of the relabeling for this party's labels.
  Phase1Result relabel(const LabelSet& mine) {
    const std::uint64_t m = cfg_.m;
    const BitVector bits = build_bit_vector(mine, m);

    std::vector<std::uint64_t> queries = mine.labels;
    if (cfg_.pad) {
      if (queries.size() > cfg_.cap()) {
        throw ConfigError("label count " + std::to_string(queries.size()) + " exceeds n_cap " +
                          std::to_string(cfg_.cap()));
      }
      queries.resize(cfg_.cap(), m - 1);
    }
    const std::size_t own = mine.size();
    const std::size_t padded = queries.size();
    if (cfg_.reveal_union_size) queries.push_back(m - 1);

    exchange_keys();

    // Own encrypted bit vector out.
    auto t0 = detail::Clock::now();
    {
      Bytes body;
      ByteWriter w(body);
      w.u32(static_cast<std::uint32_t>(m));
      for (std::uint64_t i = 0; i < m; ++i) {
        he::write_ciphertext<S>(w, keys_->pk, S::encrypt(keys_->pk, bits[i], 1, rng_));
      }
      ep_.send({tag::kEncBitVector, std::move(body)});
    }
    times_.preprocess += detail::seconds_since(t0);

    // Union and ranks on the peer's vector, under the peer's key.
    const Frame fx = detail::expect_frame(ep_, tag::kEncBitVector);
    t0 = detail::Clock::now();
    const auto enc_x = detail::decode_ciphertexts<S>(*peer_pk_, fx, 1, m);
    const auto uni = encrypted_union<S>(*peer_pk_, enc_x, bits, rng_);
    const auto ranks = encrypted_prefix_ranks<S>(*peer_pk_, uni, queries);
    times_.preprocess += detail::seconds_since(t0);

    t0 = detail::Clock::now();
    const auto bl = blind_ranks<S>(*peer_pk_, ranks, cfg_.blind_range(), rng_);
    ep_.send({tag::kBlindedRanks, detail::encode_ciphertexts<S>(*peer_pk_, bl.blinded)});
    times_.relabel += detail::seconds_since(t0);

    // Decrypt the peer's blinded ranks under our key.
    const Frame fb = detail::expect_frame(ep_, tag::kBlindedRanks);
    t0 = detail::Clock::now();
    const auto peer_blinded = detail::decode_ciphertexts<S>(keys_->pk, fb, 2, std::nullopt);
    if (peer_blinded.size() > static_cast<std::size_t>(m) + cfg_.cap() + 1) {
      throw ProtocolError("peer sent " + std::to_string(peer_blinded.size()) + " rank queries");
    }
    ep_.send({tag::kDecryptedRanks, detail::encode_values(decrypt_ranks<S>(keys_->sk, peer_blinded))});
    times_.relabel += detail::seconds_since(t0);

    // Unblind our own ranks.
    const Frame fd = detail::expect_frame(ep_, tag::kDecryptedRanks);
    t0 = detail::Clock::now();
    const auto values = detail::decode_values(fd);
    Phase1Result res;
    std::uint64_t hi = m;
    if (cfg_.reveal_union_size) {
      if (values.size() != queries.size()) {
        throw ProtocolError("expected " + std::to_string(queries.size()) + " decrypted ranks, got " +
                            std::to_string(values.size()));
      }
      res.n = unblind(std::span(values).last(1), std::span(bl.blinds).last(1), 0, m)[0];
      hi = res.n;
    }
    const auto plain = unblind(values, bl.blinds, 0, m);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < own; ++i) {
      if (plain[i] < 1 || plain[i] > hi || plain[i] <= prev) {
        throw ProtocolError("rank " + std::to_string(plain[i]) + " for label " + std::to_string(mine.labels[i]) +
                            " breaks monotonicity or the range [1, " + std::to_string(hi) + "]");
      }
      prev = plain[i];
      res.final_labels.emplace(mine.labels[i], plain[i]);
    }
    for (std::size_t i = own; i < padded; ++i) {
      if (cfg_.reveal_union_size && plain[i] != res.n) throw ProtocolError("padding query disagrees with n");
    }
    times_.relabel += detail::seconds_since(t0);
    times_.relabeled += own;
    return res;
  }

 private:
  Party who_;
  Phase1Config cfg_;
  RecordingEndpoint ep_;
  Rng rng_;
  std::optional<typename S::KeyPair> keys_;
  std::optional<typename S::PublicKey> peer_pk_;
  PartyTimes times_;
};

struct Phase1Run {
  Phase1Result a;
  Phase1Result b;
  Transcript transcript;
  Metrics metrics;
  PartyTimes times_a;
  PartyTimes times_b;
};

namespace detail {

template <he::TwoLevelScheme S, class GetA, class GetB>
Phase1Run run_phase1_with(GetA&& labels_a, GetB&& labels_b, const Phase1Config& cfg, EndpointPair& channels,
                          bool keep_frames) {
  cfg.resolved<S>().template validate<S>();
  Phase1Run run;
  run_two_party(
      *channels.first, *channels.second,
      [&](Endpoint& ep) {
        PartySession<S> s(Party::A, ep, run.transcript.a, cfg, keep_frames);
        run.a = s.relabel(labels_a());
        run.times_a = s.times();
      },
      [&](Endpoint& ep) {
        PartySession<S> s(Party::B, ep, run.transcript.b, cfg, keep_frames);
        run.b = s.relabel(labels_b());
        run.times_b = s.times();
      });
  run.metrics = metrics_snapshot(run.transcript);
  return run;
}

}  // namespace detail

// Both parties over the given channel pair; party A on the calling thread.
template <he::TwoLevelScheme S>
Phase1Run run_phase1(const LabelSet& la, const LabelSet& lb, const Phase1Config& cfg, EndpointPair& channels,
                     bool keep_frames = false) {
  return detail::run_phase1_with<S>([&] { return la; }, [&] { return lb; }, cfg, channels, keep_frames);
}

template <he::TwoLevelScheme S>
Phase1Run run_phase1(const LabelSet& la, const LabelSet& lb, const Phase1Config& cfg) {
  auto channels = make_inproc_pair();
  return run_phase1<S>(la, lb, cfg, channels);
}

// Each party parses its own text on its own thread.
template <he::TwoLevelScheme S>
Phase1Run run_phase1(std::span<const Symbol> text_a, std::span<const Symbol> text_b, const Phase1Config& cfg,
                     EndpointPair& channels, bool keep_frames = false) {
  const RollingHash h(HashConfig{cfg.m, cfg.hash_base});
  return detail::run_phase1_with<S>([&] { return tentative_label_set(build_esp_tree(text_a, h)); },
                                    [&] { return tentative_label_set(build_esp_tree(text_b, h)); }, cfg,
                                    channels, keep_frames);
}

}  // namespace privedm
