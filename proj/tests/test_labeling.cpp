#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "privedm/he/bgn.hpp"
#include "privedm/he/clear.hpp"
#include "privedm/labeling.hpp"
#include "privedm/oracles.hpp"

using namespace privedm;
using he::BgnScheme;
using he::ClearScheme;

namespace {

LabelSet random_set(Rng& rng, std::uint64_t m, std::size_t max) {
  std::vector<std::uint64_t> v(uniform_below(rng, max + 1));
  for (auto& x : v) x = uniform_below(rng, m);
  return LabelSet(std::move(v));
}

const ClearScheme::KeyPair& clear_keys() {
  static const auto kp = [] {
    Rng rng(41);
    return ClearScheme::keygen(128, 1 << 30, rng);
  }();
  return kp;
}

std::vector<ClearScheme::Ciphertext> enc_bits(const BitVector& bits, Rng& rng) {
  std::vector<ClearScheme::Ciphertext> out;
  for (const auto b : bits) out.push_back(ClearScheme::encrypt(clear_keys().pk, b, 1, rng));
  return out;
}

}  // namespace

TEST(LabelSet, SortsAndDeduplicates) {
  const LabelSet s({5, 1, 5, 3, 1});
  EXPECT_EQ(s.labels, (std::vector<std::uint64_t>{1, 3, 5}));
  EXPECT_EQ(s.size(), 3u);
  EXPECT_TRUE(s.contains(3));
  EXPECT_FALSE(s.contains(4));
}

TEST(BitVector, MarksLabelsAndRejectsOutOfRange) {
  EXPECT_EQ(build_bit_vector(LabelSet({0, 3}), 4), (BitVector{1, 0, 0, 1}));
  EXPECT_THROW(build_bit_vector(LabelSet({4}), 4), ConfigError);
}

TEST(EncryptedUnion, OrAndPrefixRanksOnSmallExample) {
  // x = 1001, y = 0011 -> union 1011; ranks at 0, 2, 3 are 1, 2, 3
  Rng rng(42);
  const auto& pk = clear_keys().pk;
  const auto ex = enc_bits({1, 0, 0, 1}, rng);
  const auto uni = encrypted_union<ClearScheme>(pk, ex, {0, 0, 1, 1}, rng);
  std::vector<std::int64_t> bits;
  for (const auto& c : uni) bits.push_back(ClearScheme::decrypt(clear_keys().sk, c));
  EXPECT_EQ(bits, (std::vector<std::int64_t>{1, 0, 1, 1}));
  const std::vector<std::uint64_t> q{3, 0, 2, 3, 1};
  const auto ranks = encrypted_prefix_ranks<ClearScheme>(pk, uni, q);
  std::vector<std::int64_t> got;
  for (const auto& c : ranks) got.push_back(ClearScheme::decrypt(clear_keys().sk, c));
  EXPECT_EQ(got, (std::vector<std::int64_t>{3, 1, 2, 3, 1}));
  EXPECT_THROW(encrypted_prefix_ranks<ClearScheme>(pk, uni, std::vector<std::uint64_t>{4}), ProtocolError);
  EXPECT_THROW(encrypted_union<ClearScheme>(pk, ex, {0, 1}, rng), ProtocolError);
}

TEST(Blinding, UnitRangeIsTheIdentityAndUnblindChecksRange) {
  Rng rng(43);
  const auto& pk = clear_keys().pk;
  std::vector<ClearScheme::Ciphertext> r{ClearScheme::encrypt(pk, 4, 2, rng), ClearScheme::encrypt(pk, 9, 2, rng)};
  const auto b = blind_ranks<ClearScheme>(pk, r, 1, rng);
  EXPECT_EQ(b.blinds, (std::vector<std::int64_t>{0, 0}));
  const auto d = decrypt_ranks<ClearScheme>(clear_keys().sk, b.blinded);
  EXPECT_EQ(unblind(d, b.blinds, 1, 9), (std::vector<std::uint64_t>{4, 9}));
  EXPECT_THROW(unblind(d, b.blinds, 1, 8), ProtocolError);
  EXPECT_THROW(unblind(d, std::vector<std::int64_t>{0}, 1, 9), ProtocolError);
  EXPECT_THROW(blind_ranks<ClearScheme>(pk, r, 0, rng), ConfigError);

  const auto wide = blind_ranks<ClearScheme>(pk, r, 1000, rng);
  EXPECT_EQ(unblind(decrypt_ranks<ClearScheme>(clear_keys().sk, wide.blinded), wide.blinds, 1, 9),
            (std::vector<std::uint64_t>{4, 9}));
}

TEST(Phase1Config, BoundsAndValidation) {
  Phase1Config c;
  c.m = 1031;
  c.sigma = 4;
  EXPECT_EQ(c.cap(), 1031u);
  EXPECT_EQ(c.blind_range(), 1031u * 16);
  EXPECT_EQ(c.message_bound(), 1031 * 17);
  EXPECT_EQ(Phase1Config{}.resolved<BgnScheme>().sigma, BgnScheme::default_sigma);
  c.sigma = 40;
  EXPECT_THROW(c.validate<BgnScheme>(), ConfigError);
  EXPECT_NO_THROW(c.validate<ClearScheme>());
  c.m = 1;
  EXPECT_THROW(c.validate<ClearScheme>(), ConfigError);
  c.m = 1031;
  c.security_bits = 100;
  EXPECT_THROW(c.validate<ClearScheme>(), he::UnsupportedKeySize);
}

TEST(Phase1, MatchesReferenceLabelingOnRandomSets) {
  Rng rng(44);
  for (int t = 0; t < 200; ++t) {
    Phase1Config cfg;
    cfg.m = 2 + uniform_below(rng, 300);
    cfg.seed = rng();
    const LabelSet la = random_set(rng, cfg.m, 40), lb = random_set(rng, cfg.m, 40);
    const auto run = run_phase1<ClearScheme>(la, lb, cfg);
    const auto ref = reference_labeling(la, lb);
    ASSERT_EQ(run.a.n, ref.size());
    ASSERT_EQ(run.b.n, ref.size());
    for (const auto l : la.labels) ASSERT_EQ(run.a.final_labels.at(l), ref.at(l));
    for (const auto l : lb.labels) ASSERT_EQ(run.b.final_labels.at(l), ref.at(l));
    ASSERT_EQ(run.metrics.rounds, 3u);
  }
}

TEST(Phase1, DisjointSetsGetAllRanks) {
  Phase1Config cfg;
  cfg.m = 64;
  const LabelSet la({1, 5, 9, 60}), lb({0, 2, 63});
  const auto run = run_phase1<ClearScheme>(la, lb, cfg);
  EXPECT_EQ(run.a.n, 7u);
  std::set<std::uint64_t> ranks;
  for (const auto& [k, v] : run.a.final_labels) ranks.insert(v);
  for (const auto& [k, v] : run.b.final_labels) ranks.insert(v);
  EXPECT_EQ(ranks, (std::set<std::uint64_t>{1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(run.b.final_labels.at(0), 1u);
  EXPECT_EQ(run.b.final_labels.at(63), 7u);
}

TEST(Phase1, SharedLabelsAgreeAndMapIsOrderPreserving) {
  Phase1Config cfg;
  cfg.m = 1031;
  Rng rng(45);
  const LabelSet la = random_set(rng, 1031, 300), lb = random_set(rng, 1031, 300);
  const auto run = run_phase1<ClearScheme>(la, lb, cfg);
  for (const auto& [k, v] : run.a.final_labels) {
    const auto it = run.b.final_labels.find(k);
    if (it != run.b.final_labels.end()) EXPECT_EQ(it->second, v);
  }
  std::uint64_t prev = 0;
  for (const auto& [k, v] : run.a.final_labels) {
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Phase1, EmptySets) {
  Phase1Config cfg;
  cfg.m = 16;
  const auto run = run_phase1<ClearScheme>(LabelSet{}, LabelSet({3}), cfg);
  EXPECT_EQ(run.a.n, 1u);
  EXPECT_TRUE(run.a.final_labels.empty());
  EXPECT_EQ(run.b.final_labels.at(3), 1u);
}

TEST(Phase1, PaddingHidesLabelCounts) {
  Phase1Config cfg;
  cfg.m = 128;
  cfg.n_cap = 20;
  cfg.pad = true;
  const LabelSet small({4}), big({1, 2, 3, 5, 8, 13, 21, 34, 55, 89});
  const auto r1 = run_phase1<ClearScheme>(small, big, cfg);
  const auto r2 = run_phase1<ClearScheme>(big, small, cfg);
  EXPECT_EQ(r1.metrics.bytes_a_to_b, r1.metrics.bytes_b_to_a);
  EXPECT_EQ(r1.metrics.bytes_a_to_b, r2.metrics.bytes_a_to_b);
  EXPECT_EQ(r1.a.final_labels.at(4), 4u);
  EXPECT_EQ(r1.a.n, 11u);
  cfg.n_cap = 5;
  EXPECT_THROW(run_phase1<ClearScheme>(small, big, cfg), PartyFailure);
}

TEST(Phase1, HiddenUnionSize) {
  Phase1Config cfg;
  cfg.m = 32;
  cfg.reveal_union_size = false;
  const auto run = run_phase1<ClearScheme>(LabelSet({1, 7}), LabelSet({2, 7}), cfg);
  EXPECT_EQ(run.a.n, 0u);
  EXPECT_EQ(run.a.final_labels.at(7), 3u);
  EXPECT_EQ(run.b.final_labels.at(2), 2u);

  // With nothing to relabel, the rank messages carry only their counts.
  const auto empty = run_phase1<ClearScheme>(LabelSet{}, LabelSet{}, cfg);
  EXPECT_EQ(empty.metrics.tag_bytes(tag::kBlindedRanks), 2 * (kFrameHeaderBytes + 4));
  EXPECT_EQ(empty.metrics.tag_bytes(tag::kDecryptedRanks), 2 * (kFrameHeaderBytes + 4));
}

TEST(Phase1, ResultDoesNotDependOnSeed) {
  Rng rng(46);
  const LabelSet la = random_set(rng, 500, 100), lb = random_set(rng, 500, 100);
  Phase1Config cfg;
  cfg.m = 500;
  cfg.seed = 1;
  const auto r1 = run_phase1<ClearScheme>(la, lb, cfg);
  cfg.seed = 2;
  const auto r2 = run_phase1<ClearScheme>(la, lb, cfg);
  EXPECT_EQ(r1.a.final_labels, r2.a.final_labels);
  EXPECT_EQ(r1.b.final_labels, r2.b.final_labels);
}

TEST(Phase1, ByteCountsFollowMessageSizes) {
  Phase1Config cfg;
  cfg.m = 100;
  const LabelSet la({1, 2, 3}), lb({4, 5});
  const auto run = run_phase1<ClearScheme>(la, lb, cfg);
  // clear ciphertext on the wire: level 1 + key 4 + blob length 4 + payload 13
  const std::uint64_t ct = 22;
  EXPECT_EQ(run.metrics.tag_bytes(tag::kEncBitVector), 2 * (kFrameHeaderBytes + 4 + 100 * ct));
  EXPECT_EQ(run.metrics.tag_bytes(tag::kBlindedRanks), 2 * (kFrameHeaderBytes + 4) + (3 + 1 + 2 + 1) * ct);
  EXPECT_EQ(run.metrics.tag_bytes(tag::kDecryptedRanks), 2 * (kFrameHeaderBytes + 4) + (3 + 1 + 2 + 1) * 8);
}

TEST(Phase1, WorksOverSockets) {
  Rng rng(47);
  const LabelSet la = random_set(rng, 200, 50), lb = random_set(rng, 200, 50);
  Phase1Config cfg;
  cfg.m = 200;
  auto sock = make_socket_pair();
  const auto r1 = run_phase1<ClearScheme>(la, lb, cfg, sock);
  const auto r2 = run_phase1<ClearScheme>(la, lb, cfg);
  EXPECT_EQ(r1.a.final_labels, r2.a.final_labels);
  EXPECT_EQ(r1.metrics.total_bytes(), r2.metrics.total_bytes());
}

TEST(Phase1, CryptoBackendSmallRun) {
  Phase1Config cfg;
  cfg.m = 24;
  cfg.security_bits = 128;
  cfg.sigma = 8;
  const LabelSet la({0, 3, 10, 23}), lb({3, 11, 12});
  const auto run = run_phase1<BgnScheme>(la, lb, cfg);
  const auto ref = reference_labeling(la, lb);
  EXPECT_EQ(run.a.n, ref.size());
  for (const auto l : la.labels) EXPECT_EQ(run.a.final_labels.at(l), ref.at(l));
  for (const auto l : lb.labels) EXPECT_EQ(run.b.final_labels.at(l), ref.at(l));
  EXPECT_EQ(run.metrics.rounds, 3u);
}

TEST(Phase1, LabelsFromTexts) {
  Phase1Config cfg;
  cfg.m = 1031;
  const Text a = to_text("abracadabra"), b = to_text("abracadabrx");
  auto ch = make_inproc_pair();
  const auto run = run_phase1<ClearScheme>(a, b, cfg, ch);
  const RollingHash h(HashConfig{1031, 256});
  const auto ref = reference_labeling(tentative_label_set(build_esp_tree(a, h)),
                                      tentative_label_set(build_esp_tree(b, h)));
  EXPECT_EQ(run.a.n, ref.size());
  for (const auto& [k, v] : run.a.final_labels) EXPECT_EQ(v, ref.at(k));
}
