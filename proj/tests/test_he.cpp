#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "privedm/he/bgn.hpp"
#include "privedm/he/clear.hpp"
#include "privedm/he/scheme.hpp"
#include "privedm/random.hpp"

using namespace privedm;
using namespace privedm::he;

namespace {

template <class S>
struct Keys {
  static const typename S::KeyPair& get() {
    static const typename S::KeyPair kp = [] {
      Rng rng(31);
      return S::keygen(128, 1 << 16, rng);
    }();
    return kp;
  }
};

template <class S>
class SchemeTest : public ::testing::Test {
 protected:
  const typename S::PublicKey& pk() const { return Keys<S>::get().pk; }
  const typename S::SecretKey& sk() const { return Keys<S>::get().sk; }
  typename S::Ciphertext enc(std::int64_t x, int level = 1) { return S::encrypt(pk(), x, level, rng_); }
  std::int64_t dec(const typename S::Ciphertext& c) const { return S::decrypt(sk(), c); }
  Rng rng_{32};
};

using Backends = ::testing::Types<ClearScheme, BgnScheme>;
TYPED_TEST_SUITE(SchemeTest, Backends);

}  // namespace

TYPED_TEST(SchemeTest, RoundTripBothLevels) {
  using S = TypeParam;
  for (const std::int64_t x : {0, 1, -1, 2, 1000, -1000, 65535, -65536}) {
    EXPECT_EQ(this->dec(this->enc(x, 1)), x);
    EXPECT_EQ(this->dec(this->enc(x, 2)), x);
    EXPECT_EQ(this->dec(S::encode(this->pk(), x, 1)), x);
  }
}

TYPED_TEST(SchemeTest, AdditiveOperations) {
  using S = TypeParam;
  const auto& pk = this->pk();
  EXPECT_EQ(this->dec(S::add(pk, this->enc(20), this->enc(-7))), 13);
  EXPECT_EQ(this->dec(S::add(pk, this->enc(20, 2), this->enc(22, 2))), 42);
  EXPECT_EQ(this->dec(S::scalar_mul(pk, this->enc(6), -7)), -42);
  EXPECT_EQ(this->dec(S::scalar_mul(pk, this->enc(6, 2), 7)), 42);
  EXPECT_EQ(this->dec(S::scalar_mul(pk, this->enc(6), 0)), 0);
  EXPECT_EQ(this->dec(S::lift(pk, this->enc(-5))), -5);
}

TYPED_TEST(SchemeTest, OneMultiplication) {
  using S = TypeParam;
  const auto& pk = this->pk();
  const auto c = S::multiply(pk, this->enc(6), this->enc(-7));
  EXPECT_EQ(c.level, 2);
  EXPECT_EQ(this->dec(c), -42);
  EXPECT_EQ(this->dec(S::add(pk, c, S::lift(pk, this->enc(2)))), -40);
}

TYPED_TEST(SchemeTest, SecondMultiplicationIsRejected) {
  using S = TypeParam;
  const auto& pk = this->pk();
  const auto c2 = S::multiply(pk, this->enc(2), this->enc(3));
  EXPECT_THROW(S::multiply(pk, c2, this->enc(1)), LevelError);
  EXPECT_THROW(S::multiply(pk, this->enc(1), c2), LevelError);
  EXPECT_THROW(S::lift(pk, c2), LevelError);
  EXPECT_THROW(S::add(pk, c2, this->enc(1)), LevelError);
  EXPECT_THROW(S::encode(pk, 1, 3), LevelError);
}

TYPED_TEST(SchemeTest, OrTruthTable) {
  using S = TypeParam;
  for (int x = 0; x <= 1; ++x) {
    for (int y = 0; y <= 1; ++y) {
      const auto c = encrypted_or<S>(this->pk(), this->enc(x), this->enc(y));
      EXPECT_EQ(c.level, 2);
      EXPECT_EQ(this->dec(c), x | y) << x << " OR " << y;
    }
  }
}

TYPED_TEST(SchemeTest, KeyMismatchIsDetected) {
  using S = TypeParam;
  Rng rng(33);
  const auto other = S::keygen(128, 100, rng);
  const auto mine = this->enc(1);
  const auto theirs = S::encrypt(other.pk, 1, 1, rng);
  EXPECT_THROW(S::add(this->pk(), mine, theirs), KeyMismatch);
  EXPECT_THROW(S::decrypt(other.sk, mine), KeyMismatch);
}

TYPED_TEST(SchemeTest, BoundsAreEnforced) {
  using S = TypeParam;
  Rng rng(34);
  EXPECT_THROW(S::encrypt(this->pk(), (1 << 16) + 1, 1, rng), MessageOutOfBound);
  EXPECT_THROW(S::encrypt(this->pk(), -(1 << 16) - 1, 1, rng), MessageOutOfBound);
  const auto big = S::add(this->pk(), this->enc(1 << 16), this->enc(1));
  EXPECT_THROW(this->dec(big), MessageOutOfBound);
  EXPECT_THROW(S::keygen(128, 0, rng), HeError);
  EXPECT_THROW(S::keygen(128, S::max_bound + 1, rng), HeError);
  EXPECT_THROW(S::keygen(100, 10, rng), UnsupportedKeySize);
}

TYPED_TEST(SchemeTest, SerializationRoundTrip) {
  using S = TypeParam;
  const auto pk2 = S::parse_public_key(S::serialize_public_key(this->pk()));
  EXPECT_EQ(pk2.key_id, this->pk().key_id);
  EXPECT_EQ(pk2.bound, this->pk().bound);
  for (const int level : {1, 2}) {
    Bytes buf;
    ByteWriter w(buf);
    write_ciphertext<S>(w, this->pk(), this->enc(-123, level));
    ByteReader r(buf);
    const auto c = read_ciphertext<S>(r, pk2);
    r.expect_done();
    EXPECT_EQ(c.level, level);
    EXPECT_EQ(this->dec(c), -123);
  }
}

TYPED_TEST(SchemeTest, SerializationRejectsDamage) {
  using S = TypeParam;
  Bytes buf;
  ByteWriter w(buf);
  write_ciphertext<S>(w, this->pk(), this->enc(5));
  Bytes bad_level = buf;
  bad_level[0] = 3;
  ByteReader r1(bad_level);
  EXPECT_THROW(read_ciphertext<S>(r1, this->pk()), MalformedInput);
  Bytes bad_key = buf;
  bad_key[1] ^= 1;
  ByteReader r2(bad_key);
  EXPECT_THROW(read_ciphertext<S>(r2, this->pk()), MalformedInput);
  Bytes cut(buf.begin(), buf.end() - 1);
  ByteReader r3(cut);
  EXPECT_THROW(read_ciphertext<S>(r3, this->pk()), MalformedInput);
}

TEST(Bgn, EncryptionIsRandomized) {
  const auto& pk = Keys<BgnScheme>::get().pk;
  Rng rng(35);
  const auto a = BgnScheme::payload(pk, BgnScheme::encrypt(pk, 7, 1, rng));
  const auto b = BgnScheme::payload(pk, BgnScheme::encrypt(pk, 7, 1, rng));
  EXPECT_NE(a, b);
}

TEST(Bgn, PairingIsBilinearAndSymmetric) {
  const auto& P = *Keys<BgnScheme>::get().pk.params;
  Rng rng(36);
  const auto& f = P.field();
  for (int t = 0; t < 5; ++t) {
    const mpz_class a = bgn::random_below(rng, P.n), b = bgn::random_below(rng, P.n);
    const auto Q = P.curve.mul(P.curve.mul(P.curve.random_point(rng), P.cofactor), 1 + t);
    const auto lhs = P.curve.pairing(P.curve.mul(P.g, a), P.curve.mul(Q, b), P.n, P.cofactor);
    const auto base = P.curve.pairing(P.g, Q, P.n, P.cofactor);
    EXPECT_TRUE(lhs == f.pow(base, a * b));
    EXPECT_TRUE(base == P.curve.pairing(Q, P.g, P.n, P.cofactor));
    EXPECT_TRUE(base == P.curve.pairing(P.g_lines, Q, P.cofactor));
  }
  EXPECT_FALSE(P.e_gg == f.one());
}

TEST(Backends, RandomProgramsAgree) {
  // Same program on both backends: random level-1 inputs, linear ops, at most
  // one multiplication, then level-2 linear ops.
  Rng krng(37);
  const auto ck = ClearScheme::keygen(128, 1 << 20, krng);
  const auto bk = BgnScheme::keygen(128, 1 << 20, krng);
  Rng rng(38);
  for (int t = 0; t < 60; ++t) {
    std::vector<std::int64_t> plain;
    std::vector<ClearScheme::Ciphertext> cc;
    std::vector<BgnScheme::Ciphertext> bc;
    for (int i = 0; i < 3; ++i) {
      const auto x = static_cast<std::int64_t>(uniform_below(rng, 61)) - 30;
      plain.push_back(x);
      cc.push_back(ClearScheme::encrypt(ck.pk, x, 1, rng));
      bc.push_back(BgnScheme::encrypt(bk.pk, x, 1, rng));
    }
    const auto k = static_cast<std::int64_t>(uniform_below(rng, 21)) - 10;
    auto c1 = ClearScheme::add(ck.pk, cc[0], ClearScheme::scalar_mul(ck.pk, cc[1], k));
    auto b1 = BgnScheme::add(bk.pk, bc[0], BgnScheme::scalar_mul(bk.pk, bc[1], k));
    const auto c2 = ClearScheme::add(ck.pk, ClearScheme::multiply(ck.pk, c1, cc[2]), ClearScheme::lift(ck.pk, cc[0]));
    const auto b2 = BgnScheme::add(bk.pk, BgnScheme::multiply(bk.pk, b1, bc[2]), BgnScheme::lift(bk.pk, bc[0]));
    const std::int64_t want = (plain[0] + k * plain[1]) * plain[2] + plain[0];
    EXPECT_EQ(ClearScheme::decrypt(ck.sk, c2), want);
    EXPECT_EQ(BgnScheme::decrypt(bk.sk, b2), want);
  }
}
