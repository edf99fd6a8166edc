#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

#include "privedm/he/scheme.hpp"

namespace privedm::he {

// Cleartext backend: plaintexts travel with their level and key tags and no
// encryption at all. It enforces the same level and key discipline as the
// cryptographic backend and serves as its oracle and as the fast backend for
// large protocol runs.
struct ClearScheme {
  static constexpr std::string_view name = "clear";
  static constexpr std::int64_t max_bound = std::int64_t{1} << 61;
  // Blind range exponent used by the labeling protocol unless configured.
  static constexpr int default_sigma = 30;

  struct PublicKey {
    std::uint32_t key_id = 0;
    std::int64_t bound = 0;
    int security_bits = kDefaultSecurityBits;
  };
  struct SecretKey {
    std::uint32_t key_id = 0;
    std::int64_t bound = 0;
  };
  struct KeyPair {
    PublicKey pk;
    SecretKey sk;
  };
  struct Ciphertext {
    int level = 1;
    std::uint32_t key_id = 0;
    std::int64_t value = 0;
  };

  static KeyPair keygen(int security_bits, std::int64_t bound, Rng& rng) {
    check_security_bits(security_bits);
    if (bound < 1 || bound > max_bound) throw HeError("message bound must lie in [1, 2^61]");
    const auto id = static_cast<std::uint32_t>(rng());
    return {{id, bound, security_bits}, {id, bound}};
  }

  static Ciphertext encrypt(const PublicKey& pk, std::int64_t x, int level, Rng&) {
    return encode(pk, x, level);
  }

  static Ciphertext encode(const PublicKey& pk, std::int64_t x, int level) {
    require_level(level);
    if (x > pk.bound || x < -pk.bound) throw MessageOutOfBound(pk.bound);
    return {level, pk.key_id, x};
  }

  static Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
    require_key(pk, a);
    require_same_key(a, b);
    if (a.level != b.level) throw LevelError("cannot add ciphertexts of different levels");
    std::int64_t v = 0;
    if (__builtin_add_overflow(a.value, b.value, &v)) throw HeError("clear backend overflow");
    return {a.level, a.key_id, v};
  }

  static Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, std::int64_t k) {
    require_key(pk, c);
    std::int64_t v = 0;
    if (__builtin_mul_overflow(c.value, k, &v)) throw HeError("clear backend overflow");
    return {c.level, c.key_id, v};
  }

  static Ciphertext multiply(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
    require_key(pk, a);
    require_same_key(a, b);
    if (a.level != 1 || b.level != 1) {
      throw LevelError("multiplication budget exhausted: operands must be level 1");
    }
    std::int64_t v = 0;
    if (__builtin_mul_overflow(a.value, b.value, &v)) throw HeError("clear backend overflow");
    return {2, a.key_id, v};
  }

  static Ciphertext lift(const PublicKey& pk, const Ciphertext& c) {
    require_key(pk, c);
    if (c.level != 1) throw LevelError("only level-1 ciphertexts can be lifted");
    return {2, c.key_id, c.value};
  }

  static std::int64_t decrypt(const SecretKey& sk, const Ciphertext& c) {
    if (c.key_id != sk.key_id) throw KeyMismatch();
    if (c.value > sk.bound || c.value < -sk.bound) throw MessageOutOfBound(sk.bound);
    return c.value;
  }

  static Bytes payload(const PublicKey&, const Ciphertext& c) {
    Bytes out;
    ByteWriter w(out);
    w.i64(c.value);
    w.u8(static_cast<std::uint8_t>(c.level));
    w.u32(c.key_id);
    return out;
  }

  static Ciphertext from_payload(const PublicKey& pk, int level, std::int64_t key_id,
                                 std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    Ciphertext c;
    c.value = r.i64();
    c.level = r.u8();
    c.key_id = r.u32();
    r.expect_done();
    if (c.level != level || c.key_id != static_cast<std::uint32_t>(key_id) ||
        c.key_id != pk.key_id) {
      throw MalformedInput("clear ciphertext header and payload disagree", 0);
    }
    return c;
  }

  static Bytes serialize_public_key(const PublicKey& pk) {
    Bytes out;
    ByteWriter w(out);
    w.u32(pk.key_id);
    w.i64(pk.bound);
    w.u32(static_cast<std::uint32_t>(pk.security_bits));
    return out;
  }

  static PublicKey parse_public_key(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    PublicKey pk;
    pk.key_id = r.u32();
    pk.bound = r.i64();
    pk.security_bits = static_cast<int>(r.u32());
    r.expect_done();
    return pk;
  }
};

static_assert(TwoLevelScheme<ClearScheme>);

}  // namespace privedm::he
