#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "privedm/bytes.hpp"
#include "privedm/random.hpp"

namespace privedm::he {

class HeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyMismatch : public HeError {
 public:
  KeyMismatch() : HeError("ciphertexts are bound to different keys") {}
};

class LevelError : public HeError {
 public:
  using HeError::HeError;
};

class MessageOutOfBound : public HeError {
 public:
  explicit MessageOutOfBound(std::int64_t bound)
      : HeError("message out of bound: plaintext not in [-" + std::to_string(bound) + ", " +
                std::to_string(bound) + "]"),
        bound_(bound) {}
  std::int64_t bound() const noexcept { return bound_; }

 private:
  std::int64_t bound_;
};

class UnsupportedKeySize : public HeError {
 public:
  explicit UnsupportedKeySize(int bits)
      : HeError("unsupported key size: " + std::to_string(bits) + " bits") {}
};

inline constexpr int kDefaultSecurityBits = 256;
inline constexpr int kSupportedSecurityBits[] = {128, 256, 512};

inline void check_security_bits(int bits) {
  for (const int b : kSupportedSecurityBits) {
    if (b == bits) return;
  }
  throw UnsupportedKeySize(bits);
}

// Additive HE with a single multiplication. Level-1 ciphertexts support add,
// scalar_mul and one multiply producing a level-2 ciphertext; level-2
// ciphertexts support add and scalar_mul only. `encode` is the trivial,
// non-hiding embedding of a public constant.
template <class S>
concept TwoLevelScheme = requires(const typename S::PublicKey& pk, const typename S::SecretKey& sk,
                                  const typename S::Ciphertext& c, std::int64_t x, int level,
                                  Rng& rng, std::span<const std::uint8_t> bytes) {
  typename S::KeyPair;
  { S::keygen(kDefaultSecurityBits, x, rng) } -> std::same_as<typename S::KeyPair>;
  { S::encrypt(pk, x, level, rng) } -> std::same_as<typename S::Ciphertext>;
  { S::encode(pk, x, level) } -> std::same_as<typename S::Ciphertext>;
  { S::add(pk, c, c) } -> std::same_as<typename S::Ciphertext>;
  { S::scalar_mul(pk, c, x) } -> std::same_as<typename S::Ciphertext>;
  { S::multiply(pk, c, c) } -> std::same_as<typename S::Ciphertext>;
  { S::lift(pk, c) } -> std::same_as<typename S::Ciphertext>;
  { S::decrypt(sk, c) } -> std::same_as<std::int64_t>;
  { S::payload(pk, c) } -> std::same_as<Bytes>;
  { S::from_payload(pk, level, x, bytes) } -> std::same_as<typename S::Ciphertext>;
  { S::serialize_public_key(pk) } -> std::same_as<Bytes>;
  { S::parse_public_key(bytes) } -> std::same_as<typename S::PublicKey>;
  { c.level } -> std::convertible_to<int>;
  { c.key_id } -> std::convertible_to<std::uint32_t>;
  { pk.key_id } -> std::convertible_to<std::uint32_t>;
  { pk.bound } -> std::convertible_to<std::int64_t>;
  { S::max_bound } -> std::convertible_to<std::int64_t>;
  { S::default_sigma } -> std::convertible_to<int>;
};

template <class C>
void require_same_key(const C& a, const C& b) {
  if (a.key_id != b.key_id) throw KeyMismatch();
}

template <class C, class K>
void require_key(const K& pk, const C& c) {
  if (c.key_id != pk.key_id) throw KeyMismatch();
}

inline void require_level(int level) {
  if (level != 1 && level != 2) throw LevelError("level must be 1 or 2, got " + std::to_string(level));
}

// Wire encoding shared by all backends: level (1 byte), key_id (u32),
// payload length (u32), payload.
template <TwoLevelScheme S>
void write_ciphertext(ByteWriter& w, const typename S::PublicKey& pk,
                      const typename S::Ciphertext& c) {
  w.u8(static_cast<std::uint8_t>(c.level));
  w.u32(c.key_id);
  w.blob(S::payload(pk, c));
}

template <TwoLevelScheme S>
typename S::Ciphertext read_ciphertext(ByteReader& r, const typename S::PublicKey& pk) {
  const std::size_t at = r.offset();
  const int level = r.u8();
  if (level != 1 && level != 2) throw MalformedInput("bad ciphertext level", at);
  const std::uint32_t key_id = r.u32();
  if (key_id != pk.key_id) throw MalformedInput("ciphertext bound to an unexpected key", at + 1);
  return S::from_payload(pk, level, key_id, r.blob());
}

// Homomorphic OR of two encrypted bits, x + y - x*y, as a level-2
// ciphertext. Computed as x*(1 - y) + y: one multiplication.
template <TwoLevelScheme S>
typename S::Ciphertext encrypted_or(const typename S::PublicKey& pk, const typename S::Ciphertext& cx,
                                    const typename S::Ciphertext& cy) {
  const auto not_y = S::add(pk, S::encode(pk, 1, 1), S::scalar_mul(pk, cy, -1));
  return S::add(pk, S::multiply(pk, cx, not_y), S::lift(pk, cy));
}

}  // namespace privedm::he
