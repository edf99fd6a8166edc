#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "privedm/he/bgn_math.hpp"
#include "privedm/he/scheme.hpp"

namespace privedm::he {

// Boneh-Goh-Nissim two-level encryption over a composite-order subgroup of
// the supersingular curve y^2 = x^3 + x. N = q1*q2 is the subgroup order,
// g generates it and h has order q1. Level 1: C = m*g + r*h. Level 2:
// e(g,g)^m * e(g,h)^r. The secret key q1 projects away the h component;
// the plaintext is then a bounded discrete logarithm, found by baby-step
// giant-step over [-M, M].
struct BgnScheme {
  static constexpr std::string_view name = "crypto";
  static constexpr std::int64_t max_bound = std::int64_t{1} << 40;
  // Smaller than the clear backend's so that decryption of blinded ranks
  // stays in the millisecond range.
  static constexpr int default_sigma = 16;

  struct Params {
    int security_bits = kDefaultSecurityBits;
    mpz_class n;         // subgroup order q1*q2
    mpz_class cofactor;  // (p + 1) / n
    bgn::Curve curve;
    bgn::Point g, h;
    bgn::Fp2 e_gg, e_gh;
    bgn::Curve::FixedBase g_table, h_table;
    bgn::Curve::MillerLines g_lines;  // e(g, .) with g fixed; the pairing is symmetric
    bgn::FixedBasePow e_gg_table, e_gh_table;

    Params(int bits, mpz_class n_, mpz_class cof, const bgn::Point& g_, const bgn::Point& h_)
        : security_bits(bits),
          n(std::move(n_)),
          cofactor(std::move(cof)),
          curve(cofactor * n - 1),
          g(g_),
          h(h_) {
      const std::size_t nbits = mpz_sizeinbase(n.get_mpz_t(), 2);
      e_gg = curve.pairing(g, g, n, cofactor);
      e_gh = curve.pairing(g, h, n, cofactor);
      g_lines = curve.precompute_lines(g, n);
      g_table = bgn::Curve::FixedBase(curve, g, nbits);
      h_table = bgn::Curve::FixedBase(curve, h, nbits);
      e_gg_table = bgn::FixedBasePow(curve.field(), e_gg, nbits);
      e_gh_table = bgn::FixedBasePow(curve.field(), e_gh, nbits);
    }

    const bgn::Field& field() const { return curve.field(); }
    mpz_class reduce_scalar(std::int64_t k) const {
      mpz_class v(static_cast<long>(k));
      mpz_mod(v.get_mpz_t(), v.get_mpz_t(), n.get_mpz_t());
      return v;
    }
  };

  struct PublicKey {
    std::uint32_t key_id = 0;
    std::int64_t bound = 0;
    std::shared_ptr<const Params> params;
  };

  // Baby-step table for base^x, x in [-bound, bound].
  class DiscreteLog {
   public:
    DiscreteLog(const bgn::Field& f, const bgn::Fp2& base, std::int64_t bound) : f_(f), bound_(bound) {
      const auto width = static_cast<unsigned long long>(2 * bound + 1);
      std::uint64_t steps = 1;
      while (steps * steps < width) ++steps;
      steps_ = std::min<std::uint64_t>(steps, 1u << 18);
      baby_.reserve(steps_);
      bgn::Fp2 cur = f.one();
      for (std::uint64_t j = 0; j < steps_; ++j) {
        baby_.emplace(key(cur), j);
        f.mul(cur, cur, base);
      }
      // cur = base^steps; giant step multiplies by its inverse (a conjugate,
      // since pairing values have norm 1)
      giant_ = f.conj(cur);
      shift_ = f.pow(base, mpz_class(static_cast<unsigned long>(bound)));
      base_ = base;
    }

    std::int64_t solve(const bgn::Fp2& target) const {
      bgn::Fp2 y = f_.mul(target, shift_);
      const auto width = static_cast<std::uint64_t>(2 * bound_ + 1);
      for (std::uint64_t i = 0; i * steps_ < width; ++i) {
        auto [lo, hi] = baby_.equal_range(key(y));
        for (auto it = lo; it != hi; ++it) {
          const std::uint64_t cand = i * steps_ + it->second;
          if (cand < width && verify(target, static_cast<std::int64_t>(cand) - bound_)) {
            return static_cast<std::int64_t>(cand) - bound_;
          }
        }
        f_.mul(y, y, giant_);
      }
      throw MessageOutOfBound(bound_);
    }

   private:
    static std::uint64_t key(const bgn::Fp2& a) {
      return mpz_getlimbn(a.re.get_mpz_t(), 0) ^ (mpz_getlimbn(a.im.get_mpz_t(), 0) * 0x9e3779b97f4a7c15ULL);
    }
    bool verify(const bgn::Fp2& target, std::int64_t x) const {
      const mpz_class e(static_cast<unsigned long>(x < 0 ? -x : x));
      bgn::Fp2 v = f_.pow(base_, e);
      if (x < 0) v = f_.conj(v);
      return v == target;
    }

    bgn::Field f_;
    std::int64_t bound_;
    std::uint64_t steps_ = 1;
    std::unordered_multimap<std::uint64_t, std::uint64_t> baby_;
    bgn::Fp2 giant_, shift_, base_;
  };

  struct SecretKey {
    std::uint32_t key_id = 0;
    std::int64_t bound = 0;
    mpz_class q1;
    std::shared_ptr<const Params> params;
    std::shared_ptr<const DiscreteLog> dlog;
  };

  struct KeyPair {
    PublicKey pk;
    SecretKey sk;
  };

  struct Ciphertext {
    int level = 1;
    std::uint32_t key_id = 0;
    bgn::Point c1;   // level 1
    bgn::Fp2 c2;     // level 2
  };

  static KeyPair keygen(int security_bits, std::int64_t bound, Rng& rng) {
    check_security_bits(security_bits);
    if (bound < 1 || bound > max_bound) {
      throw HeError("message bound must lie in [1, 2^40] for bounded decryption");
    }
    const unsigned half = static_cast<unsigned>(security_bits / 2);
    mpz_class q1, q2;
    do {
      q1 = bgn::random_prime(rng, half);
      q2 = bgn::random_prime(rng, static_cast<unsigned>(security_bits) - half);
    } while (q1 == q2);
    const mpz_class n = q1 * q2;
    mpz_class cofactor = 4;
    while (mpz_probab_prime_p(mpz_class(cofactor * n - 1).get_mpz_t(), 30) == 0) cofactor += 4;

    const bgn::Curve curve(cofactor * n - 1);
    bgn::Point g;
    do {
      g = curve.mul(curve.random_point(rng), cofactor);
    } while (g.inf || curve.mul(g, q1).inf || curve.mul(g, q2).inf);
    bgn::Point h;
    do {
      h = curve.mul(curve.mul(curve.random_point(rng), cofactor), q2);
    } while (h.inf);

    auto params = std::make_shared<const Params>(security_bits, n, cofactor, g, h);
    const auto id = static_cast<std::uint32_t>(rng());
    const bgn::Fp2 base = params->field().pow(params->e_gg, q1);
    auto dlog = std::make_shared<const DiscreteLog>(params->field(), base, bound);
    return {{id, bound, params}, {id, bound, q1, params, std::move(dlog)}};
  }

  static Ciphertext encrypt(const PublicKey& pk, std::int64_t x, int level, Rng& rng) {
    Ciphertext c = encode(pk, x, level);
    const Params& P = *pk.params;
    const mpz_class r = bgn::random_below(rng, P.n);
    if (level == 1) {
      c.c1 = P.curve.add(c.c1, P.h_table.mul(P.curve, r));
    } else {
      P.field().mul(c.c2, c.c2, P.e_gh_table.pow(P.field(), r));
    }
    return c;
  }

  static Ciphertext encode(const PublicKey& pk, std::int64_t x, int level) {
    require_level(level);
    if (x > pk.bound || x < -pk.bound) throw MessageOutOfBound(pk.bound);
    const Params& P = *pk.params;
    Ciphertext c;
    c.level = level;
    c.key_id = pk.key_id;
    const mpz_class k = P.reduce_scalar(x);
    if (level == 1) {
      c.c1 = P.g_table.mul(P.curve, k);
    } else {
      c.c2 = P.e_gg_table.pow(P.field(), k);
    }
    return c;
  }

  static Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
    require_key(pk, a);
    require_same_key(a, b);
    if (a.level != b.level) throw LevelError("cannot add ciphertexts of different levels");
    Ciphertext c{a.level, a.key_id, {}, {}};
    if (a.level == 1) {
      c.c1 = pk.params->curve.add(a.c1, b.c1);
    } else {
      pk.params->field().mul(c.c2, a.c2, b.c2);
    }
    return c;
  }

  static Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& a, std::int64_t k) {
    require_key(pk, a);
    const Params& P = *pk.params;
    Ciphertext c{a.level, a.key_id, {}, {}};
    if (a.level == 1) {
      if (k == -1) {
        c.c1 = P.curve.neg(a.c1);
      } else {
        c.c1 = P.curve.mul(a.c1, P.reduce_scalar(k));
      }
    } else {
      const mpz_class e(static_cast<unsigned long>(k < 0 ? -k : k));
      c.c2 = P.field().pow(a.c2, e);
      if (k < 0) c.c2 = P.field().conj(c.c2);
    }
    return c;
  }

  static Ciphertext multiply(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
    require_key(pk, a);
    require_same_key(a, b);
    if (a.level != 1 || b.level != 1) {
      throw LevelError("multiplication budget exhausted: operands must be level 1");
    }
    const Params& P = *pk.params;
    Ciphertext c{2, a.key_id, {}, {}};
    c.c2 = P.curve.pairing(a.c1, b.c1, P.n, P.cofactor);
    return c;
  }

  static Ciphertext lift(const PublicKey& pk, const Ciphertext& a) {
    require_key(pk, a);
    if (a.level != 1) throw LevelError("only level-1 ciphertexts can be lifted");
    const Params& P = *pk.params;
    Ciphertext c{2, a.key_id, {}, {}};
    c.c2 = P.curve.pairing(P.g_lines, a.c1, P.cofactor);
    return c;
  }

  static std::int64_t decrypt(const SecretKey& sk, const Ciphertext& c) {
    if (c.key_id != sk.key_id) throw KeyMismatch();
    const Params& P = *sk.params;
    bgn::Fp2 t;
    if (c.level == 1) {
      t = P.field().pow(P.curve.pairing(P.g_lines, c.c1, P.cofactor), sk.q1);
    } else {
      t = P.field().pow(c.c2, sk.q1);
    }
    return sk.dlog->solve(t);
  }

  static Bytes payload(const PublicKey& pk, const Ciphertext& c) {
    Bytes out;
    if (c.level == 1) {
      pk.params->curve.write(out, c.c1);
    } else {
      pk.params->field().write(out, c.c2);
    }
    return out;
  }

  static Ciphertext from_payload(const PublicKey& pk, int level, std::int64_t key_id,
                                 std::span<const std::uint8_t> bytes) {
    Ciphertext c;
    c.level = level;
    c.key_id = static_cast<std::uint32_t>(key_id);
    if (level == 1) {
      c.c1 = pk.params->curve.read(bytes);
    } else {
      c.c2 = pk.params->field().read(bytes);
    }
    return c;
  }

  static Bytes serialize_public_key(const PublicKey& pk) {
    Bytes out;
    ByteWriter w(out);
    const Params& P = *pk.params;
    w.u32(pk.key_id);
    w.i64(pk.bound);
    w.u32(static_cast<std::uint32_t>(P.security_bits));
    bgn::write_mpz(w, P.n);
    bgn::write_mpz(w, P.cofactor);
    Bytes pts;
    P.curve.write(pts, P.g);
    P.curve.write(pts, P.h);
    w.blob(pts);
    return out;
  }

  static PublicKey parse_public_key(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    PublicKey pk;
    pk.key_id = r.u32();
    pk.bound = r.i64();
    const int bits = static_cast<int>(r.u32());
    check_security_bits(bits);
    mpz_class n = bgn::read_mpz(r);
    mpz_class cofactor = bgn::read_mpz(r);
    const auto pts = r.blob();
    r.expect_done();
    if (mpz_fdiv_ui(cofactor.get_mpz_t(), 4) != 0) throw MalformedInput("bad cofactor", 0);
    const bgn::Curve curve(cofactor * n - 1);
    const std::size_t pb = curve.point_bytes();
    if (pts.size() != 2 * pb) throw MalformedInput("bad public key points", 0);
    const bgn::Point g = curve.read(pts.first(pb));
    const bgn::Point h = curve.read(pts.subspan(pb));
    pk.params = std::make_shared<const Params>(bits, std::move(n), std::move(cofactor), g, h);
    return pk;
  }
};

static_assert(TwoLevelScheme<BgnScheme>);

}  // namespace privedm::he
