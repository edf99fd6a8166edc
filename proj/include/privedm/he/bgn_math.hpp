#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "privedm/bytes.hpp"
#include "privedm/random.hpp"

// Arithmetic for a symmetric pairing on the supersingular curve
// y^2 = x^3 + x over F_p with p = 3 (mod 4). The curve has p + 1 points,
// embedding degree 2, and the distortion map (x, y) -> (-x, i*y) into
// E(F_p^2) makes the reduced Tate pairing non-degenerate on any subgroup of
// order N | p + 1.
namespace privedm::bgn {

inline mpz_class random_below(Rng& rng, const mpz_class& bound) {
  const std::size_t words = mpz_sizeinbase(bound.get_mpz_t(), 2) / 64 + 2;
  mpz_class acc = 0;
  for (std::size_t i = 0; i < words; ++i) {
    acc <<= 64;
    acc += mpz_class(static_cast<unsigned long>(rng()));
  }
  mpz_class r;
  mpz_mod(r.get_mpz_t(), acc.get_mpz_t(), bound.get_mpz_t());
  return r;
}

inline mpz_class random_prime(Rng& rng, unsigned bits) {
  mpz_class top = mpz_class(1) << (bits - 1);
  mpz_class candidate = top + random_below(rng, top);
  candidate |= 1;
  mpz_class p;
  mpz_nextprime(p.get_mpz_t(), candidate.get_mpz_t());
  if (mpz_sizeinbase(p.get_mpz_t(), 2) != bits) return random_prime(rng, bits);
  return p;
}

// Fixed-width big-endian encoding.
inline void write_fixed(Bytes& out, const mpz_class& v, std::size_t width) {
  const std::size_t start = out.size();
  out.resize(start + width, 0);
  std::size_t count = 0;
  std::vector<std::uint8_t> tmp(mpz_sizeinbase(v.get_mpz_t(), 256) + 1);
  mpz_export(tmp.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  if (count > width) throw std::logic_error("value wider than its field");
  std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(count),
            out.begin() + static_cast<std::ptrdiff_t>(start + width - count));
}

inline mpz_class read_fixed(std::span<const std::uint8_t> in) {
  mpz_class v;
  if (!in.empty()) mpz_import(v.get_mpz_t(), in.size(), 1, 1, 1, 0, in.data());
  return v;
}

inline void write_mpz(ByteWriter& w, const mpz_class& v) {
  Bytes b;
  write_fixed(b, v, mpz_sizeinbase(v.get_mpz_t(), 256));
  w.blob(b);
}

inline mpz_class read_mpz(ByteReader& r) { return read_fixed(r.blob()); }

// Element re + im*i of F_p^2, i^2 = -1.
struct Fp2 {
  mpz_class re = 0;
  mpz_class im = 0;

  friend bool operator==(const Fp2& a, const Fp2& b) { return a.re == b.re && a.im == b.im; }
};

class Field {
 public:
  explicit Field(mpz_class p) : p_(std::move(p)) {}

  const mpz_class& p() const noexcept { return p_; }
  std::size_t width() const { return (mpz_sizeinbase(p_.get_mpz_t(), 2) + 7) / 8; }

  void reduce(mpz_class& a) const { mpz_mod(a.get_mpz_t(), a.get_mpz_t(), p_.get_mpz_t()); }

  mpz_class inv(const mpz_class& a) const {
    mpz_class r;
    if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), p_.get_mpz_t()) == 0) {
      throw std::domain_error("inverse of zero in F_p");
    }
    return r;
  }

  Fp2 one() const { return {1, 0}; }

  // out may alias a or b.
  void mul(Fp2& out, const Fp2& a, const Fp2& b) const {
    mpz_class t1 = a.re * b.re;
    mpz_class t2 = a.im * b.im;
    mpz_class t3 = (a.re + a.im) * (b.re + b.im);
    out.re = t1 - t2;
    out.im = t3 - t1 - t2;
    reduce(out.re);
    reduce(out.im);
  }

  void sqr(Fp2& out, const Fp2& a) const {
    mpz_class t1 = (a.re + a.im) * (a.re - a.im);
    mpz_class t2 = a.re * a.im;
    out.re = t1;
    out.im = t2 << 1;
    reduce(out.re);
    reduce(out.im);
  }

  Fp2 mul(const Fp2& a, const Fp2& b) const {
    Fp2 r;
    mul(r, a, b);
    return r;
  }

  Fp2 conj(const Fp2& a) const {
    Fp2 r{a.re, p_ - a.im};
    reduce(r.im);
    return r;
  }

  Fp2 inv(const Fp2& a) const {
    mpz_class norm = a.re * a.re + a.im * a.im;
    reduce(norm);
    const mpz_class ninv = inv(norm);
    Fp2 r = conj(a);
    r.re *= ninv;
    r.im *= ninv;
    reduce(r.re);
    reduce(r.im);
    return r;
  }

  // e >= 0.
  Fp2 pow(const Fp2& a, const mpz_class& e) const {
    Fp2 r = one();
    const long bits = static_cast<long>(mpz_sizeinbase(e.get_mpz_t(), 2));
    if (e == 0) return r;
    for (long i = bits - 1; i >= 0; --i) {
      sqr(r, r);
      if (mpz_tstbit(e.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) mul(r, r, a);
    }
    return r;
  }

  void write(Bytes& out, const Fp2& a) const {
    write_fixed(out, a.re, width());
    write_fixed(out, a.im, width());
  }

  Fp2 read(std::span<const std::uint8_t> in) const {
    if (in.size() != 2 * width()) throw MalformedInput("bad F_p^2 element width", 0);
    Fp2 a{read_fixed(in.first(width())), read_fixed(in.subspan(width()))};
    if (a.re >= p_ || a.im >= p_) throw MalformedInput("F_p^2 element out of range", 0);
    return a;
  }

 private:
  mpz_class p_;
};

struct Point {
  mpz_class x = 0;
  mpz_class y = 0;
  bool inf = true;

  static Point at(mpz_class x, mpz_class y) { return {std::move(x), std::move(y), false}; }
  friend bool operator==(const Point& a, const Point& b) {
    if (a.inf || b.inf) return a.inf == b.inf;
    return a.x == b.x && a.y == b.y;
  }
};

// y^2 = x^3 + x over F_p.
class Curve {
 public:
  explicit Curve(const mpz_class& p) : f_(p) {
    if (mpz_fdiv_ui(p.get_mpz_t(), 4) != 3) throw std::invalid_argument("p must be 3 mod 4");
  }

  const Field& field() const noexcept { return f_; }

  bool on_curve(const Point& P) const {
    if (P.inf) return true;
    mpz_class lhs = P.y * P.y;
    mpz_class rhs = P.x * P.x * P.x + P.x;
    f_.reduce(lhs);
    f_.reduce(rhs);
    return lhs == rhs;
  }

  Point neg(const Point& P) const {
    if (P.inf || P.y == 0) return P;
    return Point::at(P.x, f_.p() - P.y);
  }

  Point add(const Point& P, const Point& Q) const {
    Jac acc = to_jac(P);
    add_mixed(acc, Q);
    return to_affine(acc);
  }

  Point dbl(const Point& P) const {
    Jac acc = to_jac(P);
    dbl(acc);
    return to_affine(acc);
  }

  // k >= 0.
  Point mul(const Point& P, const mpz_class& k) const {
    Jac acc;
    if (P.inf || k == 0) return {};
    const long bits = static_cast<long>(mpz_sizeinbase(k.get_mpz_t(), 2));
    for (long i = bits - 1; i >= 0; --i) {
      dbl(acc);
      if (mpz_tstbit(k.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) add_mixed(acc, P);
    }
    return to_affine(acc);
  }

  Point random_point(Rng& rng) const {
    const mpz_class& p = f_.p();
    const mpz_class exp = (p + 1) / 4;
    while (true) {
      const mpz_class x = random_below(rng, p);
      mpz_class rhs = x * x * x + x;
      f_.reduce(rhs);
      if (rhs == 0 || mpz_legendre(rhs.get_mpz_t(), p.get_mpz_t()) != 1) continue;
      mpz_class y;
      mpz_powm(y.get_mpz_t(), rhs.get_mpz_t(), exp.get_mpz_t(), p.get_mpz_t());
      if (rng() & 1) y = p - y;
      return Point::at(x, y);
    }
  }

  // Reduced Tate pairing e(P, phi(Q)) for P whose order divides `order`,
  // raised to (p^2 - 1) / order. `cofactor` is (p + 1) / order. T runs in
  // Jacobian coordinates; vertical lines and the F_p scale factors of the
  // lines are dropped because the final exponent kills F_p elements.
  Fp2 pairing(const Point& P, const Point& Q, const mpz_class& order, const mpz_class& cofactor) const {
    if (P.inf || Q.inf) return f_.one();
    auto red = [&](mpz_class& v) { f_.reduce(v); };
    Fp2 f = f_.one();
    Fp2 line;
    mpz_class X = P.x, Y = P.y, Z = 1;
    mpz_class Z2, M, S, Y2, X3, U2, S2, H, R, HZ, H2, H3, t;
    bool t_inf = false;

    auto dbl = [&] {
      if (Y == 0) {
        t_inf = true;
        return;
      }
      Z2 = Z * Z;
      red(Z2);
      M = 3 * X * X + Z2 * Z2;
      red(M);
      Y2 = Y * Y;
      red(Y2);
      // line * 2YZ^3
      t = Q.x * Z2 + X;
      red(t);
      line.re = M * t - 2 * Y2;
      red(line.re);
      t = 2 * Y * Z;
      red(t);
      line.im = t * Z2;
      red(line.im);
      line.im *= Q.y;
      red(line.im);
      f_.mul(f, f, line);
      S = 4 * X * Y2;
      red(S);
      X3 = M * M - 2 * S;
      red(X3);
      Y = M * (S - X3) - 8 * Y2 * Y2;
      red(Y);
      Z = t;
      X = X3;
    };
    auto add = [&] {
      Z2 = Z * Z;
      red(Z2);
      U2 = P.x * Z2;
      red(U2);
      S2 = P.y * Z2;
      red(S2);
      S2 *= Z;
      red(S2);
      H = U2 - X;
      red(H);
      R = S2 - Y;
      red(R);
      if (H == 0) {
        if (R == 0) {
          dbl();
        } else {
          t_inf = true;
        }
        return;
      }
      HZ = H * Z;
      red(HZ);
      // line through P * HZ
      t = Q.x + P.x;
      line.re = R * t - P.y * HZ;
      red(line.re);
      line.im = Q.y * HZ;
      red(line.im);
      f_.mul(f, f, line);
      H2 = H * H;
      red(H2);
      H3 = H2 * H;
      red(H3);
      t = X * H2;
      red(t);
      X3 = R * R - H3 - 2 * t;
      red(X3);
      Y = R * (t - X3) - Y * H3;
      red(Y);
      X = X3;
      Z = HZ;
    };

    const long bits = static_cast<long>(mpz_sizeinbase(order.get_mpz_t(), 2));
    for (long i = bits - 2; i >= 0; --i) {
      f_.sqr(f, f);
      if (!t_inf) dbl();
      if (!mpz_tstbit(order.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) continue;
      if (t_inf) {
        X = P.x;
        Y = P.y;
        Z = 1;
        t_inf = false;
      } else {
        add();
      }
    }
    // f^(p-1) = conj(f) / f, then ^((p+1)/order)
    const Fp2 g = f_.mul(f_.conj(f), f_.inv(f));
    return f_.pow(g, cofactor);
  }

  // Miller loop of a fixed first argument, reduced to the operations that
  // depend on it: a squaring of f, or a line lambda*x + c to evaluate at the
  // second argument.
  struct MillerLines {
    struct Step {
      bool square = false;
      mpz_class lambda;
      mpz_class c;  // lambda * T.x - T.y
    };
    std::vector<Step> steps;
  };

  MillerLines precompute_lines(const Point& P, const mpz_class& order) const {
    MillerLines out;
    if (P.inf) return out;
    mpz_class tx = P.x, ty = P.y;
    mpz_class lambda, tmp, x3;
    bool t_inf = false;
    auto chord = [&](const mpz_class& other_x) {
      f_.reduce(lambda);
      mpz_class c = lambda * tx - ty;
      f_.reduce(c);
      out.steps.push_back({false, lambda, std::move(c)});
      x3 = lambda * lambda - tx - other_x;
      f_.reduce(x3);
      ty = lambda * (tx - x3) - ty;
      f_.reduce(ty);
      tx = x3;
    };
    auto tangent = [&] {
      if (ty == 0) {
        t_inf = true;
        return;
      }
      lambda = (3 * tx * tx + 1) * f_.inv(2 * ty);
      const mpz_class same_x = tx;
      chord(same_x);
    };
    const long bits = static_cast<long>(mpz_sizeinbase(order.get_mpz_t(), 2));
    for (long i = bits - 2; i >= 0; --i) {
      out.steps.push_back({true, 0, 0});
      if (!t_inf) tangent();
      if (!mpz_tstbit(order.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) continue;
      if (t_inf) {
        tx = P.x;
        ty = P.y;
        t_inf = false;
      } else if (tx == P.x) {
        if (ty == P.y) {
          tangent();
        } else {
          t_inf = true;
        }
      } else {
        tmp = P.x - tx;
        f_.reduce(tmp);
        lambda = (P.y - ty) * f_.inv(tmp);
        chord(P.x);
      }
    }
    return out;
  }

  // Same value as pairing(P, Q, ...) for the P the lines were built from.
  Fp2 pairing(const MillerLines& lines, const Point& Q, const mpz_class& cofactor) const {
    if (lines.steps.empty() || Q.inf) return f_.one();
    Fp2 f = f_.one();
    Fp2 line;
    line.im = Q.y;
    for (const auto& st : lines.steps) {
      if (st.square) {
        f_.sqr(f, f);
        continue;
      }
      line.re = st.lambda * Q.x + st.c;
      f_.reduce(line.re);
      f_.mul(f, f, line);
    }
    const Fp2 g = f_.mul(f_.conj(f), f_.inv(f));
    return f_.pow(g, cofactor);
  }

  void write(Bytes& out, const Point& P) const {
    out.push_back(P.inf ? 0 : 1);
    write_fixed(out, P.inf ? mpz_class(0) : P.x, f_.width());
    write_fixed(out, P.inf ? mpz_class(0) : P.y, f_.width());
  }

  std::size_t point_bytes() const { return 1 + 2 * f_.width(); }

  Point read(std::span<const std::uint8_t> in) const {
    if (in.size() != point_bytes()) throw MalformedInput("bad point width", 0);
    if (in[0] == 0) return {};
    if (in[0] != 1) throw MalformedInput("bad point tag", 0);
    Point P = Point::at(read_fixed(in.subspan(1, f_.width())), read_fixed(in.subspan(1 + f_.width())));
    if (P.x >= f_.p() || P.y >= f_.p() || !on_curve(P)) throw MalformedInput("point not on curve", 0);
    return P;
  }

  // Table for k*P with fixed P: entry [i][d] = d * 16^i * P.
  class FixedBase {
   public:
    FixedBase() = default;
    FixedBase(const Curve& c, const Point& P, std::size_t bits) {
      const std::size_t windows = (bits + 3) / 4;
      table_.resize(windows);
      Point base = P;
      for (std::size_t w = 0; w < windows; ++w) {
        auto& row = table_[w];
        row.resize(16);
        row[0] = Point{};
        row[1] = base;
        Jac acc = to_jac(base);
        for (int d = 2; d < 16; ++d) {
          c.add_mixed(acc, base);
          row[static_cast<std::size_t>(d)] = c.to_affine(acc);
        }
        c.add_mixed(acc, base);
        base = c.to_affine(acc);  // 16 * base
      }
    }

    // 0 <= k < 16^windows.
    Point mul(const Curve& c, const mpz_class& k) const {
      Jac acc;
      const std::size_t bits = mpz_sizeinbase(k.get_mpz_t(), 2);
      if (k == 0) return {};
      if (bits > 4 * table_.size()) throw std::out_of_range("scalar exceeds fixed-base table");
      for (std::size_t w = 0; w * 4 < bits; ++w) {
        unsigned d = 0;
        for (unsigned b = 0; b < 4; ++b) {
          if (mpz_tstbit(k.get_mpz_t(), w * 4 + b)) d |= 1u << b;
        }
        if (d) c.add_mixed(acc, table_[w][d]);
      }
      return c.to_affine(acc);
    }

   private:
    std::vector<std::vector<Point>> table_;
  };

 private:
  // Jacobian coordinates: (X/Z^2, Y/Z^3); Z = 0 is the point at infinity.
  struct Jac {
    mpz_class X = 1, Y = 1, Z = 0;
  };

  static Jac to_jac(const Point& P) {
    if (P.inf) return {};
    return {P.x, P.y, 1};
  }

  Point to_affine(const Jac& J) const {
    if (J.Z == 0) return {};
    const mpz_class zi = f_.inv(J.Z);
    mpz_class zi2 = zi * zi;
    f_.reduce(zi2);
    mpz_class x = J.X * zi2;
    mpz_class y = J.Y * zi2 * zi;
    f_.reduce(x);
    f_.reduce(y);
    return Point::at(x, y);
  }

  void dbl(Jac& J) const {
    if (J.Z == 0 || J.Y == 0) {
      J = {};
      return;
    }
    mpz_class A = J.X * J.X;
    mpz_class B = J.Y * J.Y;
    f_.reduce(A);
    f_.reduce(B);
    mpz_class C = B * B;
    mpz_class ZZ = J.Z * J.Z;
    f_.reduce(C);
    f_.reduce(ZZ);
    mpz_class S = 4 * J.X * B;
    mpz_class M = 3 * A + ZZ * ZZ;
    f_.reduce(S);
    f_.reduce(M);
    mpz_class X3 = M * M - 2 * S;
    f_.reduce(X3);
    mpz_class Y3 = M * (S - X3) - 8 * C;
    f_.reduce(Y3);
    mpz_class Z3 = 2 * J.Y * J.Z;
    f_.reduce(Z3);
    J.X = std::move(X3);
    J.Y = std::move(Y3);
    J.Z = std::move(Z3);
  }

  void add_mixed(Jac& J, const Point& Q) const {
    if (Q.inf) return;
    if (J.Z == 0) {
      J = to_jac(Q);
      return;
    }
    mpz_class ZZ = J.Z * J.Z;
    f_.reduce(ZZ);
    mpz_class U2 = Q.x * ZZ;
    mpz_class S2 = Q.y * J.Z * ZZ;
    f_.reduce(U2);
    f_.reduce(S2);
    mpz_class H = U2 - J.X;
    mpz_class r = S2 - J.Y;
    f_.reduce(H);
    f_.reduce(r);
    if (H == 0) {
      if (r == 0) {
        dbl(J);
      } else {
        J = {};
      }
      return;
    }
    mpz_class HH = H * H;
    f_.reduce(HH);
    mpz_class HHH = H * HH;
    mpz_class V = J.X * HH;
    f_.reduce(HHH);
    f_.reduce(V);
    mpz_class X3 = r * r - HHH - 2 * V;
    f_.reduce(X3);
    mpz_class Y3 = r * (V - X3) - J.Y * HHH;
    f_.reduce(Y3);
    mpz_class Z3 = J.Z * H;
    f_.reduce(Z3);
    J.X = std::move(X3);
    J.Y = std::move(Y3);
    J.Z = std::move(Z3);
  }

  Field f_;
};

// Table for base^k in F_p^2 with a fixed base: entry [i][d] = base^(d*16^i).
class FixedBasePow {
 public:
  FixedBasePow() = default;
  FixedBasePow(const Field& f, const Fp2& base, std::size_t bits) {
    const std::size_t windows = (bits + 3) / 4;
    table_.resize(windows);
    Fp2 b = base;
    for (std::size_t w = 0; w < windows; ++w) {
      auto& row = table_[w];
      row.resize(16);
      row[0] = f.one();
      for (std::size_t d = 1; d < 16; ++d) row[d] = f.mul(row[d - 1], b);
      b = f.mul(row[15], b);
    }
  }

  Fp2 pow(const Field& f, const mpz_class& k) const {
    Fp2 acc = f.one();
    const std::size_t bits = mpz_sizeinbase(k.get_mpz_t(), 2);
    if (k == 0) return acc;
    if (bits > 4 * table_.size()) throw std::out_of_range("exponent exceeds fixed-base table");
    for (std::size_t w = 0; w * 4 < bits; ++w) {
      unsigned d = 0;
      for (unsigned b = 0; b < 4; ++b) {
        if (mpz_tstbit(k.get_mpz_t(), w * 4 + b)) d |= 1u << b;
      }
      if (d) f.mul(acc, acc, table_[w][d]);
    }
    return acc;
  }

 private:
  std::vector<std::vector<Fp2>> table_;
};

}  // namespace privedm::bgn
