// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/paillier.hpp"

#include <vector>

namespace p4gcn {

namespace {

mpz_class random_bits(RngState& rng, int bits) {
  const int nbytes = (bits + 7) / 8;
  std::vector<unsigned char> buf(nbytes);
  for (int i = 0; i < nbytes; i += 8) {
    const std::uint64_t w = rng.next_u64();
    for (int b = 0; b < 8 && i + b < nbytes; ++b) {
      buf[i + b] = static_cast<unsigned char>(w >> (8 * b));
    }
  }
  mpz_class x;
  mpz_import(x.get_mpz_t(), buf.size(), 1, 1, 0, 0, buf.data());
  mpz_fdiv_r_2exp(x.get_mpz_t(), x.get_mpz_t(), bits);
  return x;
}

// Odd candidate with the top two bits set, advanced to the next prime.
// Setting both top bits keeps p*q at exactly 2*bits.
mpz_class random_prime(RngState& rng, int bits) {
  for (;;) {
    mpz_class x = random_bits(rng, bits);
    mpz_setbit(x.get_mpz_t(), bits - 1);
    mpz_setbit(x.get_mpz_t(), bits - 2);
    mpz_setbit(x.get_mpz_t(), 0);
    mpz_nextprime(x.get_mpz_t(), x.get_mpz_t());
    if (mpz_sizeinbase(x.get_mpz_t(), 2) == static_cast<std::size_t>(bits)) {
      return x;
    }
  }
}

mpz_class paillier_l(const mpz_class& x, const mpz_class& n) {
  mpz_class out;
  mpz_divexact(out.get_mpz_t(), mpz_class(x - 1).get_mpz_t(), n.get_mpz_t());
  return out;
}

std::uint64_t derive_key_id(const mpz_class& n) {
  // Low 64 bits of n mixed with its bit length; stable across serialization.
  mpz_class low;
  mpz_fdiv_r_2exp(low.get_mpz_t(), n.get_mpz_t(), 64);
  std::uint64_t id = 0;
  for (int i = 0; i < 64; i += 8) {
    mpz_class byte = (low >> i) & 0xff;
    id |= static_cast<std::uint64_t>(byte.get_ui()) << i;
  }
  return id ^ (static_cast<std::uint64_t>(mpz_sizeinbase(n.get_mpz_t(), 2)) << 1);
}

}  // namespace

KeyPair keygen(int key_bits, RngState& rng) {
  if (key_bits < 64 || key_bits % 2 != 0) {
    throw CryptoError("keygen: key_bits must be even and at least 64");
  }
  const int pbits = key_bits / 2;
  for (;;) {
    const mpz_class p = random_prime(rng, pbits);
    const mpz_class q = random_prime(rng, pbits);
    if (p == q) continue;
    const mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != static_cast<std::size_t>(key_bits)) continue;
    const mpz_class pm1 = p - 1;
    const mpz_class qm1 = q - 1;
    mpz_class gcd;
    mpz_gcd(gcd.get_mpz_t(), n.get_mpz_t(), mpz_class(pm1 * qm1).get_mpz_t());
    if (gcd != 1) continue;

    KeyPair kp;
    kp.pub.n = n;
    kp.pub.g = n + 1;
    kp.pub.n_squared = n * n;
    kp.pub.key_bits = key_bits;
    kp.pub.key_id = derive_key_id(n);
    mpz_lcm(kp.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
    mpz_class glambda;
    mpz_powm(glambda.get_mpz_t(), kp.pub.g.get_mpz_t(), kp.lambda.get_mpz_t(),
             kp.pub.n_squared.get_mpz_t());
    const mpz_class l = paillier_l(glambda, n);
    if (mpz_invert(kp.mu.get_mpz_t(), l.get_mpz_t(), n.get_mpz_t()) == 0) continue;
    return kp;
  }
}

mpz_class random_below(RngState& rng, const mpz_class& bound) {
  const int bits = static_cast<int>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    mpz_class x = random_bits(rng, bits);
    if (x < bound) return x;
  }
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RngState& rng) {
  if (m < 0 || m >= pk.n) throw CryptoError("encrypt: plaintext out of range");
  mpz_class r, gcd;
  do {
    r = random_below(rng, pk.n);
    mpz_gcd(gcd.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
  } while (r == 0 || gcd != 1);

  mpz_class gm;
  if (pk.g == pk.n + 1) {
    // (n+1)^m = 1 + m n mod n^2
    gm = (1 + m * pk.n) % pk.n_squared;
  } else {
    mpz_powm(gm.get_mpz_t(), pk.g.get_mpz_t(), m.get_mpz_t(), pk.n_squared.get_mpz_t());
  }
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n_squared.get_mpz_t());
  return Ciphertext{(gm * rn) % pk.n_squared};
}

mpz_class decrypt(const KeyPair& kp, const Ciphertext& c) {
  if (c.value <= 0 || c.value >= kp.pub.n_squared) {
    throw CryptoError("decrypt: ciphertext out of range");
  }
  mpz_class gcd;
  mpz_gcd(gcd.get_mpz_t(), c.value.get_mpz_t(), kp.pub.n_squared.get_mpz_t());
  if (gcd != 1) throw CryptoError("decrypt: ciphertext not invertible");
  mpz_class clambda;
  mpz_powm(clambda.get_mpz_t(), c.value.get_mpz_t(), kp.lambda.get_mpz_t(),
           kp.pub.n_squared.get_mpz_t());
  return (paillier_l(clambda, kp.pub.n) * kp.mu) % kp.pub.n;
}

Ciphertext add(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2) {
  return Ciphertext{(c1.value * c2.value) % pk.n_squared};
}

Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& k) {
  mpz_class e = k % pk.n;
  if (e < 0) e += pk.n;
  mpz_class base = c.value;
  if (e > pk.half_n()) {
    // Negative under the upper-half convention: invert once, exponentiate by
    // the small magnitude n - e.
    if (mpz_invert(base.get_mpz_t(), base.get_mpz_t(), pk.n_squared.get_mpz_t()) == 0) {
      throw CryptoError("scalar_mul: ciphertext not invertible");
    }
    e = pk.n - e;
  }
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), pk.n_squared.get_mpz_t());
  return Ciphertext{out};
}

Ciphertext neutral_ciphertext() { return Ciphertext{mpz_class(1)}; }

}  // namespace p4gcn
