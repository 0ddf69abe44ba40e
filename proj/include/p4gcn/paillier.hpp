// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>

#include "p4gcn/rng.hpp"

namespace p4gcn {

struct CryptoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct KeyMismatch : CryptoError {
  using CryptoError::CryptoError;
};
struct CodecOverflow : CryptoError {
  using CryptoError::CryptoError;
};

/// Paillier public key. Everything a party needs to encrypt and to compute
/// under encryption; holding one never grants decryption.
struct PublicKey {
  mpz_class n;
  mpz_class g;
  mpz_class n_squared;
  int key_bits = 0;
  std::uint64_t key_id = 0;

  mpz_class half_n() const { return n / 2; }
};

/// Full key pair: public part plus (lambda, mu). Only decrypt touches the
/// private members.
struct KeyPair {
  PublicKey pub;
  mpz_class lambda;
  mpz_class mu;
};

struct Ciphertext {
  mpz_class value;  // element of Z*_{n^2}
};

/// p and q of equal bit length, gcd(pq, (p-1)(q-1)) = 1, g = n + 1.
KeyPair keygen(int key_bits, RngState& rng);

/// c = g^m r^n mod n^2 for 0 <= m < n, fresh random r coprime to n.
Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RngState& rng);

/// m = L(c^lambda mod n^2) mu mod n with L(x) = (x - 1) / n.
mpz_class decrypt(const KeyPair& kp, const Ciphertext& c);

/// Dec(add(c1, c2)) = m1 + m2 mod n.
Ciphertext add(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2);

/// Dec(scalar_mul(c, k)) = k m mod n. Values in the upper half of [0, n)
/// act as negatives; they are exponentiated through a modular inverse so the
/// effective exponent stays small.
Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& k);

/// Ciphertext of zero with no randomness; the neutral element of add().
Ciphertext neutral_ciphertext();

/// Uniform value in [0, bound).
mpz_class random_below(RngState& rng, const mpz_class& bound);

}  // namespace p4gcn
