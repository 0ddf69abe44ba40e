// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "p4gcn/cipher_matrix.hpp"
#include "p4gcn/matrix.hpp"
#include "p4gcn/paillier.hpp"

namespace p4gcn {

struct MalformedFrame : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Big-endian byte writer for wire payloads.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  /// Length-prefixed big-endian magnitude (32-bit length).
  void mpz(const mpz_class& v);

  std::vector<std::uint8_t> take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  mpz_class mpz();

  bool done() const { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void write_dense_matrix(ByteWriter& w, const DenseMatrix& m);
DenseMatrix read_dense_matrix(ByteReader& r);

void write_cipher_matrix(ByteWriter& w, const CipherMatrix& cm);
/// plain_bound is not on the wire (it would leak magnitude data); the reader
/// installs the conservative public bound the session agreed on.
CipherMatrix read_cipher_matrix(ByteReader& r, double public_bound);

void write_public_key(ByteWriter& w, const PublicKey& pk);
PublicKey read_public_key(ByteReader& r);

void write_index_list(ByteWriter& w, std::span<const std::size_t> idx);
std::vector<std::size_t> read_index_list(ByteReader& r);

}  // namespace p4gcn
