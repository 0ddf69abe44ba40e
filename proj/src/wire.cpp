// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/wire.hpp"

#include <bit>
#include <cstring>

namespace p4gcn {

void ByteWriter::u32(std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::mpz(const mpz_class& v) {
  if (v < 0) throw std::invalid_argument("wire: mpz must be nonnegative");
  const std::size_t nbytes = v == 0 ? 0 : (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  u32(static_cast<std::uint32_t>(nbytes));
  if (nbytes == 0) return;
  std::vector<std::uint8_t> tmp(nbytes);
  std::size_t written = 0;
  mpz_export(tmp.data(), &written, 1, 1, 0, 0, v.get_mpz_t());
  // mpz_export omits leading zero bytes; right-align.
  if (written < nbytes) {
    std::vector<std::uint8_t> shifted(nbytes, 0);
    std::memcpy(shifted.data() + (nbytes - written), tmp.data(), written);
    tmp = std::move(shifted);
  }
  bytes(tmp);
}

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > data_.size()) throw MalformedFrame("frame truncated");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

mpz_class ByteReader::mpz() {
  const std::uint32_t nbytes = u32();
  need(nbytes);
  mpz_class v;
  if (nbytes > 0) {
    mpz_import(v.get_mpz_t(), nbytes, 1, 1, 0, 0, data_.data() + pos_);
    pos_ += nbytes;
  }
  return v;
}

void ByteReader::expect_done() const {
  if (!done()) throw MalformedFrame("trailing bytes in frame");
}

void write_dense_matrix(ByteWriter& w, const DenseMatrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
}

namespace {

// Bounds dimensioned allocations driven by wire input.
constexpr std::uint64_t kMaxWireCells = 1ULL << 26;

void check_cells(std::uint64_t rows, std::uint64_t cols) {
  if (rows * cols > kMaxWireCells) {
    throw MalformedFrame("matrix dimensions exceed the wire limit");
  }
}

}  // namespace

DenseMatrix read_dense_matrix(ByteReader& r) {
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  check_cells(rows, cols);
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  return m;
}

void write_cipher_matrix(ByteWriter& w, const CipherMatrix& cm) {
  w.u32(static_cast<std::uint32_t>(cm.rows));
  w.u32(static_cast<std::uint32_t>(cm.cols));
  w.i32(cm.scale_exp);
  w.u64(cm.key_id);
  for (const auto& c : cm.cells) w.mpz(c.value);
}

CipherMatrix read_cipher_matrix(ByteReader& r, double public_bound) {
  CipherMatrix cm;
  cm.rows = r.u32();
  cm.cols = r.u32();
  check_cells(cm.rows, cm.cols);
  cm.scale_exp = r.i32();
  cm.key_id = r.u64();
  cm.plain_bound = public_bound;
  cm.cells.reserve(cm.rows * cm.cols);
  for (std::size_t i = 0; i < cm.rows * cm.cols; ++i) {
    cm.cells.push_back(Ciphertext{r.mpz()});
  }
  return cm;
}

void write_public_key(ByteWriter& w, const PublicKey& pk) {
  w.u32(static_cast<std::uint32_t>(pk.key_bits));
  w.u64(pk.key_id);
  w.mpz(pk.n);
  w.mpz(pk.g);
}

PublicKey read_public_key(ByteReader& r) {
  PublicKey pk;
  pk.key_bits = static_cast<int>(r.u32());
  pk.key_id = r.u64();
  pk.n = r.mpz();
  pk.g = r.mpz();
  pk.n_squared = pk.n * pk.n;
  return pk;
}

void write_index_list(ByteWriter& w, std::span<const std::size_t> idx) {
  w.u32(static_cast<std::uint32_t>(idx.size()));
  for (std::size_t v : idx) w.u32(static_cast<std::uint32_t>(v));
}

std::vector<std::size_t> read_index_list(ByteReader& r) {
  const std::uint32_t n = r.u32();
  check_cells(n, 1);
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(r.u32());
  return out;
}

}  // namespace p4gcn
