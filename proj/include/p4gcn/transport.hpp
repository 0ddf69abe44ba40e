// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace p4gcn {

enum class MsgTag : std::uint8_t {
  Hello = 1,
  PubKey = 2,
  EncState = 3,
  FwdReq = 4,
  FwdResp = 5,
  BwdReq = 6,
  BwdResp = 7,
  Update = 8,
  Bye = 9,
};

struct Frame {
  MsgTag tag;
  std::vector<std::uint8_t> payload;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TransportCounters {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
};

/// Ordered, framed message channel. On the wire every frame is
///   u32 big-endian length (= 1 + payload size), u8 tag, payload.
/// Counters account the exact serialized totals including prefixes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(const Frame& f) = 0;
  virtual Frame recv() = 0;
  const TransportCounters& counters() const { return counters_; }

 protected:
  static std::size_t frame_bytes(const Frame& f) { return 4 + 1 + f.payload.size(); }
  TransportCounters counters_;
};

using FrameHandler = std::function<Frame(const Frame&)>;

/// In-process request/response transport: each send() runs one full
/// serialize-deserialize round trip through the peer's handler, so byte
/// counters match socket mode exactly.
class LoopTransport final : public Transport {
 public:
  explicit LoopTransport(FrameHandler peer) : peer_(std::move(peer)) {}
  void send(const Frame& f) override;
  Frame recv() override;

 private:
  FrameHandler peer_;
  bool has_pending_ = false;
  Frame pending_{MsgTag::Bye, {}};
};

/// Blocking TCP transport using the same framing.
class SocketTransport final : public Transport {
 public:
  /// Takes ownership of a connected socket fd.
  explicit SocketTransport(int fd) : fd_(fd) {}
  ~SocketTransport() override;
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  static std::unique_ptr<SocketTransport> connect(const std::string& host, int port);

  void send(const Frame& f) override;
  Frame recv() override;

 private:
  int fd_ = -1;
};

/// Listening helper: binds, accepts one peer, returns its transport. On
/// port 0 the kernel picks; *bound_port receives the actual port before
/// accept blocks (via the ready callback).
std::unique_ptr<SocketTransport> accept_one(int port, int* bound_port = nullptr,
                                            std::function<void()> ready = {});

/// Serves request/response frames until after a Bye has been answered.
void serve_frames(Transport& t, const FrameHandler& handler);

std::vector<std::uint8_t> encode_frame(const Frame& f);

}  // namespace p4gcn
