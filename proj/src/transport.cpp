// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <string>

namespace p4gcn {

namespace {

Frame decode_frame(const std::uint8_t* data, std::size_t len) {
  if (len < 1) throw TransportError("malformed frame: empty body");
  Frame f;
  f.tag = static_cast<MsgTag>(data[0]);
  if (data[0] < 1 || data[0] > 9) throw TransportError("malformed frame: unknown tag");
  f.payload.assign(data + 1, data + len);
  return f;
}

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::write(fd, data, len);
    if (n <= 0) throw TransportError("connection closed while writing");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

void read_all(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::read(fd, data, len);
    if (n <= 0) throw TransportError("connection closed while reading");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  const std::uint32_t body = static_cast<std::uint32_t>(1 + f.payload.size());
  std::vector<std::uint8_t> out;
  out.reserve(4 + body);
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(body >> s));
  out.push_back(static_cast<std::uint8_t>(f.tag));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

void LoopTransport::send(const Frame& f) {
  if (has_pending_) throw TransportError("protocol violation: send before recv");
  const auto wire = encode_frame(f);
  counters_.bytes_sent += wire.size();
  ++counters_.messages_sent;
  const Frame request = decode_frame(wire.data() + 4, wire.size() - 4);
  const Frame response = peer_(request);
  const auto resp_wire = encode_frame(response);
  pending_ = decode_frame(resp_wire.data() + 4, resp_wire.size() - 4);
  counters_.bytes_received += resp_wire.size();
  ++counters_.messages_received;
  has_pending_ = true;
}

Frame LoopTransport::recv() {
  if (!has_pending_) throw TransportError("protocol violation: recv before send");
  has_pending_ = false;
  return std::move(pending_);
}

SocketTransport::~SocketTransport() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<SocketTransport> SocketTransport::connect(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw TransportError("bad host address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("connect() failed");
  }
  int flag = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
  return std::make_unique<SocketTransport>(fd);
}

void SocketTransport::send(const Frame& f) {
  const auto wire = encode_frame(f);
  write_all(fd_, wire.data(), wire.size());
  counters_.bytes_sent += wire.size();
  ++counters_.messages_sent;
}

Frame SocketTransport::recv() {
  std::uint8_t head[4];
  read_all(fd_, head, 4);
  const std::uint32_t body =
      (std::uint32_t(head[0]) << 24) | (std::uint32_t(head[1]) << 16) |
      (std::uint32_t(head[2]) << 8) | std::uint32_t(head[3]);
  if (body == 0) throw TransportError("malformed frame: zero body length");
  std::vector<std::uint8_t> buf(body);
  read_all(fd_, buf.data(), body);
  counters_.bytes_received += 4 + body;
  ++counters_.messages_received;
  return decode_frame(buf.data(), buf.size());
}

std::unique_ptr<SocketTransport> accept_one(int port, int* bound_port,
                                            std::function<void()> ready) {
  const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) throw TransportError("socket() failed");
  int opt = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &opt, sizeof(opt));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(lfd);
    throw TransportError("bind() failed");
  }
  if (::listen(lfd, 1) != 0) {
    ::close(lfd);
    throw TransportError("listen() failed");
  }
  if (bound_port != nullptr) {
    sockaddr_in actual{};
    socklen_t len = sizeof(actual);
    ::getsockname(lfd, reinterpret_cast<sockaddr*>(&actual), &len);
    *bound_port = ntohs(actual.sin_port);
  }
  if (ready) ready();
  const int cfd = ::accept(lfd, nullptr, nullptr);
  ::close(lfd);
  if (cfd < 0) throw TransportError("accept() failed");
  int flag = 1;
  ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
  return std::make_unique<SocketTransport>(cfd);
}

void serve_frames(Transport& t, const FrameHandler& handler) {
  for (;;) {
    const Frame req = t.recv();
    const Frame resp = handler(req);
    t.send(resp);
    if (req.tag == MsgTag::Bye) return;
  }
}

}  // namespace p4gcn
