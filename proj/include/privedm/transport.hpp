#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "privedm/bytes.hpp"

namespace privedm {

enum class Party : std::uint8_t { A = 0, B = 1 };

inline char party_name(Party p) { return p == Party::A ? 'A' : 'B'; }
inline Party peer_of(Party p) { return p == Party::A ? Party::B : Party::A; }

namespace tag {
inline constexpr std::uint8_t kEncBitVector = 0x01;
inline constexpr std::uint8_t kBlindedRanks = 0x02;
inline constexpr std::uint8_t kDecryptedRanks = 0x03;
inline constexpr std::uint8_t kUnionCardinality = 0x04;
inline constexpr std::uint8_t kEncVector = 0x05;
inline constexpr std::uint8_t kBlindedDiffs = 0x06;
// Key exchange. Counted separately and excluded from rounds.
inline constexpr std::uint8_t kPublicKey = 0x10;

inline bool is_setup(std::uint8_t t) { return t == kPublicKey; }
}  // namespace tag

struct Frame {
  std::uint8_t tag = 0;
  Bytes body;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 5;

class MalformedFrame : public MalformedInput {
 public:
  MalformedFrame(const std::string& what, std::size_t offset, std::size_t expected)
      : MalformedInput(what, offset), expected_(expected) {}
  std::size_t expected_length() const noexcept { return expected_; }

 private:
  std::size_t expected_;
};

class ChannelClosed : public std::runtime_error {
 public:
  ChannelClosed() : std::runtime_error("channel closed by peer") {}
};

inline Bytes encode_frame(const Frame& f) {
  Bytes out;
  out.reserve(kFrameHeaderBytes + f.body.size());
  ByteWriter w(out);
  w.u8(f.tag);
  w.u32(static_cast<std::uint32_t>(f.body.size()));
  w.raw(f.body);
  return out;
}

// Decodes exactly one frame occupying all of `bytes`.
inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) {
    throw MalformedFrame("truncated frame header: expected 5 bytes, got " +
                             std::to_string(bytes.size()),
                         bytes.size(), kFrameHeaderBytes);
  }
  ByteReader r(bytes);
  Frame f;
  f.tag = r.u8();
  const std::uint32_t len = r.u32();
  if (r.remaining() != len) {
    throw MalformedFrame((r.remaining() < len ? "truncated frame body: expected " : "oversized frame body: expected ") +
                             std::to_string(len) + " bytes, got " + std::to_string(r.remaining()),
                         kFrameHeaderBytes + std::min<std::size_t>(len, r.remaining()), len);
  }
  const auto body = r.raw(len);
  f.body.assign(body.begin(), body.end());
  return f;
}

// One side of a reliable, ordered, bidirectional frame channel.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void send(const Frame& f) = 0;
  virtual Frame recv() = 0;
  virtual void close() = 0;
};

using EndpointPair = std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>>;

namespace detail {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Bytes> queue;
  bool closed = false;
};

}  // namespace detail

// In-process channel; frames cross as encoded bytes so framing is exercised
// exactly as on a socket.
class InProcEndpoint final : public Endpoint {
 public:
  InProcEndpoint(std::shared_ptr<detail::Pipe> out, std::shared_ptr<detail::Pipe> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  ~InProcEndpoint() override { close(); }

  void send(const Frame& f) override {
    Bytes wire = encode_frame(f);
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw ChannelClosed();
    out_->queue.push_back(std::move(wire));
    out_->cv.notify_one();
  }

  Frame recv() override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->queue.empty() || in_->closed; });
    if (in_->queue.empty()) throw ChannelClosed();
    Bytes wire = std::move(in_->queue.front());
    in_->queue.pop_front();
    lock.unlock();
    return decode_frame(wire);
  }

  void close() override {
    std::lock_guard lock(out_->mu);
    out_->closed = true;
    out_->cv.notify_all();
  }

 private:
  std::shared_ptr<detail::Pipe> out_;
  std::shared_ptr<detail::Pipe> in_;
};

inline EndpointPair make_inproc_pair() {
  auto ab = std::make_shared<detail::Pipe>();
  auto ba = std::make_shared<detail::Pipe>();
  return {std::make_unique<InProcEndpoint>(ab, ba), std::make_unique<InProcEndpoint>(ba, ab)};
}

class SocketError : public std::runtime_error {
 public:
  explicit SocketError(const std::string& what)
      : std::runtime_error(what + ": " + std::strerror(errno)) {}
  SocketError(const std::string& what, const char* reason) : std::runtime_error(what + ": " + reason) {}
};

// Frames over a connected stream socket. Sends are queued to a writer thread
// so two parties that both send before receiving cannot deadlock on full
// kernel buffers.
class SocketEndpoint final : public Endpoint {
 public:
  explicit SocketEndpoint(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    writer_ = std::thread([this] { write_loop(); });
  }
  SocketEndpoint(const SocketEndpoint&) = delete;
  SocketEndpoint& operator=(const SocketEndpoint&) = delete;

  ~SocketEndpoint() override {
    close();
    if (writer_.joinable()) writer_.join();
    ::close(fd_);
  }

  void send(const Frame& f) override {
    Bytes wire = encode_frame(f);
    std::lock_guard lock(mu_);
    if (closing_ || failed_) throw ChannelClosed();
    queue_.push_back(std::move(wire));
    cv_.notify_one();
  }

  Frame recv() override {
    std::uint8_t header[kFrameHeaderBytes];
    const std::size_t got = read_exact(header, sizeof(header));
    if (got == 0) throw ChannelClosed();
    if (got < sizeof(header)) {
      throw MalformedFrame("truncated frame header on stream", got, kFrameHeaderBytes);
    }
    ByteReader r(header);
    Frame f;
    f.tag = r.u8();
    const std::uint32_t len = r.u32();
    f.body.resize(len);
    const std::size_t body = read_exact(f.body.data(), len);
    if (body < len) {
      throw MalformedFrame("truncated frame body on stream: expected " + std::to_string(len) +
                               " bytes, got " + std::to_string(body),
                           kFrameHeaderBytes + body, len);
    }
    return f;
  }

  // Flushes queued frames, then half-closes the write side.
  void close() override {
    std::unique_lock lock(mu_);
    if (closing_) return;
    closing_ = true;
    cv_.notify_all();
  }

 private:
  void write_loop() {
    while (true) {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return !queue_.empty() || closing_; });
      if (queue_.empty()) break;
      Bytes wire = std::move(queue_.front());
      queue_.pop_front();
      lock.unlock();
      std::size_t off = 0;
      while (off < wire.size()) {
        const ssize_t n = ::send(fd_, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
        if (n <= 0) {
          if (n < 0 && errno == EINTR) continue;
          std::lock_guard g(mu_);
          failed_ = true;
          return;
        }
        off += static_cast<std::size_t>(n);
      }
    }
    ::shutdown(fd_, SHUT_WR);
  }

  std::size_t read_exact(std::uint8_t* buf, std::size_t len) {
    std::size_t off = 0;
    while (off < len) {
      const ssize_t n = ::recv(fd_, buf + off, len - off, 0);
      if (n == 0) break;
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SocketError("recv failed");
      }
      off += static_cast<std::size_t>(n);
    }
    return off;
  }

  int fd_;
  std::thread writer_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> queue_;
  bool closing_ = false;
  bool failed_ = false;
};

// Listens on host:port (port 0 picks a free port), connects to it and
// returns {accepted side, connecting side}.
inline EndpointPair make_socket_pair(const std::string& host = "127.0.0.1", std::uint16_t port = 0) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0) {
    throw SocketError("cannot resolve " + host, ::gai_strerror(rc));
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);

  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw SocketError("socket failed");
  int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto fail = [&](const char* what) {
    const int saved = errno;
    ::close(listener);
    errno = saved;
    throw SocketError(what);
  };
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) fail("bind failed");
  if (::listen(listener, 1) < 0) fail("listen failed");
  socklen_t len = sizeof(addr);
  if (::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) < 0) fail("getsockname failed");

  const int client = ::socket(AF_INET, SOCK_STREAM, 0);
  if (client < 0) fail("socket failed");
  if (::connect(client, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(client);
    fail("connect failed");
  }
  const int server = ::accept(listener, nullptr, nullptr);
  if (server < 0) {
    ::close(client);
    fail("accept failed");
  }
  ::close(listener);
  return {std::make_unique<SocketEndpoint>(server), std::make_unique<SocketEndpoint>(client)};
}

// Per-party record of frames sent and received, in local order.
struct PartyLog {
  struct Event {
    bool sent = false;
    std::uint8_t tag = 0;
    std::uint64_t bytes = 0;  // header + body
  };
  std::vector<Event> events;
  std::vector<Bytes> sent_frames;  // filled only when frames are kept
};

struct Transcript {
  PartyLog a;
  PartyLog b;

  const PartyLog& of(Party p) const { return p == Party::A ? a : b; }
  PartyLog& of(Party p) { return p == Party::A ? a : b; }
};

// Logs traffic through another endpoint. Single-threaded per party.
class RecordingEndpoint final : public Endpoint {
 public:
  RecordingEndpoint(Endpoint& inner, PartyLog& log, bool keep_frames = false)
      : inner_(inner), log_(&log), keep_frames_(keep_frames) {}

  void send(const Frame& f) override {
    inner_.send(f);
    log_->events.push_back({true, f.tag, kFrameHeaderBytes + f.body.size()});
    if (keep_frames_) log_->sent_frames.push_back(encode_frame(f));
  }

  Frame recv() override {
    Frame f = inner_.recv();
    log_->events.push_back({false, f.tag, kFrameHeaderBytes + f.body.size()});
    return f;
  }

  void close() override { inner_.close(); }

  // Later traffic goes to another log, e.g. at a phase boundary.
  void set_log(PartyLog& log) { log_ = &log; }

 private:
  Endpoint& inner_;
  PartyLog* log_;
  bool keep_frames_;
};

// A round is a maximal batch of messages sent before any party has to wait
// on a message it has not received. A message's round is one more than the
// latest round among the messages its sender had received before sending it.
// Setup (key exchange) frames are ignored.
inline std::uint64_t round_accounting(const Transcript& t) {
  struct Sent {
    std::size_t received_before;
  };
  std::vector<Sent> sent[2];
  for (int p = 0; p < 2; ++p) {
    const PartyLog& log = p == 0 ? t.a : t.b;
    std::size_t received = 0;
    for (const auto& e : log.events) {
      if (tag::is_setup(e.tag)) continue;
      if (e.sent) {
        sent[p].push_back({received});
      } else {
        ++received;
      }
    }
  }
  std::vector<std::uint64_t> memo[2] = {std::vector<std::uint64_t>(sent[0].size(), 0),
                                        std::vector<std::uint64_t>(sent[1].size(), 0)};
  std::function<std::uint64_t(int, std::size_t)> round_of = [&](int p, std::size_t k) -> std::uint64_t {
    if (memo[p][k] != 0) return memo[p][k];
    const int q = 1 - p;
    const std::size_t deps = std::min(sent[p][k].received_before, sent[q].size());
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < deps; ++i) r = std::max(r, round_of(q, i));
    return memo[p][k] = r + 1;
  };
  std::uint64_t rounds = 0;
  for (int p = 0; p < 2; ++p) {
    for (std::size_t k = 0; k < sent[p].size(); ++k) rounds = std::max(rounds, round_of(p, k));
  }
  return rounds;
}

struct TagStat {
  Party from = Party::A;
  std::uint8_t tag = 0;
  std::uint64_t frames = 0;
  std::uint64_t bytes = 0;
};

struct Metrics {
  std::uint64_t rounds = 0;
  std::uint64_t bytes_a_to_b = 0;
  std::uint64_t bytes_b_to_a = 0;
  std::uint64_t setup_bytes = 0;
  std::vector<TagStat> breakdown;  // protocol frames only, ordered by (tag, sender)
  std::vector<std::pair<std::string, double>> wall_seconds;

  std::uint64_t total_bytes() const { return bytes_a_to_b + bytes_b_to_a; }

  std::uint64_t tag_bytes(std::uint8_t t) const {
    std::uint64_t s = 0;
    for (const auto& st : breakdown) {
      if (st.tag == t) s += st.bytes;
    }
    return s;
  }

  std::uint64_t tag_frames(std::uint8_t t) const {
    std::uint64_t s = 0;
    for (const auto& st : breakdown) {
      if (st.tag == t) s += st.frames;
    }
    return s;
  }

  void write(std::ostream& os, const std::string& prefix = "") const {
    os << prefix << "rounds=" << rounds << '\n'
       << prefix << "bytes_a_to_b=" << bytes_a_to_b << '\n'
       << prefix << "bytes_b_to_a=" << bytes_b_to_a << '\n'
       << prefix << "setup_bytes=" << setup_bytes << '\n';
    for (const auto& st : breakdown) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "%02x", st.tag);
      os << prefix << "tag_" << buf << '_' << party_name(st.from) << "=frames:" << st.frames
         << ",bytes:" << st.bytes << '\n';
    }
  }
};

// Byte totals per direction and per tag, plus rounds. Counts are taken from
// the sender's log; bytes include frame headers.
inline Metrics metrics_snapshot(const Transcript& t) {
  Metrics m;
  m.rounds = round_accounting(t);
  std::map<std::pair<std::uint8_t, std::uint8_t>, TagStat> stats;
  for (const Party p : {Party::A, Party::B}) {
    for (const auto& e : t.of(p).events) {
      if (!e.sent) continue;
      if (tag::is_setup(e.tag)) {
        m.setup_bytes += e.bytes;
        continue;
      }
      auto& st = stats[{e.tag, static_cast<std::uint8_t>(p)}];
      st.from = p;
      st.tag = e.tag;
      ++st.frames;
      st.bytes += e.bytes;
      (p == Party::A ? m.bytes_a_to_b : m.bytes_b_to_a) += e.bytes;
    }
  }
  for (const auto& [k, st] : stats) m.breakdown.push_back(st);
  return m;
}

}  // namespace privedm
