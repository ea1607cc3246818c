#include "gpgc/wire.hpp"

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "gpgc/errors.hpp"

namespace gpgc {

bool is_known_opcode(std::uint8_t value) {
  switch (value) {
  case 0x01: case 0x02: case 0x03: case 0x04: case 0x05: case 0x06:
  case 0x10: case 0x11: case 0x1F:
    return true;
  default:
    return false;
  }
}

const char *opcode_name(Opcode op) {
  switch (op) {
  case Opcode::load_shard: return "LOAD_SHARD";
  case Opcode::mat_vec: return "MATVEC";
  case Opcode::mat_t_vec: return "MATTVEC";
  case Opcode::gram: return "GRAM";
  case Opcode::diag_quad: return "DIAGQUAD";
  case Opcode::shutdown: return "SHUTDOWN";
  case Opcode::ok: return "OK";
  case Opcode::result: return "RESULT";
  case Opcode::error: return "ERROR";
  }
  return "?";
}

std::vector<std::uint8_t> encode_frame(const WireFrame &frame) {
  ByteWriter w;
  w.reserve(kFrameHeaderBytes + frame.payload.size());
  w.u64(frame.payload.size());
  w.u8(static_cast<std::uint8_t>(frame.opcode));
  w.bytes(frame.payload);
  return w.take();
}

WireFrame decode_frame(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto length = r.u64();
  const auto op = r.u8();
  if (!is_known_opcode(op)) {
    throw ProtocolError("unknown opcode " + std::to_string(op));
  }
  if (length != r.remaining()) {
    throw ProtocolError("frame length field does not match payload size");
  }
  WireFrame f;
  f.opcode = static_cast<Opcode>(op);
  auto body = r.bytes(static_cast<std::size_t>(length));
  f.payload.assign(body.begin(), body.end());
  return f;
}

void encode_matrix(ByteWriter &out, const Eigen::Ref<const Eigen::MatrixXd> &m) {
  out.u32(static_cast<std::uint32_t>(m.rows()));
  out.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out.f64(m(i, j));
    }
  }
}

Eigen::MatrixXd decode_matrix(ByteReader &in) {
  const auto rows = in.u32();
  const auto cols = in.u32();
  const std::uint64_t count = std::uint64_t{rows} * cols;
  if (count * 8 > in.remaining()) {
    throw ProtocolError("matrix payload truncated");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = in.f64();
    }
  }
  return m;
}

std::vector<std::uint8_t> matrix_payload(const Eigen::Ref<const Eigen::MatrixXd> &m) {
  ByteWriter w;
  w.reserve(8 + 8 * static_cast<std::size_t>(m.size()));
  encode_matrix(w, m);
  return w.take();
}

Eigen::MatrixXd matrix_from_payload(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto m = decode_matrix(r);
  if (r.remaining() != 0) {
    throw ProtocolError("trailing bytes after matrix payload");
  }
  return m;
}

WireFrame error_frame(const std::string &message) {
  WireFrame f;
  f.opcode = Opcode::error;
  f.payload.assign(message.begin(), message.end());
  return f;
}

std::string error_message(const WireFrame &frame) {
  return {frame.payload.begin(), frame.payload.end()};
}

std::chrono::milliseconds net_timeout() {
  if (const char *env = std::getenv("GPGC_NET_TIMEOUT_SECS")) {
    char *end = nullptr;
    const double secs = std::strtod(env, &end);
    if (end != env && secs > 0.0) {
      return std::chrono::milliseconds(static_cast<std::int64_t>(secs * 1000.0));
    }
  }
  return std::chrono::seconds(300);
}

// ---------------------------------------------------------------------------
// Socket

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(std::optional<Clock::time_point> deadline) {
  if (!deadline) {
    return -1;
  }
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      *deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

std::optional<Clock::time_point> deadline_from(std::optional<std::chrono::milliseconds> t) {
  if (!t) {
    return std::nullopt;
  }
  return Clock::now() + *t;
}

void wait_ready(int fd, short events, std::optional<Clock::time_point> deadline) {
  while (true) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) {
      return;
    }
    if (rc == 0) {
      throw TimeoutError("network operation timed out");
    }
    if (errno != EINTR) {
      throw WorkerLostError(std::string("poll failed: ") + std::strerror(errno));
    }
  }
}

} // namespace

Socket::~Socket() { close(); }

Socket::Socket(Socket &&other) noexcept
    : fd_(other.fd_), sent_(other.sent_), received_(other.received_) {
  other.fd_ = -1;
}

Socket &Socket::operator=(Socket &&other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    sent_ = other.sent_;
    received_ = other.received_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::send_all(std::span<const std::uint8_t> data,
                      std::optional<std::chrono::milliseconds> timeout) {
  const auto deadline = deadline_from(timeout);
  std::size_t done = 0;
  while (done < data.size()) {
    wait_ready(fd_, POLLOUT, deadline);
    const auto n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) {
        continue;
      }
      throw WorkerLostError(std::string("send failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
    sent_ += static_cast<std::uint64_t>(n);
  }
}

void Socket::recv_all(std::span<std::uint8_t> data,
                      std::optional<std::chrono::milliseconds> timeout) {
  const auto deadline = deadline_from(timeout);
  std::size_t done = 0;
  while (done < data.size()) {
    wait_ready(fd_, POLLIN, deadline);
    const auto n = ::recv(fd_, data.data() + done, data.size() - done, 0);
    if (n == 0) {
      throw WorkerLostError("peer closed the connection");
    }
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) {
        continue;
      }
      throw WorkerLostError(std::string("recv failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
    received_ += static_cast<std::uint64_t>(n);
  }
}

void Socket::send_frame(const WireFrame &frame,
                        std::optional<std::chrono::milliseconds> timeout) {
  const auto bytes = encode_frame(frame);
  send_all(bytes, timeout);
}

WireFrame Socket::recv_frame(std::optional<std::chrono::milliseconds> timeout) {
  const auto deadline = deadline_from(timeout);
  auto left = [&]() -> std::optional<std::chrono::milliseconds> {
    if (!deadline) {
      return std::nullopt;
    }
    return std::chrono::milliseconds(remaining_ms(deadline));
  };
  std::uint8_t header[kFrameHeaderBytes];
  recv_all(header, left());
  ByteReader r(header);
  const auto length = r.u64();
  const auto op = r.u8();
  if (!is_known_opcode(op)) {
    throw ProtocolError("unknown opcode " + std::to_string(op));
  }
  if (length > kMaxFrameBytes) {
    throw ProtocolError("frame length " + std::to_string(length) + " too large");
  }
  WireFrame f;
  f.opcode = static_cast<Opcode>(op);
  f.payload.resize(static_cast<std::size_t>(length));
  recv_all(f.payload, left());
  return f;
}

HostPort parse_host_port(const std::string &address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 == address.size()) {
    throw DomainError("address '" + address + "' is not host:port");
  }
  HostPort hp;
  hp.host = address.substr(0, colon);
  if (hp.host.empty()) {
    hp.host = "0.0.0.0";
  }
  const auto port_text = address.substr(colon + 1);
  if (port_text.find_first_not_of("0123456789") != std::string::npos ||
      port_text.size() > 5) {
    throw DomainError("address '" + address + "' has a bad port");
  }
  const auto port = std::stoul(port_text);
  if (port > 65535) {
    throw DomainError("address '" + address + "' has a bad port");
  }
  hp.port = static_cast<std::uint16_t>(port);
  return hp;
}

namespace {

addrinfo *resolve(const HostPort &hp, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) {
    hints.ai_flags = AI_PASSIVE;
  }
  addrinfo *res = nullptr;
  const auto port = std::to_string(hp.port);
  const int rc = ::getaddrinfo(hp.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    return nullptr;
  }
  return res;
}

} // namespace

Socket connect_to(const std::string &address, std::chrono::milliseconds timeout) {
  HostPort hp;
  try {
    hp = parse_host_port(address);
  } catch (const DomainError &e) {
    throw WorkerLostError(std::string("worker connect failed: ") + e.what());
  }
  addrinfo *res = resolve(hp, false);
  if (res == nullptr) {
    throw WorkerLostError("worker connect failed: cannot resolve " + address);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, 0);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw WorkerLostError("worker connect failed: socket()");
  }
  Socket sock(fd);
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0 && errno != EINPROGRESS) {
    throw WorkerLostError("worker connect failed: " + address + ": " +
                          std::strerror(errno));
  }
  if (rc < 0) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc <= 0) {
      throw WorkerLostError("worker connect failed: " + address + ": timed out");
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      throw WorkerLostError("worker connect failed: " + address + ": " +
                            std::strerror(err));
    }
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return sock;
}

Listener::Listener(const std::string &address) {
  const auto hp = parse_host_port(address);
  addrinfo *res = resolve(hp, true);
  if (res == nullptr) {
    throw Error("cannot resolve listen address " + address);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, 0);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    throw Error("socket() failed");
  }
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, res->ai_addr, res->ai_addrlen) < 0 || ::listen(fd_, 8) < 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(fd_);
    fd_ = -1;
    throw Error("cannot bind " + address + ": " + why);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr *>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

Socket Listener::accept() {
  while (true) {
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno != EINTR) {
      throw Error(std::string("accept failed: ") + std::strerror(errno));
    }
  }
}

} // namespace gpgc
