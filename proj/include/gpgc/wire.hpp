#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpgc/bytes.hpp"

namespace gpgc {

// Frame: u64 payload length | u8 opcode | payload, all little-endian.
enum class Opcode : std::uint8_t {
  load_shard = 0x01,
  mat_vec = 0x02,
  mat_t_vec = 0x03,
  gram = 0x04,
  diag_quad = 0x05,
  shutdown = 0x06,
  ok = 0x10,
  result = 0x11,
  error = 0x1F,
};

inline constexpr std::size_t kFrameHeaderBytes = 9;
// Frames claiming more than this are treated as malformed.
inline constexpr std::uint64_t kMaxFrameBytes = std::uint64_t{1} << 40;

bool is_known_opcode(std::uint8_t value);
const char *opcode_name(Opcode op);

struct WireFrame {
  Opcode opcode = Opcode::ok;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(const WireFrame &frame);
// Decodes exactly one frame occupying all of `bytes`; ProtocolError otherwise.
WireFrame decode_frame(std::span<const std::uint8_t> bytes);

// Matrices: u32 rows | u32 cols | rows*cols f64, row-major. Vectors are
// (n, 1) matrices.
void encode_matrix(ByteWriter &out, const Eigen::Ref<const Eigen::MatrixXd> &m);
Eigen::MatrixXd decode_matrix(ByteReader &in);
std::vector<std::uint8_t> matrix_payload(const Eigen::Ref<const Eigen::MatrixXd> &m);
Eigen::MatrixXd matrix_from_payload(std::span<const std::uint8_t> payload);

WireFrame error_frame(const std::string &message);
std::string error_message(const WireFrame &frame);

// Network timeout: GPGC_NET_TIMEOUT_SECS if set, else 300 s.
std::chrono::milliseconds net_timeout();

// Owning TCP stream socket. Blocking I/O bounded by a per-call deadline;
// counts bytes in each direction.
class Socket {
public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket &&other) noexcept;
  Socket &operator=(Socket &&other) noexcept;
  Socket(const Socket &) = delete;
  Socket &operator=(const Socket &) = delete;

  bool valid() const { return fd_ >= 0; }
  void close();

  // Throws WorkerLostError on a closed peer, TimeoutError on deadline.
  void send_all(std::span<const std::uint8_t> data,
                std::optional<std::chrono::milliseconds> timeout);
  void recv_all(std::span<std::uint8_t> data,
                std::optional<std::chrono::milliseconds> timeout);

  void send_frame(const WireFrame &frame,
                  std::optional<std::chrono::milliseconds> timeout = std::nullopt);
  // ProtocolError on an unknown opcode or oversized length.
  WireFrame recv_frame(std::optional<std::chrono::milliseconds> timeout = std::nullopt);

  std::uint64_t bytes_sent() const { return sent_; }
  std::uint64_t bytes_received() const { return received_; }

private:
  int fd_ = -1;
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
};

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};
// "host:port"; DomainError when malformed.
HostPort parse_host_port(const std::string &address);

// Throws WorkerLostError("worker connect failed: ...") on failure.
Socket connect_to(const std::string &address, std::chrono::milliseconds timeout);

class Listener {
public:
  // Port 0 picks an ephemeral port. Throws Error on bind failure.
  explicit Listener(const std::string &address);
  ~Listener();
  Listener(const Listener &) = delete;
  Listener &operator=(const Listener &) = delete;

  std::uint16_t port() const { return port_; }
  Socket accept();

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

} // namespace gpgc
