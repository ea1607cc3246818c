#include "gpgc/distnet.hpp"

#include <cmath>
#include <sstream>

#include "gpgc/bytes.hpp"
#include "gpgc/errors.hpp"
#include "gpgc/io.hpp"

namespace gpgc {

// ---------------------------------------------------------------------------
// Worker

WorkerServer::WorkerServer(const std::string &listen_address, std::size_t expected_k)
    : listener_(listen_address), expected_k_(expected_k) {}

std::vector<std::uint8_t> load_shard_payload(const FeatureShard &shard) {
  ByteWriter w;
  w.u64(shard.col_offset());
  w.bytes(encode_feature_image(shard));
  return w.take();
}

WireFrame WorkerServer::handle(const WireFrame &request) {
  switch (request.opcode) {
  case Opcode::load_shard:
    try {
      ByteReader r(request.payload);
      const auto offset = r.u64();
      auto shard = decode_feature_image(r.bytes(r.remaining()), offset);
      if (expected_k_ != 0 && shard.k() != expected_k_) {
        return error_frame("shard has k=" + std::to_string(shard.k()) +
                           ", worker expects k=" + std::to_string(expected_k_));
      }
      shard_ = std::move(shard);
      return WireFrame{Opcode::ok, {}};
    } catch (const Error &e) {
      return error_frame(std::string("bad shard: ") + e.what());
    }
  case Opcode::shutdown:
    shutdown_ = true;
    return WireFrame{Opcode::ok, {}};
  case Opcode::mat_vec:
  case Opcode::mat_t_vec:
  case Opcode::gram:
  case Opcode::diag_quad:
    if (!shard_) {
      return error_frame("shard not loaded");
    }
    try {
      return handle_query(request);
    } catch (const Error &e) {
      return error_frame(e.what());
    }
  default:
    return error_frame(std::string("unexpected opcode ") + opcode_name(request.opcode));
  }
}

WireFrame WorkerServer::handle_query(const WireFrame &request) {
  const auto &shard = *shard_;
  const auto k = static_cast<Eigen::Index>(shard.k());
  const auto n = static_cast<Eigen::Index>(shard.n_cols());
  const Eigen::MatrixXd in = matrix_from_payload(request.payload);
  auto expect = [&](Eigen::Index rows, Eigen::Index cols) {
    if (in.rows() != rows || in.cols() != cols) {
      throw DimensionError(std::string(opcode_name(request.opcode)) + " payload is " +
                           std::to_string(in.rows()) + "x" + std::to_string(in.cols()) +
                           ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
    if (!in.allFinite()) {
      throw DomainError("payload is not finite");
    }
  };
  WireFrame out{Opcode::result, {}};
  switch (request.opcode) {
  case Opcode::mat_vec: {
    expect(n, 1);
    Eigen::VectorXd r(k);
    shard.mat_vec(in.col(0), r);
    out.payload = matrix_payload(r);
    break;
  }
  case Opcode::mat_t_vec: {
    expect(k, 1);
    Eigen::VectorXd r(n);
    shard.mat_t_vec(in.col(0), r);
    out.payload = matrix_payload(r);
    break;
  }
  case Opcode::gram: {
    expect(n, 1);
    if ((in.array() <= 0.0).any()) {
      throw DomainError("GRAM weights must be strictly positive");
    }
    Eigen::MatrixXd r(k, k);
    shard.weighted_gram(in.col(0), r);
    out.payload = matrix_payload(r);
    break;
  }
  case Opcode::diag_quad: {
    expect(k, k);
    Eigen::VectorXd r(n);
    shard.diag_quadratic(in, r);
    out.payload = matrix_payload(r);
    break;
  }
  default:
    throw ProtocolError("not a query opcode");
  }
  return out;
}

void WorkerServer::serve() {
  while (!shutdown_) {
    Socket conn = listener_.accept();
    try {
      while (!shutdown_) {
        const auto request = conn.recv_frame();
        conn.send_frame(handle(request));
      }
    } catch (const WorkerLostError &) {
      // Master went away; wait for the next one.
    } catch (const ProtocolError &) {
      // Malformed frame: drop the connection.
    }
  }
}

void worker_serve(const std::string &listen_address, std::size_t expected_k) {
  WorkerServer server(listen_address, expected_k);
  server.serve();
}

// ---------------------------------------------------------------------------
// Master

std::vector<std::string> split_worker_list(const std::string &list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

ClusterOracle::ClusterOracle(const std::vector<std::string> &addresses,
                             std::size_t n_instances, std::size_t k,
                             std::chrono::milliseconds timeout)
    : k_(k), timeout_(timeout) {
  if (addresses.empty()) {
    throw DomainError("worker list is empty");
  }
  layout_ = ShardLayout::even(n_instances, addresses.size());
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    sockets_.push_back(connect_to(addresses[i], timeout_));
    workers_.push_back({addresses[i], layout_.begin(i), layout_.end(i), true});
  }
  last_traffic_.resize(addresses.size());
}

ClusterOracle::~ClusterOracle() = default;

void ClusterOracle::require_live() const {
  for (const auto &w : workers_) {
    if (!w.live) {
      throw WorkerLostError("worker " + w.address + " is not live");
    }
  }
}

std::vector<WireFrame> ClusterOracle::fan_out(std::vector<WireFrame> requests,
                                              Opcode expected) {
  require_live();
  const std::size_t p = sockets_.size();
  std::vector<Traffic> before(p);
  for (std::size_t i = 0; i < p; ++i) {
    before[i] = {sockets_[i].bytes_sent(), sockets_[i].bytes_received()};
  }
  auto fail = [&](std::size_t i, const std::string &why) {
    for (auto &w : workers_) {
      w.live = false;
    }
    workers_[i].live = false;
    throw WorkerLostError("worker " + workers_[i].address + ": " + why);
  };
  for (std::size_t i = 0; i < p; ++i) {
    try {
      sockets_[i].send_frame(requests[i], timeout_);
    } catch (const TimeoutError &) {
      for (auto &w : workers_) {
        w.live = false;
      }
      throw;
    } catch (const Error &e) {
      fail(i, e.what());
    }
  }
  std::vector<WireFrame> responses(p);
  for (std::size_t i = 0; i < p; ++i) {
    try {
      responses[i] = sockets_[i].recv_frame(timeout_);
    } catch (const TimeoutError &) {
      for (auto &w : workers_) {
        w.live = false;
      }
      throw;
    } catch (const Error &e) {
      fail(i, e.what());
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    last_traffic_[i] = {sockets_[i].bytes_sent() - before[i].sent,
                        sockets_[i].bytes_received() - before[i].received};
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (responses[i].opcode == Opcode::error) {
      throw ProtocolError("worker " + workers_[i].address + " reported: " +
                          error_message(responses[i]));
    }
    if (responses[i].opcode != expected) {
      throw ProtocolError("worker " + workers_[i].address + " sent " +
                          opcode_name(responses[i].opcode));
    }
  }
  return responses;
}

void ClusterOracle::load_shards(const FeatureShard &features) {
  if (features.k() != k_ || features.n_cols() != layout_.n_instances()) {
    throw DimensionError("features do not match the cluster layout");
  }
  std::vector<WireFrame> requests;
  for (std::size_t i = 0; i < sockets_.size(); ++i) {
    requests.push_back(WireFrame{
        Opcode::load_shard,
        load_shard_payload(features.slice(layout_.begin(i), layout_.end(i)))});
  }
  fan_out(std::move(requests), Opcode::ok);
  loaded_ = true;
}

void ClusterOracle::load_shards_from_file(const std::filesystem::path &features_path) {
  const auto header = read_feature_header(features_path);
  if (header.k != k_ || header.n_instances != layout_.n_instances()) {
    throw DimensionError("feature file does not match the cluster layout");
  }
  // One shard in memory at a time.
  for (std::size_t i = 0; i < sockets_.size(); ++i) {
    require_live();
    const auto shard = read_feature_rows(features_path, layout_.begin(i), layout_.end(i));
    try {
      sockets_[i].send_frame(WireFrame{Opcode::load_shard, load_shard_payload(shard)},
                             timeout_);
      const auto reply = sockets_[i].recv_frame(timeout_);
      if (reply.opcode != Opcode::ok) {
        throw ProtocolError("worker " + workers_[i].address +
                            " rejected shard: " + error_message(reply));
      }
    } catch (const WorkerLostError &e) {
      workers_[i].live = false;
      throw WorkerLostError("worker " + workers_[i].address + ": " + e.what());
    }
  }
  loaded_ = true;
}

void ClusterOracle::shutdown() {
  for (std::size_t i = 0; i < sockets_.size(); ++i) {
    if (!workers_[i].live) {
      continue;
    }
    try {
      sockets_[i].send_frame(WireFrame{Opcode::shutdown, {}}, timeout_);
      sockets_[i].recv_frame(timeout_);
    } catch (const Error &) {
    }
    workers_[i].live = false;
    sockets_[i].close();
  }
}

WireFrame ClusterOracle::broadcast_request(Opcode op,
                                           const Eigen::Ref<const Eigen::MatrixXd> &m) const {
  return WireFrame{op, matrix_payload(m)};
}

WireFrame ClusterOracle::split_request(Opcode op, const Eigen::Ref<const Eigen::VectorXd> &v,
                                       std::size_t shard) const {
  const auto b = static_cast<Eigen::Index>(layout_.begin(shard));
  const auto n = static_cast<Eigen::Index>(layout_.size(shard));
  return WireFrame{op, matrix_payload(v.segment(b, n))};
}

void ClusterOracle::do_mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                               Eigen::Ref<Eigen::VectorXd> out) {
  if (!loaded_) {
    throw ProtocolError("shards not loaded");
  }
  std::vector<WireFrame> requests;
  for (std::size_t i = 0; i < sockets_.size(); ++i) {
    requests.push_back(split_request(Opcode::mat_vec, v, i));
  }
  const auto responses = fan_out(std::move(requests), Opcode::result);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto part = matrix_from_payload(responses[i].payload);
    if (part.rows() != out.size() || part.cols() != 1) {
      throw ProtocolError("MATVEC result has wrong shape");
    }
    if (i == 0) {
      out = part.col(0);
    } else {
      out += part.col(0);
    }
  }
}

void ClusterOracle::do_mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                                 Eigen::Ref<Eigen::VectorXd> out) {
  if (!loaded_) {
    throw ProtocolError("shards not loaded");
  }
  const auto request = broadcast_request(Opcode::mat_t_vec, u);
  const auto responses =
      fan_out(std::vector<WireFrame>(sockets_.size(), request), Opcode::result);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto part = matrix_from_payload(responses[i].payload);
    const auto n = static_cast<Eigen::Index>(layout_.size(i));
    if (part.rows() != n || part.cols() != 1) {
      throw ProtocolError("MATTVEC result has wrong shape");
    }
    out.segment(static_cast<Eigen::Index>(layout_.begin(i)), n) = part.col(0);
  }
}

void ClusterOracle::do_weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                                     Eigen::Ref<Eigen::MatrixXd> out) {
  if (!loaded_) {
    throw ProtocolError("shards not loaded");
  }
  std::vector<WireFrame> requests;
  for (std::size_t i = 0; i < sockets_.size(); ++i) {
    requests.push_back(split_request(Opcode::gram, d, i));
  }
  const auto responses = fan_out(std::move(requests), Opcode::result);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto part = matrix_from_payload(responses[i].payload);
    if (part.rows() != out.rows() || part.cols() != out.cols()) {
      throw ProtocolError("GRAM result has wrong shape");
    }
    if (i == 0) {
      out = part;
    } else {
      out += part;
    }
  }
}

void ClusterOracle::do_diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                                      Eigen::Ref<Eigen::VectorXd> out) {
  if (!loaded_) {
    throw ProtocolError("shards not loaded");
  }
  const auto request = broadcast_request(Opcode::diag_quad, a);
  const auto responses =
      fan_out(std::vector<WireFrame>(sockets_.size(), request), Opcode::result);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto part = matrix_from_payload(responses[i].payload);
    const auto n = static_cast<Eigen::Index>(layout_.size(i));
    if (part.rows() != n || part.cols() != 1) {
      throw ProtocolError("DIAGQUAD result has wrong shape");
    }
    out.segment(static_cast<Eigen::Index>(layout_.begin(i)), n) = part.col(0);
  }
}

} // namespace gpgc
