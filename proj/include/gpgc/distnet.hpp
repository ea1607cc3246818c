#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gpgc/oracle.hpp"
#include "gpgc/shard.hpp"
#include "gpgc/wire.hpp"

namespace gpgc {

// Serves oracle queries over one feature shard. The shard arrives with
// LOAD_SHARD; every query before that is answered with an ERROR frame.
class WorkerServer {
public:
  // expected_k == 0 accepts any feature dimension.
  explicit WorkerServer(const std::string &listen_address, std::size_t expected_k = 0);

  std::uint16_t port() const { return listener_.port(); }

  // Accepts connections one at a time until a SHUTDOWN frame arrives.
  // A dropped or malformed connection returns to accept().
  void serve();

  // Protocol state machine, exposed for tests. Sets shutdown_requested().
  WireFrame handle(const WireFrame &request);
  bool shutdown_requested() const { return shutdown_; }
  const std::optional<FeatureShard> &shard() const { return shard_; }

private:
  WireFrame handle_query(const WireFrame &request);

  Listener listener_;
  std::size_t expected_k_;
  std::optional<FeatureShard> shard_;
  bool shutdown_ = false;
};

// Binds, then serves until SHUTDOWN.
void worker_serve(const std::string &listen_address, std::size_t expected_k = 0);

// LOAD_SHARD payload: u64 col_offset | feature-file image of the shard.
std::vector<std::uint8_t> load_shard_payload(const FeatureShard &shard);

struct WorkerInfo {
  std::string address;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool live = false;
};

// Master side of the distributed oracle: one long-lived connection per
// worker, requests fanned out to all workers before any response is read,
// sums reduced in shard order and concatenations placed by offset.
class ClusterOracle final : public FeatureOracle {
public:
  // Connects to every worker; throws WorkerLostError("worker connect
  // failed: ...") if any is unreachable.
  ClusterOracle(const std::vector<std::string> &addresses, std::size_t n_instances,
                std::size_t k, std::chrono::milliseconds timeout = net_timeout());
  ~ClusterOracle() override;

  // Pushes shard i = columns [layout.begin(i), layout.end(i)) to worker i.
  void load_shards(const FeatureShard &features);
  // Streams each shard straight from the feature file.
  void load_shards_from_file(const std::filesystem::path &features_path);
  // Sends SHUTDOWN to every live worker.
  void shutdown();

  std::size_t n_instances() const override { return layout_.n_instances(); }
  std::size_t feature_dim() const override { return k_; }
  const ShardLayout &layout() const { return layout_; }
  const std::vector<WorkerInfo> &workers() const { return workers_; }

  // Bytes moved on each connection by the most recent query.
  struct Traffic {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
  };
  const std::vector<Traffic> &last_traffic() const { return last_traffic_; }

protected:
  void do_mat_vec(const Eigen::Ref<const Eigen::VectorXd> &v,
                  Eigen::Ref<Eigen::VectorXd> out) override;
  void do_mat_t_vec(const Eigen::Ref<const Eigen::VectorXd> &u,
                    Eigen::Ref<Eigen::VectorXd> out) override;
  void do_weighted_gram(const Eigen::Ref<const Eigen::VectorXd> &d,
                        Eigen::Ref<Eigen::MatrixXd> out) override;
  void do_diag_quadratic(const Eigen::Ref<const Eigen::MatrixXd> &a,
                         Eigen::Ref<Eigen::VectorXd> out) override;

private:
  // Sends requests[i] to worker i, then collects all responses in shard
  // order. Any failure marks the worker dead and aborts the query.
  std::vector<WireFrame> fan_out(std::vector<WireFrame> requests, Opcode expected);
  WireFrame broadcast_request(Opcode op, const Eigen::Ref<const Eigen::MatrixXd> &m) const;
  WireFrame split_request(Opcode op, const Eigen::Ref<const Eigen::VectorXd> &v,
                          std::size_t shard) const;
  void require_live() const;

  std::size_t k_;
  ShardLayout layout_;
  std::chrono::milliseconds timeout_;
  std::vector<Socket> sockets_;
  std::vector<WorkerInfo> workers_;
  std::vector<Traffic> last_traffic_;
  bool loaded_ = false;
};

// "a:1,b:2" -> {"a:1", "b:2"}
std::vector<std::string> split_worker_list(const std::string &list);

} // namespace gpgc
