#include <cstdlib>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "gpgc/distnet.hpp"
#include "gpgc/errors.hpp"
#include "gpgc/hyperopt.hpp"
#include "gpgc/io.hpp"
#include "gpgc/synthetic.hpp"
#include "support.hpp"

namespace gpgc {
namespace {

using testing::LocalCluster;

FeatureShard random_shard(std::size_t k, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> data(k * n);
  for (auto &x : data) x = normal(rng);
  return FeatureShard(k, 0, std::move(data));
}

TEST(Wire, FrameRoundTrip) {
  WireFrame f{Opcode::gram, {1, 2, 3}};
  const auto bytes = encode_frame(f);
  ASSERT_EQ(bytes.size(), kFrameHeaderBytes + 3);
  EXPECT_EQ(bytes[0], 3);
  EXPECT_EQ(bytes[8], 0x04);
  const auto back = decode_frame(bytes);
  EXPECT_EQ(back.opcode, Opcode::gram);
  EXPECT_EQ(back.payload, f.payload);
}

TEST(Wire, RejectsMalformedFrames) {
  auto bytes = encode_frame({Opcode::ok, {}});
  bytes[8] = 0x42;
  EXPECT_THROW(decode_frame(bytes), ProtocolError);
  bytes = encode_frame({Opcode::result, {9, 9}});
  bytes.pop_back();
  EXPECT_THROW(decode_frame(bytes), ProtocolError);
}

TEST(Wire, MatrixIsRowMajor) {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const auto payload = matrix_payload(m);
  ASSERT_EQ(payload.size(), 8u + 6 * 8);
  ByteReader r(payload);
  EXPECT_EQ(r.u32(), 2u);
  EXPECT_EQ(r.u32(), 3u);
  EXPECT_EQ(r.f64(), 1.0);
  EXPECT_EQ(r.f64(), 2.0);
  EXPECT_EQ(matrix_from_payload(payload), m);
}

TEST(Wire, TimeoutFromEnvironment) {
  ::setenv("GPGC_NET_TIMEOUT_SECS", "7", 1);
  EXPECT_EQ(net_timeout(), std::chrono::seconds(7));
  ::unsetenv("GPGC_NET_TIMEOUT_SECS");
  EXPECT_EQ(net_timeout(), std::chrono::seconds(300));
}

TEST(WorkerHandler, QueryBeforeLoadIsError) {
  WorkerServer w("127.0.0.1:0");
  const auto r = w.handle({Opcode::mat_vec, matrix_payload(Eigen::VectorXd::Ones(3))});
  EXPECT_EQ(r.opcode, Opcode::error);
  EXPECT_NE(error_message(r).find("shard not loaded"), std::string::npos);
}

TEST(WorkerHandler, WrongLengthPayloadIsError) {
  WorkerServer w("127.0.0.1:0");
  const auto shard = random_shard(3, 5, 1);
  EXPECT_EQ(w.handle({Opcode::load_shard, load_shard_payload(shard)}).opcode, Opcode::ok);
  EXPECT_EQ(w.handle({Opcode::mat_vec, matrix_payload(Eigen::VectorXd::Ones(4))}).opcode,
            Opcode::error);
  EXPECT_EQ(w.handle({Opcode::mat_vec, {1, 2, 3}}).opcode, Opcode::error);
  const auto ok = w.handle({Opcode::mat_vec, matrix_payload(Eigen::VectorXd::Ones(5))});
  ASSERT_EQ(ok.opcode, Opcode::result);
  Eigen::VectorXd expect(3);
  shard.mat_vec(Eigen::VectorXd::Ones(5), expect);
  EXPECT_EQ(Eigen::VectorXd(matrix_from_payload(ok.payload)), expect);
}

TEST(WorkerHandler, ShutdownAcknowledged) {
  WorkerServer w("127.0.0.1:0");
  EXPECT_EQ(w.handle({Opcode::shutdown, {}}).opcode, Opcode::ok);
  EXPECT_TRUE(w.shutdown_requested());
}

TEST(WorkerHandler, BadShardIsError) {
  WorkerServer w("127.0.0.1:0", 4);
  EXPECT_EQ(w.handle({Opcode::load_shard, load_shard_payload(random_shard(3, 2, 1))}).opcode,
            Opcode::error);
  EXPECT_EQ(w.handle({Opcode::load_shard, {0, 0, 0}}).opcode, Opcode::error);
  EXPECT_FALSE(w.shard().has_value());
}

TEST(ClusterOracle, MatchesLocalOracle) {
  const std::size_t k = 6, n = 257;
  const auto full = random_shard(k, n, 2);
  LocalOracle local(full);
  const Eigen::VectorXd v = Eigen::VectorXd::Random(n);
  const Eigen::VectorXd u = Eigen::VectorXd::Random(k);
  const Eigen::VectorXd d = Eigen::VectorXd::Random(n).cwiseAbs().array() + 0.1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(k, k);
  a = (a + a.transpose()).eval();
  for (std::size_t p : {2, 3}) {
    LocalCluster cluster(p);
    ClusterOracle remote(cluster.addresses(), n, k);
    remote.load_shards(full);
    EXPECT_LT((remote.mat_vec(v) - local.mat_vec(v)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((remote.weighted_gram(d) - local.weighted_gram(d)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(remote.mat_t_vec(u), local.mat_t_vec(u));
    EXPECT_EQ(remote.diag_quadratic(a), local.diag_quadratic(a));
    remote.shutdown();
  }
}

TEST(ClusterOracle, TrafficBounded) {
  const std::size_t k = 5, n = 120;
  const auto full = random_shard(k, n, 3);
  LocalCluster cluster(2);
  ClusterOracle remote(cluster.addresses(), n, k);
  remote.load_shards(full);
  const double bound = 8.0 * (k * k + n) + 64;
  auto check = [&] {
    for (const auto &t : remote.last_traffic()) {
      EXPECT_LE(static_cast<double>(t.sent), bound);
      EXPECT_LE(static_cast<double>(t.received), bound);
    }
  };
  remote.mat_vec(Eigen::VectorXd::Ones(n));
  check();
  remote.mat_t_vec(Eigen::VectorXd::Ones(k));
  check();
  remote.weighted_gram(Eigen::VectorXd::Ones(n));
  check();
  remote.diag_quadratic(Eigen::MatrixXd::Identity(k, k));
  check();
  remote.shutdown();
}

TEST(ClusterOracle, LoadsShardsFromFile) {
  testing::TempDir dir("dist");
  const std::size_t k = 4, n = 33;
  const auto full = random_shard(k, n, 4);
  write_feature_file(dir / "f.bin", full);
  LocalCluster cluster(3);
  ClusterOracle remote(cluster.addresses(), n, k);
  remote.load_shards_from_file(dir / "f.bin");
  LocalOracle local(full);
  const Eigen::VectorXd u = Eigen::VectorXd::Random(k);
  EXPECT_EQ(remote.mat_t_vec(u), local.mat_t_vec(u));
  remote.shutdown();
}

TEST(ClusterOracle, TrainingMatchesLocal) {
  const auto p = random_problem(31, 150, 4, 5, 1, false);
  LocalOracle local(p.shard());
  const auto r_local = train(local, p.dataset, p.weights, p.hyper.scale_group_of, {});
  LocalCluster cluster(2);
  ClusterOracle remote(cluster.addresses(), 150, 4);
  remote.load_shards(p.shard());
  const auto r_remote = train(remote, p.dataset, p.weights, p.hyper.scale_group_of, {});
  remote.shutdown();
  for (Eigen::Index g = 0; g < 5; ++g)
    EXPECT_LT(testing::rel_err(r_local.model.hyper.eps[g], r_remote.model.hyper.eps[g]), 1e-6);
}

TEST(ClusterOracle, UnreachableWorker) {
  // Bind then close to get a port nobody listens on.
  std::uint16_t port;
  {
    Listener l("127.0.0.1:0");
    port = l.port();
  }
  try {
    ClusterOracle remote({"127.0.0.1:" + std::to_string(port)}, 10, 2,
                         std::chrono::milliseconds(2000));
    FAIL() << "expected WorkerLostError";
  } catch (const WorkerLostError &e) {
    EXPECT_NE(std::string(e.what()).find("worker connect failed"), std::string::npos);
  }
}

TEST(ClusterOracle, WorkerDeathSurfaces) {
  const std::size_t k = 3, n = 20;
  const auto full = random_shard(k, n, 5);
  LocalCluster cluster(2);
  ClusterOracle remote(cluster.addresses(), n, k, std::chrono::milliseconds(5000));
  remote.load_shards(full);
  remote.shutdown();
  EXPECT_THROW(remote.mat_vec(Eigen::VectorXd::Ones(n)), WorkerLostError);
}

TEST(SplitWorkerList, Basic) {
  EXPECT_EQ(split_worker_list("a:1,b:2"), (std::vector<std::string>{"a:1", "b:2"}));
}

} // namespace
} // namespace gpgc
