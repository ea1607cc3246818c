#include <atomic>
#include <random>

#include <gtest/gtest.h>

#include "gpgc/errors.hpp"
#include "gpgc/oracle.hpp"
#include "support.hpp"

namespace gpgc {
namespace {

using testing::LoopOracle;

struct Inputs {
  Eigen::MatrixXd f;
  Eigen::VectorXd v, u, d;
  Eigen::MatrixXd a;
};

Inputs make_inputs(Eigen::Index k, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto fill = [&](Eigen::MatrixXd &m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  };
  Inputs in;
  in.f.resize(k, n);
  fill(in.f);
  Eigen::MatrixXd tmp(n, 1);
  fill(tmp);
  in.v = tmp.col(0);
  tmp.resize(k, 1);
  fill(tmp);
  in.u = tmp.col(0);
  in.d = (Eigen::VectorXd::Random(n).array().abs() + 0.1).matrix();
  in.a.resize(k, k);
  fill(in.a);
  in.a = (in.a + in.a.transpose()).eval();
  return in;
}

FeatureShard to_shard(const Eigen::MatrixXd &f) {
  return FeatureShard(static_cast<std::size_t>(f.rows()), 0,
                      std::vector<double>(f.data(), f.data() + f.size()));
}

double max_rel(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

TEST(LocalOracle, MatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = make_inputs(3 + seed, 50 + 31 * seed, seed);
    LoopOracle loops(in.f);
    for (std::size_t p : {1, 2, 3, 7}) {
      LocalOracle local(to_shard(in.f), p, p > 1 ? 2 : 0);
      EXPECT_LT(max_rel(local.mat_vec(in.v), loops.mat_vec(in.v)), 1e-13);
      EXPECT_LT(max_rel(local.mat_t_vec(in.u), loops.mat_t_vec(in.u)), 1e-13);
      EXPECT_LT(max_rel(local.weighted_gram(in.d), loops.weighted_gram(in.d)), 1e-13);
      EXPECT_LT(max_rel(local.diag_quadratic(in.a), loops.diag_quadratic(in.a)), 1e-13);
    }
  }
}

TEST(LocalOracle, Adjointness) {
  const auto in = make_inputs(6, 200, 9);
  LocalOracle oracle(to_shard(in.f), 3, 2);
  const double lhs = in.u.dot(oracle.mat_vec(in.v));
  const double rhs = oracle.mat_t_vec(in.u).dot(in.v);
  EXPECT_NEAR(lhs, rhs, 1e-12 * (std::abs(lhs) + 1.0));
}

TEST(LocalOracle, GramIsExactlySymmetric) {
  const auto in = make_inputs(9, 700, 4);
  LocalOracle oracle(to_shard(in.f), 4, 2);
  const Eigen::MatrixXd g = oracle.weighted_gram(in.d);
  EXPECT_EQ(g, g.transpose());
}

TEST(LocalOracle, ConcatenationsBitEqualAcrossLayouts) {
  const auto in = make_inputs(11, 301, 5);
  LocalOracle one(to_shard(in.f), 1);
  const Eigen::VectorXd t1 = one.mat_t_vec(in.u);
  const Eigen::VectorXd q1 = one.diag_quadratic(in.a);
  for (std::size_t p : {2, 3, 5, 301}) {
    LocalOracle many(to_shard(in.f), p, 2);
    EXPECT_EQ(many.mat_t_vec(in.u), t1) << "p=" << p;
    EXPECT_EQ(many.diag_quadratic(in.a), q1) << "p=" << p;
  }
}

TEST(LocalOracle, SumsInvariantToShardCount) {
  const auto in = make_inputs(7, 500, 6);
  LocalOracle one(to_shard(in.f), 1);
  const Eigen::VectorXd fv = one.mat_vec(in.v);
  const Eigen::MatrixXd g = one.weighted_gram(in.d);
  for (std::size_t p : {2, 3, 8}) {
    LocalOracle many(to_shard(in.f), p, 3);
    EXPECT_LT(max_rel(many.mat_vec(in.v), fv), 1e-12);
    EXPECT_LT(max_rel(many.weighted_gram(in.d), g), 1e-12);
  }
}

TEST(LocalOracle, RepeatedCallsAreBitReproducible) {
  const auto in = make_inputs(5, 400, 7);
  LocalOracle oracle(to_shard(in.f), 4, 3);
  const Eigen::VectorXd first = oracle.mat_vec(in.v);
  for (int r = 0; r < 20; ++r) EXPECT_EQ(oracle.mat_vec(in.v), first);
}

TEST(LocalOracle, PreSplitShards) {
  const auto in = make_inputs(3, 10, 8);
  const auto whole = to_shard(in.f);
  std::vector<FeatureShard> parts{whole.slice(0, 4), whole.slice(4, 10)};
  LocalOracle split(std::move(parts));
  LocalOracle one(to_shard(in.f));
  EXPECT_EQ(split.mat_t_vec(in.u), one.mat_t_vec(in.u));
  EXPECT_EQ(split.layout().boundaries(), (std::vector<std::size_t>{0, 4, 10}));
}

TEST(FeatureOracle, ValidatesInputs) {
  const auto in = make_inputs(3, 10, 1);
  LocalOracle oracle(to_shard(in.f));
  EXPECT_THROW(oracle.mat_vec(Eigen::VectorXd::Ones(9)), DimensionError);
  EXPECT_THROW(oracle.mat_t_vec(Eigen::VectorXd::Ones(4)), DimensionError);
  Eigen::VectorXd d = in.d;
  d[3] = 0.0;
  EXPECT_THROW(oracle.weighted_gram(d), DomainError);
  d[3] = -1.0;
  EXPECT_THROW(oracle.weighted_gram(d), DomainError);
  Eigen::MatrixXd asym = in.a;
  asym(0, 1) += 1.0;
  EXPECT_THROW(oracle.diag_quadratic(asym), DomainError);
  EXPECT_THROW(oracle.diag_quadratic(Eigen::MatrixXd::Identity(4, 4)), DimensionError);
}

TEST(ShardLayout, EvenPutsRemainderFirst) {
  const auto l = ShardLayout::even(10, 3);
  EXPECT_EQ(l.boundaries(), (std::vector<std::size_t>{0, 4, 7, 10}));
  EXPECT_EQ(ShardLayout::even(2, 3).boundaries(), (std::vector<std::size_t>{0, 1, 2, 2}));
}

TEST(WorkerPool, RunsEveryIndexOnce) {
  WorkerPool pool(3);
  std::vector<std::atomic<int>> hits(1000);
  pool.run(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto &h : hits) EXPECT_EQ(h.load(), 1);
}

} // namespace
} // namespace gpgc
