#include <random>

#include <gtest/gtest.h>

#include "gpgc/dataset.hpp"
#include "gpgc/errors.hpp"

namespace gpgc {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(GroupedDataset, AcceptsValidInput) {
  GroupedDataset d(vec({1, -1, 1}), {0, 1, 0}, 2);
  EXPECT_EQ(d.n_instances(), 3u);
  EXPECT_EQ(d.n_groups(), 2u);
  EXPECT_EQ(d.group_sizes(), (std::vector<std::size_t>{2, 1}));
  EXPECT_TRUE(d.has_unit_weights());
}

TEST(GroupedDataset, RejectsBadLabel) {
  EXPECT_THROW(GroupedDataset(vec({1, 0}), {0, 0}, 1), LabelError);
  EXPECT_THROW(GroupedDataset(vec({1, 0.5}), {0, 0}, 1), LabelError);
}

TEST(GroupedDataset, RejectsEmptyOrOutOfRangeGroup) {
  EXPECT_THROW(GroupedDataset(vec({1, -1}), {0, 0}, 2), DataFormatError);
  EXPECT_THROW(GroupedDataset(vec({1, -1}), {0, 2}, 2), DataFormatError);
}

TEST(GroupedDataset, RejectsBadWeights) {
  EXPECT_THROW(GroupedDataset(vec({1, -1}), {0, 0}, 1, vec({1, 0})), DomainError);
  EXPECT_THROW(GroupedDataset(vec({1, -1}), {0, 0}, 1, vec({1, NAN})), DomainError);
  EXPECT_THROW(GroupedDataset(vec({1, -1}), {0, 0}, 1, vec({1})), DataFormatError);
}

TEST(BalanceWeights, ThreeToOne) {
  GroupedDataset d(vec({1, 1, 1, -1}), {0, 0, 0, 0}, 1);
  const Eigen::VectorXd w = balance_weights(d);
  EXPECT_DOUBLE_EQ(w[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(w[3], 2.0);
  EXPECT_DOUBLE_EQ(3 * w[0], 1 * w[3]);
  EXPECT_NEAR(w.sum(), 4.0, 1e-12);
}

TEST(BalanceWeights, SumsToNAndEqualisesClassMass) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial * 7;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = (rng() % 5 == 0) ? -1.0 : 1.0;
    y[0] = 1.0;
    y[1] = -1.0;
    GroupedDataset d(y, std::vector<GroupIndex>(static_cast<std::size_t>(n), 0), 1);
    const Eigen::VectorXd w = balance_weights(d);
    double plus = 0, minus = 0;
    for (int i = 0; i < n; ++i) (y[i] > 0 ? plus : minus) += w[i];
    EXPECT_NEAR(plus, minus, 1e-12 * n);
    EXPECT_NEAR(w.sum(), n, 1e-12 * n);
  }
}

TEST(BalanceWeights, SingleClassThrows) {
  GroupedDataset d(vec({1, 1}), {0, 0}, 1);
  EXPECT_THROW(balance_weights(d), BalanceError);
}

TEST(GroupTokens, FirstAppearanceOrder) {
  const auto t = index_group_tokens({"img7", "img2", "img7", "img9", "img2"});
  EXPECT_EQ(t.tokens, (std::vector<std::string>{"img7", "img2", "img9"}));
  EXPECT_EQ(t.group_of, (std::vector<GroupIndex>{0, 1, 0, 2, 1}));
}

TEST(TieGradients, IsAdjointOfExpand) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  const std::size_t n = 40, g = 6;
  std::vector<GroupIndex> group_of(n);
  for (std::size_t i = 0; i < n; ++i) group_of[i] = static_cast<GroupIndex>(i % g);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
  GroupedDataset d(y, group_of, g);
  HyperParams h;
  h.eps = Eigen::VectorXd(g);
  for (std::size_t j = 0; j < g; ++j) h.eps[static_cast<Eigen::Index>(j)] = normal(rng);
  Eigen::VectorXd u(n);
  for (std::size_t i = 0; i < n; ++i) u[static_cast<Eigen::Index>(i)] = normal(rng);
  // <expand(e), u> == <e, tie(u)>
  EXPECT_NEAR(expand_noise(h, d).dot(u), h.eps.dot(tie_gradients(u, group_of, g)), 1e-12);
}

TEST(TieGradients, SumsPerGroup) {
  const Eigen::VectorXd t = tie_gradients(vec({1, 2, 3, 4}), {1, 0, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(t[0], 2.0);
  EXPECT_DOUBLE_EQ(t[1], 8.0);
}

TEST(HyperParams, ValidateAndExpand) {
  HyperParams h{vec({1.0, 2.0}), vec({0.5, 3.0}), {1, 0, 1}};
  EXPECT_NO_THROW(h.validate());
  const Eigen::VectorXd s = h.expand_sigma();
  EXPECT_EQ(s, vec({3.0, 0.5, 3.0}));
  h.eps[0] = 0.0;
  EXPECT_THROW(h.validate(), DomainError);
  h.eps[0] = 1.0;
  h.scale_group_of[0] = 2;
  EXPECT_THROW(h.validate(), DomainError);
}

TEST(Confidence, IsNegatedNoise) {
  EXPECT_EQ(confidence_from_noise(vec({0.5, 2.0})), vec({-0.5, -2.0}));
}

} // namespace
} // namespace gpgc
