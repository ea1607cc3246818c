#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "gpgc/errors.hpp"
#include "gpgc/io.hpp"
#include "support.hpp"

namespace gpgc {
namespace {

using testing::TempDir;

FeatureShard random_shard(std::size_t k, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> data(k * n);
  for (auto &x : data) x = normal(rng);
  return FeatureShard(k, 0, std::move(data));
}

void write_text(const std::filesystem::path &p, const std::string &s) {
  std::ofstream(p) << s;
}

TEST(FeatureFile, RoundTripIsBitExact) {
  TempDir dir("io");
  const auto shard = random_shard(5, 17, 1);
  const std::vector<std::uint32_t> bounds{0, 2, 4};
  write_feature_file(dir / "f.bin", shard, bounds);
  const auto header = read_feature_header(dir / "f.bin");
  EXPECT_EQ(header.n_instances, 17u);
  EXPECT_EQ(header.k, 5u);
  EXPECT_EQ(header.scale_boundaries, bounds);
  EXPECT_EQ(std::filesystem::file_size(dir / "f.bin"), header.data_offset() + 8 * 5 * 17);
  const auto back = read_feature_file(dir / "f.bin");
  ASSERT_EQ(back.n_cols(), 17u);
  EXPECT_TRUE(std::equal(shard.data().begin(), shard.data().end(), back.data().begin()));
}

TEST(FeatureFile, RowRangeCarriesOffset) {
  TempDir dir("io");
  const auto shard = random_shard(3, 10, 2);
  write_feature_file(dir / "f.bin", shard);
  const auto part = read_feature_rows(dir / "f.bin", 4, 9);
  EXPECT_EQ(part.col_offset(), 4u);
  EXPECT_EQ(part.n_cols(), 5u);
  EXPECT_EQ(Eigen::MatrixXd(part.matrix()), Eigen::MatrixXd(shard.matrix().middleCols(4, 5)));
  EXPECT_THROW(read_feature_rows(dir / "f.bin", 4, 11), DimensionError);
}

TEST(FeatureFile, RejectsCorruptInput) {
  TempDir dir("io");
  write_text(dir / "bad.bin", "NOPE0000000000000000000000");
  EXPECT_THROW(read_feature_file(dir / "bad.bin"), DataFormatError);
  const auto shard = random_shard(2, 4, 3);
  write_feature_file(dir / "f.bin", shard);
  std::filesystem::resize_file(dir / "f.bin", std::filesystem::file_size(dir / "f.bin") - 8);
  EXPECT_THROW(read_feature_file(dir / "f.bin"), DataFormatError);
}

TEST(FeatureShard, RejectsNonFinite) {
  EXPECT_THROW(FeatureShard(2, 0, {1.0, NAN}), NumericError);
  EXPECT_THROW(FeatureShard(2, 0, {1.0, 2.0, 3.0}), DataFormatError);
}

TEST(ScaleGroups, FromBoundaries) {
  const std::vector<std::uint32_t> b{0, 1, 3};
  EXPECT_EQ(scale_groups_from_boundaries(5, b), (std::vector<GroupIndex>{0, 1, 1, 2, 2}));
  EXPECT_EQ(scale_groups_from_boundaries(3, {}), (std::vector<GroupIndex>{0, 0, 0}));
  const std::vector<std::uint32_t> bad{1, 2};
  EXPECT_THROW(scale_groups_from_boundaries(4, bad), DataFormatError);
}

TEST(TextFiles, LabelErrors) {
  TempDir dir("io");
  write_text(dir / "ok", "1\n-1\n+1\n");
  EXPECT_EQ(read_labels(dir / "ok").size(), 3);
  write_text(dir / "zero", "1\n0\n");
  EXPECT_THROW(read_labels(dir / "zero"), LabelError);
  write_text(dir / "junk", "1\nabc\n");
  EXPECT_THROW(read_labels(dir / "junk"), DataFormatError);
}

TEST(LoadDataset, CountMismatchIsFormatError) {
  TempDir dir("io");
  write_feature_file(dir / "f.bin", random_shard(2, 3, 4));
  write_text(dir / "y", "1\n-1\n");
  write_text(dir / "g", "a\nb\na\n");
  EXPECT_THROW(load_dataset(dir / "f.bin", dir / "y", dir / "g"), DataFormatError);
  write_text(dir / "y", "1\n-1\n1\n");
  const auto loaded = load_dataset(dir / "f.bin", dir / "y", dir / "g");
  EXPECT_EQ(loaded.group_tokens, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(loaded.dataset.group_of(), (std::vector<GroupIndex>{0, 1, 0}));
}

TEST(ModelFile, RoundTripIsBitExact) {
  TempDir dir("io");
  TrainedModel m;
  m.beta = Eigen::VectorXd::Random(4) * 1e-3;
  m.hyper.eps = Eigen::VectorXd::Random(3).cwiseAbs() + Eigen::VectorXd::Constant(3, 0.1);
  m.hyper.sigma = Eigen::VectorXd::Constant(2, 1.0 / 3.0);
  m.hyper.scale_group_of = {0, 1, 1, 0};
  m.group_confidence = confidence_from_noise(m.hyper.eps);
  m.n_instances = 123;
  m.final_lml = -std::exp(1.0) * 1000;
  save_model(dir / "m", m);
  EXPECT_EQ(load_model(dir / "m"), m);
  write_text(dir / "broken", "version 1\nk 2\n");
  EXPECT_THROW(load_model(dir / "broken"), DataFormatError);
}

} // namespace
} // namespace gpgc
