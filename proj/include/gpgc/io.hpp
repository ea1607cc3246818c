#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpgc/dataset.hpp"
#include "gpgc/shard.hpp"

namespace gpgc {

// Binary feature file:
//   "GPCF" | u32 version=1 | u64 N | u32 k | u32 S | S x u32 boundaries |
//   N*k little-endian f64, instance-major.
// Boundary s is the first feature index of scale group s.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

struct FeatureFileHeader {
  std::uint64_t n_instances = 0;
  std::uint32_t k = 0;
  std::vector<std::uint32_t> scale_boundaries;

  std::size_t data_offset() const { return 24 + 4 * scale_boundaries.size(); }
};

FeatureFileHeader read_feature_header(const std::filesystem::path &path);
FeatureShard read_feature_file(const std::filesystem::path &path);
// Instances [begin, end) only; the returned shard carries col_offset = begin.
FeatureShard read_feature_rows(const std::filesystem::path &path,
                               std::size_t begin, std::size_t end);
void write_feature_file(const std::filesystem::path &path,
                        const FeatureShard &features,
                        std::span<const std::uint32_t> scale_boundaries = {});

// The same layout in memory (used by LOAD_SHARD).
std::vector<std::uint8_t>
encode_feature_image(const FeatureShard &features,
                     std::span<const std::uint32_t> scale_boundaries = {});
FeatureShard decode_feature_image(std::span<const std::uint8_t> bytes,
                                  std::size_t col_offset,
                                  FeatureFileHeader *header = nullptr);

// Expands header boundaries to a per-feature scale-group map. Empty
// boundaries mean a single scale group.
std::vector<GroupIndex>
scale_groups_from_boundaries(std::uint32_t k,
                             std::span<const std::uint32_t> boundaries);

Eigen::VectorXd read_labels(const std::filesystem::path &path);
std::vector<std::string> read_group_tokens(const std::filesystem::path &path);
Eigen::VectorXd read_weights(const std::filesystem::path &path);
// k lines, each a dense scale-group index.
std::vector<GroupIndex> read_scale_groups(const std::filesystem::path &path);

void write_labels(const std::filesystem::path &path, const Eigen::VectorXd &labels);
void write_lines(const std::filesystem::path &path,
                 const std::vector<std::string> &lines);

struct LoadedData {
  FeatureShard features;
  GroupedDataset dataset;
  std::vector<std::string> group_tokens;
  std::vector<GroupIndex> scale_group_of;
};

// Reads and cross-validates the three training files.
LoadedData load_dataset(const std::filesystem::path &features_path,
                        const std::filesystem::path &labels_path,
                        const std::filesystem::path &groups_path);

// Same as load_dataset but leaves the features on disk; only the header is
// read. Used by the distributed master.
struct LoadedLabels {
  FeatureFileHeader header;
  GroupedDataset dataset;
  std::vector<std::string> group_tokens;
  std::vector<GroupIndex> scale_group_of;
};
LoadedLabels load_labels_and_groups(const std::filesystem::path &features_path,
                                    const std::filesystem::path &labels_path,
                                    const std::filesystem::path &groups_path);

// Text key-value model document; reals use 17 significant digits so that
// load(save(m)) == m bitwise.
void save_model(const std::filesystem::path &path, const TrainedModel &model);
TrainedModel load_model(const std::filesystem::path &path);
std::string format_real(double value);

} // namespace gpgc
