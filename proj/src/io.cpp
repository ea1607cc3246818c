#include "gpgc/io.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gpgc/bytes.hpp"
#include "gpgc/errors.hpp"

namespace gpgc {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'C', 'F'};
constexpr int kModelVersion = 1;

std::ifstream open_in(const std::filesystem::path &path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw DataFormatError("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path &path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::out | std::ios::trunc);
  if (!out) {
    throw DataFormatError("cannot write " + path.string());
  }
  return out;
}

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> read_nonblank_lines(const std::filesystem::path &path) {
  auto in = open_in(path, false);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) {
      lines.push_back(std::move(t));
    }
  }
  return lines;
}

bool parse_real(const std::string &s, double &out) {
  if (s.empty()) {
    return false;
  }
  char *end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

bool parse_index(const std::string &s, GroupIndex &out) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    return false;
  }
  const auto v = std::strtoull(s.c_str(), nullptr, 10);
  if (v > 0xffffffffULL) {
    return false;
  }
  out = static_cast<GroupIndex>(v);
  return true;
}

FeatureFileHeader parse_header(ByteReader &r) {
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw DataFormatError("bad feature file magic");
  }
  const auto version = r.u32();
  if (version != kFeatureFileVersion) {
    throw DataFormatError("unsupported feature file version " +
                          std::to_string(version));
  }
  FeatureFileHeader h;
  h.n_instances = r.u64();
  h.k = r.u32();
  const auto s = r.u32();
  if (h.k == 0) {
    throw DataFormatError("feature dimension k must be at least 1");
  }
  if (s > h.k) {
    throw DataFormatError("more scale groups than features");
  }
  h.scale_boundaries.resize(s);
  for (auto &b : h.scale_boundaries) {
    b = r.u32();
  }
  // Validates the boundaries.
  scale_groups_from_boundaries(h.k, h.scale_boundaries);
  return h;
}

void encode_header(ByteWriter &w, std::uint64_t n, std::uint32_t k,
                   std::span<const std::uint32_t> boundaries) {
  w.bytes({reinterpret_cast<const std::uint8_t *>(kMagic), 4});
  w.u32(kFeatureFileVersion);
  w.u64(n);
  w.u32(k);
  w.u32(static_cast<std::uint32_t>(boundaries.size()));
  for (auto b : boundaries) {
    w.u32(b);
  }
}

void to_host_order(std::vector<double> &values) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto &v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      bits = __builtin_bswap64(bits);
      v = std::bit_cast<double>(bits);
    }
  }
}

} // namespace

std::vector<GroupIndex>
scale_groups_from_boundaries(std::uint32_t k,
                             std::span<const std::uint32_t> boundaries) {
  std::vector<GroupIndex> out(k, 0);
  if (boundaries.empty()) {
    return out;
  }
  if (boundaries.front() != 0) {
    throw DataFormatError("first scale-group boundary must be 0");
  }
  for (std::size_t s = 0; s < boundaries.size(); ++s) {
    const auto begin = boundaries[s];
    const auto end = s + 1 < boundaries.size() ? boundaries[s + 1] : k;
    if (begin >= end || end > k) {
      throw DataFormatError("scale-group boundaries must be strictly "
                            "increasing and below k");
    }
    std::fill(out.begin() + begin, out.begin() + end, static_cast<GroupIndex>(s));
  }
  return out;
}

FeatureFileHeader read_feature_header(const std::filesystem::path &path) {
  auto in = open_in(path, true);
  std::vector<std::uint8_t> fixed(24);
  in.read(reinterpret_cast<char *>(fixed.data()), 24);
  if (in.gcount() != 24) {
    throw DataFormatError("feature file header truncated: " + path.string());
  }
  const std::uint32_t s = static_cast<std::uint32_t>(fixed[20]) |
                          static_cast<std::uint32_t>(fixed[21]) << 8 |
                          static_cast<std::uint32_t>(fixed[22]) << 16 |
                          static_cast<std::uint32_t>(fixed[23]) << 24;
  if (s > (1u << 24)) {
    throw DataFormatError("implausible scale-group count in " + path.string());
  }
  fixed.resize(24 + 4 * static_cast<std::size_t>(s));
  in.read(reinterpret_cast<char *>(fixed.data() + 24),
          static_cast<std::streamsize>(4 * s));
  if (static_cast<std::size_t>(in.gcount()) != 4 * static_cast<std::size_t>(s)) {
    throw DataFormatError("feature file header truncated: " + path.string());
  }
  ByteReader r(fixed);
  return parse_header(r);
}

FeatureShard read_feature_rows(const std::filesystem::path &path,
                               std::size_t begin, std::size_t end) {
  const auto h = read_feature_header(path);
  if (begin > end || end > h.n_instances) {
    throw DimensionError("requested feature rows out of range");
  }
  const auto file_size = std::filesystem::file_size(path);
  const auto expected = h.data_offset() + 8 * h.n_instances * h.k;
  if (file_size != expected) {
    throw DataFormatError("feature file " + path.string() + " has " +
                          std::to_string(file_size) + " bytes, header implies " +
                          std::to_string(expected));
  }
  auto in = open_in(path, true);
  std::vector<double> values((end - begin) * h.k);
  in.seekg(static_cast<std::streamoff>(h.data_offset() + 8 * begin * h.k));
  in.read(reinterpret_cast<char *>(values.data()),
          static_cast<std::streamsize>(8 * values.size()));
  if (static_cast<std::size_t>(in.gcount()) != 8 * values.size()) {
    throw DataFormatError("feature file truncated: " + path.string());
  }
  to_host_order(values);
  return FeatureShard(h.k, begin, std::move(values));
}

FeatureShard read_feature_file(const std::filesystem::path &path) {
  const auto h = read_feature_header(path);
  return read_feature_rows(path, 0, h.n_instances);
}

std::vector<std::uint8_t>
encode_feature_image(const FeatureShard &features,
                     std::span<const std::uint32_t> scale_boundaries) {
  ByteWriter w;
  w.reserve(24 + 4 * scale_boundaries.size() + 8 * features.data().size());
  encode_header(w, features.n_cols(), static_cast<std::uint32_t>(features.k()),
                scale_boundaries);
  for (double v : features.data()) {
    w.f64(v);
  }
  return w.take();
}

FeatureShard decode_feature_image(std::span<const std::uint8_t> bytes,
                                  std::size_t col_offset,
                                  FeatureFileHeader *header) {
  ByteReader r(bytes);
  auto h = parse_header(r);
  if (r.remaining() != 8 * h.n_instances * h.k) {
    throw DataFormatError("feature image size does not match its header");
  }
  std::vector<double> values(h.n_instances * h.k);
  for (auto &v : values) {
    v = r.f64();
  }
  if (header != nullptr) {
    *header = h;
  }
  return FeatureShard(h.k, col_offset, std::move(values));
}

void write_feature_file(const std::filesystem::path &path,
                        const FeatureShard &features,
                        std::span<const std::uint32_t> scale_boundaries) {
  scale_groups_from_boundaries(static_cast<std::uint32_t>(features.k()),
                               scale_boundaries);
  const auto image = encode_feature_image(features, scale_boundaries);
  auto out = open_out(path, true);
  out.write(reinterpret_cast<const char *>(image.data()),
            static_cast<std::streamsize>(image.size()));
  if (!out) {
    throw DataFormatError("failed writing " + path.string());
  }
}

Eigen::VectorXd read_labels(const std::filesystem::path &path) {
  const auto lines = read_nonblank_lines(path);
  Eigen::VectorXd y(static_cast<Eigen::Index>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    double v = 0.0;
    if (!parse_real(lines[i], v)) {
      throw DataFormatError("unparseable label on line " + std::to_string(i + 1) +
                            " of " + path.string());
    }
    if (v != 1.0 && v != -1.0) {
      throw LabelError("label '" + lines[i] + "' on line " +
                       std::to_string(i + 1) + " is not -1 or +1");
    }
    y[static_cast<Eigen::Index>(i)] = v;
  }
  return y;
}

std::vector<std::string> read_group_tokens(const std::filesystem::path &path) {
  return read_nonblank_lines(path);
}

Eigen::VectorXd read_weights(const std::filesystem::path &path) {
  const auto lines = read_nonblank_lines(path);
  Eigen::VectorXd w(static_cast<Eigen::Index>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    double v = 0.0;
    if (!parse_real(lines[i], v)) {
      throw DataFormatError("unparseable weight on line " + std::to_string(i + 1));
    }
    if (!std::isfinite(v)) {
      throw NumericError("non-finite weight on line " + std::to_string(i + 1));
    }
    w[static_cast<Eigen::Index>(i)] = v;
  }
  return w;
}

std::vector<GroupIndex> read_scale_groups(const std::filesystem::path &path) {
  const auto lines = read_nonblank_lines(path);
  std::vector<GroupIndex> out(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!parse_index(lines[i], out[i])) {
      throw DataFormatError("bad scale-group index on line " +
                            std::to_string(i + 1) + " of " + path.string());
    }
  }
  return out;
}

void write_labels(const std::filesystem::path &path, const Eigen::VectorXd &labels) {
  auto out = open_out(path, false);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    out << (labels[i] > 0 ? "1" : "-1") << '\n';
  }
}

void write_lines(const std::filesystem::path &path,
                 const std::vector<std::string> &lines) {
  auto out = open_out(path, false);
  for (const auto &l : lines) {
    out << l << '\n';
  }
}

LoadedLabels load_labels_and_groups(const std::filesystem::path &features_path,
                                    const std::filesystem::path &labels_path,
                                    const std::filesystem::path &groups_path) {
  LoadedLabels out;
  out.header = read_feature_header(features_path);
  auto labels = read_labels(labels_path);
  auto tokens = read_group_tokens(groups_path);
  const auto n = out.header.n_instances;
  if (static_cast<std::uint64_t>(labels.size()) != n ||
      static_cast<std::uint64_t>(tokens.size()) != n) {
    throw DataFormatError("dimension mismatch: " + std::to_string(n) +
                          " feature rows, " + std::to_string(labels.size()) +
                          " labels, " + std::to_string(tokens.size()) +
                          " group tokens");
  }
  auto indexed = index_group_tokens(tokens);
  const auto g = indexed.tokens.size();
  out.dataset = GroupedDataset(std::move(labels), std::move(indexed.group_of), g);
  out.group_tokens = std::move(indexed.tokens);
  out.scale_group_of =
      scale_groups_from_boundaries(out.header.k, out.header.scale_boundaries);
  return out;
}

LoadedData load_dataset(const std::filesystem::path &features_path,
                        const std::filesystem::path &labels_path,
                        const std::filesystem::path &groups_path) {
  auto meta = load_labels_and_groups(features_path, labels_path, groups_path);
  LoadedData out;
  out.features = read_feature_file(features_path);
  out.dataset = std::move(meta.dataset);
  out.group_tokens = std::move(meta.group_tokens);
  out.scale_group_of = std::move(meta.scale_group_of);
  return out;
}

// ---------------------------------------------------------------------------
// Model file

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

template <typename Seq>
std::string join_reals(const Seq &values) {
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out += ' ';
    out += format_real(values[i]);
  }
  return out;
}

Eigen::VectorXd parse_reals(std::istringstream &in, const std::string &key) {
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    double x = 0.0;
    if (!parse_real(tok, x)) {
      throw DataFormatError("model field '" + key + "' has bad value '" + tok + "'");
    }
    v.push_back(x);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

void save_model(const std::filesystem::path &path, const TrainedModel &model) {
  auto out = open_out(path, false);
  out << "version " << kModelVersion << '\n';
  out << "k " << model.feature_dim() << '\n';
  out << "N " << model.n_instances << '\n';
  out << "G " << model.hyper.n_groups() << '\n';
  out << "S " << model.hyper.n_scale_groups() << '\n';
  out << "beta" << join_reals(model.beta) << '\n';
  out << "eps" << join_reals(model.hyper.eps) << '\n';
  out << "sigma" << join_reals(model.hyper.sigma) << '\n';
  out << "scale_group_of";
  for (auto s : model.hyper.scale_group_of) {
    out << ' ' << s;
  }
  out << '\n';
  out << "final_lml " << format_real(model.final_lml) << '\n';
  if (!out) {
    throw DataFormatError("failed writing model " + path.string());
  }
}

TrainedModel load_model(const std::filesystem::path &path) {
  auto in = open_in(path, false);
  TrainedModel m;
  std::size_t k = 0, g = 0, s = 0;
  bool have_version = false, have_k = false, have_g = false, have_s = false;
  bool have_lml = false;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "version") {
      int v = 0;
      fields >> v;
      if (v != kModelVersion) {
        throw DataFormatError("unsupported model version");
      }
      have_version = true;
    } else if (key == "k") {
      have_k = static_cast<bool>(fields >> k);
    } else if (key == "N") {
      fields >> m.n_instances;
    } else if (key == "G") {
      have_g = static_cast<bool>(fields >> g);
    } else if (key == "S") {
      have_s = static_cast<bool>(fields >> s);
    } else if (key == "beta") {
      m.beta = parse_reals(fields, key);
    } else if (key == "eps") {
      m.hyper.eps = parse_reals(fields, key);
    } else if (key == "sigma") {
      m.hyper.sigma = parse_reals(fields, key);
    } else if (key == "scale_group_of") {
      std::string tok;
      while (fields >> tok) {
        GroupIndex idx = 0;
        if (!parse_index(tok, idx)) {
          throw DataFormatError("bad scale_group_of entry '" + tok + "'");
        }
        m.hyper.scale_group_of.push_back(idx);
      }
    } else if (key == "final_lml") {
      std::string tok;
      fields >> tok;
      have_lml = parse_real(tok, m.final_lml);
    } else {
      throw DataFormatError("unknown model field '" + key + "'");
    }
  }
  if (!have_version || !have_k || !have_g || !have_s || !have_lml) {
    throw DataFormatError("model file " + path.string() + " is missing fields");
  }
  if (static_cast<std::size_t>(m.beta.size()) != k ||
      m.hyper.scale_group_of.size() != k ||
      static_cast<std::size_t>(m.hyper.eps.size()) != g ||
      static_cast<std::size_t>(m.hyper.sigma.size()) != s) {
    throw DataFormatError("model field lengths disagree with k/G/S");
  }
  if (!m.beta.allFinite()) {
    throw NumericError("model beta is not finite");
  }
  m.hyper.validate();
  m.group_confidence = confidence_from_noise(m.hyper.eps);
  return m;
}

} // namespace gpgc
