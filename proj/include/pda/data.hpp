#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pda/tensor.hpp"

namespace pda {

struct FeatureSample {
  std::vector<double> features;
  std::optional<std::size_t> label;
};

/// One domain as stored on disk: dimension, class count and samples.
struct DomainFile {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<FeatureSample> samples;
};

/// Parse failure with the 1-based line it occurred on (0 for file-level errors).
class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(std::size_t line, const std::string& detail, const std::string& file = {});
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/// Target labels kept apart from everything training can reach. Only
/// aggregate evaluation results leave this class.
class SealedLabels {
 public:
  SealedLabels(std::vector<std::size_t> labels, std::size_t classes);

  std::size_t size() const { return labels_.size(); }
  std::size_t classes() const { return classes_; }
  /// Fraction of rows whose argmax (lowest index on ties) equals the label.
  double accuracy(const Tensor2& preds) const;
  /// confusion[true][predicted] counts.
  std::vector<std::vector<std::size_t>> confusion(const Tensor2& preds) const;
  /// Classes with at least one target sample.
  std::vector<std::size_t> present_classes() const;

  void save(const std::filesystem::path& path) const;
  static SealedLabels load(const std::filesystem::path& path, std::size_t expected_rows,
                           std::size_t classes);

 private:
  void check_preds(const Tensor2& preds) const;
  std::vector<std::size_t> labels_;
  std::size_t classes_;
};

/// Everything the trainer may read: labeled source, unlabeled target.
struct TrainingView {
  Tensor2 source_x;
  std::vector<std::size_t> source_y;
  Tensor2 target_x;
  std::size_t classes = 0;

  std::size_t dim() const { return source_x.cols(); }
};

struct PdaDataset {
  TrainingView view;
  std::optional<SealedLabels> target_labels;
  std::vector<std::size_t> shared_classes;  // empty when unknown

  /// Validates label ranges and dimensions; throws std::invalid_argument.
  void validate() const;
};

/// Builds a dataset from a labeled source file and an unlabeled target file.
PdaDataset assemble_dataset(const DomainFile& source, const DomainFile& target,
                            std::optional<SealedLabels> target_labels = std::nullopt);

/// z-score every feature with source statistics, applied to both domains.
TrainingView standardize(const TrainingView& view);

/// kSimplex: class k has mean radius * e_{C-1-k} (needs dim >= C), so the
/// first two dimensions, which carry the target transform, are the axes of
/// the last classes. kCircle: means on a circle of the given radius in the
/// first two dimensions, at slot (k * class_stride(C)) mod C.
enum class MeanLayout { kSimplex, kCircle };

struct SyntheticConfig {
  std::size_t classes = 10;
  std::size_t shared = 5;
  std::size_t dim = 16;
  std::size_t per_class = 200;
  double shift = 2.0;
  double rotation = 0.0;  // radians
  double radius = 3.5;    // distance of every class mean from the origin
  MeanLayout layout = MeanLayout::kSimplex;
  std::uint64_t seed = 1;
};

/// Stride coprime to C near C (3 - sqrt 5) / 2, so consecutive class
/// indices are spread around the circle rather than packed on one arc.
std::size_t class_stride(std::size_t classes);

MeanLayout parse_layout(std::string_view name);
const char* layout_name(MeanLayout layout);

/// Gaussian-mixture benchmark with unit covariance. The target holds only
/// the first `shared` classes; each target sample is rotated by `rotation`
/// and then translated by `shift` along the first axis, in the first two
/// dimensions.
PdaDataset generate_synthetic_pda(const SyntheticConfig& cfg);

/// Schema: first line `d=<int>,C=<int>`; then one sample per line, d
/// decimal features followed by an integer label (-1 = unlabeled).
DomainFile load_feature_csv(const std::filesystem::path& path);
/// Parses CSV text (see load_feature_csv for the schema).
DomainFile parse_feature_csv(const std::string& text);
void write_feature_csv(const std::filesystem::path& path, const DomainFile& domain);
std::string format_feature_csv(const DomainFile& domain);

DomainFile source_domain_file(const PdaDataset& ds);
/// Target with labels written as -1.
DomainFile target_domain_file(const PdaDataset& ds);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
std::string file_fingerprint(const std::filesystem::path& path);

struct BatchIndices {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
  std::vector<std::size_t> augment;
};

/// Per-epoch shuffled cycling over source and target, plus an augmentation
/// draw (uniform with replacement from the whole source set). Every batch is
/// a pure function of (seed, iteration, rho).
class BatchSampler {
 public:
  BatchSampler(std::size_t n_source, std::size_t n_target, std::size_t batch, std::uint64_t seed);

  BatchIndices draw(std::uint64_t iteration, double rho);
  std::size_t batch() const { return batch_; }

 private:
  std::vector<std::size_t> take(std::uint64_t iteration, std::size_t n, int domain);
  const std::vector<std::size_t>& epoch_order(int domain, std::uint64_t epoch);

  std::size_t n_source_, n_target_, batch_;
  std::uint64_t seed_;
  std::map<std::pair<int, std::uint64_t>, std::vector<std::size_t>> orders_;
};

}  // namespace pda
