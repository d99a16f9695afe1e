#include "pda/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "pda/rng.hpp"

namespace pda {
namespace {

constexpr int kSourceDomain = 0;
constexpr int kTargetDomain = 1;

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

template <typename T>
bool parse_number(std::string_view cell, T& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::size_t parse_header_field(std::string_view cell, std::string_view key) {
  const auto eq = cell.find('=');
  long long v = 0;
  if (eq == std::string_view::npos || trim(cell.substr(0, eq)) != key ||
      !parse_number(trim(cell.substr(eq + 1)), v) || v <= 0) {
    throw CsvParseError(1, "header must read d=<int>,C=<int>");
  }
  return static_cast<std::size_t>(v);
}

void append_double(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

CsvParseError::CsvParseError(std::size_t line, const std::string& detail, const std::string& file)
    : std::runtime_error((file.empty() ? std::string() : file + ": ") +
                         (line == 0 ? detail : "line " + std::to_string(line) + ": " + detail)),
      line_(line),
      detail_(detail) {}

// ---- SealedLabels -------------------------------------------------------------

SealedLabels::SealedLabels(std::vector<std::size_t> labels, std::size_t classes)
    : labels_(std::move(labels)), classes_(classes) {
  for (std::size_t y : labels_) {
    if (y >= classes_) throw std::invalid_argument("sealed label out of range");
  }
}

void SealedLabels::check_preds(const Tensor2& preds) const {
  if (preds.rows() != labels_.size() || preds.cols() != classes_) {
    throw std::invalid_argument("prediction shape " + preds.shape_string() +
                                " does not match sealed labels");
  }
}

double SealedLabels::accuracy(const Tensor2& preds) const {
  check_preds(preds);
  if (labels_.empty()) throw std::invalid_argument("no sealed labels to evaluate against");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < labels_.size(); ++r) hits += argmax_row(preds.row(r)) == labels_[r];
  return static_cast<double>(hits) / static_cast<double>(labels_.size());
}

std::vector<std::vector<std::size_t>> SealedLabels::confusion(const Tensor2& preds) const {
  check_preds(preds);
  std::vector<std::vector<std::size_t>> m(classes_, std::vector<std::size_t>(classes_, 0));
  for (std::size_t r = 0; r < labels_.size(); ++r) ++m[labels_[r]][argmax_row(preds.row(r))];
  return m;
}

std::vector<std::size_t> SealedLabels::present_classes() const {
  std::vector<bool> seen(classes_, false);
  for (std::size_t y : labels_) seen[y] = true;
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < classes_; ++c) {
    if (seen[c]) out.push_back(c);
  }
  return out;
}

void SealedLabels::save(const std::filesystem::path& path) const {
  std::string text;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    text += std::to_string(i) + "," + std::to_string(labels_[i]) + "\n";
  }
  write_file(path, text);
}

SealedLabels SealedLabels::load(const std::filesystem::path& path, std::size_t expected_rows,
                                std::size_t classes) {
  const std::string text = read_file(path);
  std::vector<std::size_t> labels(expected_rows);
  std::vector<bool> seen(expected_rows, false);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    long long idx = 0, label = 0;
    if (cells.size() != 2 || !parse_number(cells[0], idx) || !parse_number(cells[1], label)) {
      throw CsvParseError(line_no, "expected index,label");
    }
    if (idx < 0 || static_cast<std::size_t>(idx) >= expected_rows) {
      throw CsvParseError(line_no, "index out of range");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw CsvParseError(line_no, "label out of range");
    }
    labels[static_cast<std::size_t>(idx)] = static_cast<std::size_t>(label);
    seen[static_cast<std::size_t>(idx)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw CsvParseError(0, "eval labels do not cover every target sample");
  }
  return SealedLabels(std::move(labels), classes);
}

// ---- dataset -----------------------------------------------------------------

void PdaDataset::validate() const {
  const auto& v = view;
  if (v.source_x.rows() == 0) throw std::invalid_argument("dataset: empty source domain");
  if (v.target_x.rows() == 0) throw std::invalid_argument("dataset: empty target domain");
  if (v.source_x.cols() != v.target_x.cols()) throw std::invalid_argument("dataset: dimension mismatch");
  if (v.source_y.size() != v.source_x.rows()) throw std::invalid_argument("dataset: source label count");
  for (std::size_t y : v.source_y) {
    if (y >= v.classes) throw std::invalid_argument("dataset: source label out of range");
  }
  if (target_labels) {
    if (target_labels->size() != v.target_x.rows() || target_labels->classes() != v.classes) {
      throw std::invalid_argument("dataset: sealed labels do not match target");
    }
  }
  if (shared_classes.size() > v.classes) throw std::invalid_argument("dataset: too many shared classes");
}

PdaDataset assemble_dataset(const DomainFile& source, const DomainFile& target,
                            std::optional<SealedLabels> target_labels) {
  if (source.dim != target.dim) throw std::invalid_argument("source and target dimensions differ");
  if (source.classes != target.classes) throw std::invalid_argument("source and target class counts differ");
  PdaDataset ds;
  ds.view.classes = source.classes;
  ds.view.source_x = Tensor2(source.samples.size(), source.dim);
  for (std::size_t i = 0; i < source.samples.size(); ++i) {
    const auto& s = source.samples[i];
    if (!s.label) throw std::invalid_argument("source sample " + std::to_string(i) + " is unlabeled");
    std::copy(s.features.begin(), s.features.end(), ds.view.source_x.row(i).begin());
    ds.view.source_y.push_back(*s.label);
  }
  ds.view.target_x = Tensor2(target.samples.size(), target.dim);
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    std::copy(target.samples[i].features.begin(), target.samples[i].features.end(),
              ds.view.target_x.row(i).begin());
  }
  if (target_labels) ds.shared_classes = target_labels->present_classes();
  ds.target_labels = std::move(target_labels);
  ds.validate();
  return ds;
}

TrainingView standardize(const TrainingView& view) {
  const std::size_t n = view.source_x.rows(), d = view.source_x.cols();
  if (n == 0) throw std::invalid_argument("standardize: empty source");
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += view.source_x(r, c);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = view.source_x(r, c) - mean[c];
      sd[c] += dv * dv;
    }
  for (double& s : sd) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;
  }
  TrainingView out = view;
  for (Tensor2* x : {&out.source_x, &out.target_x}) {
    for (std::size_t r = 0; r < x->rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) (*x)(r, c) = ((*x)(r, c) - mean[c]) / sd[c];
  }
  return out;
}

std::size_t class_stride(std::size_t classes) {
  if (classes <= 2) return 1;
  const double target = static_cast<double>(classes) * (3.0 - std::sqrt(5.0)) / 2.0;
  const auto base = static_cast<std::size_t>(std::lround(target));
  for (std::size_t off = 0; off < classes; ++off) {
    for (std::size_t s : {base + off, base - off}) {
      if (s >= 1 && s < classes && std::gcd(s, classes) == 1) return s;
    }
  }
  return 1;
}

MeanLayout parse_layout(std::string_view name) {
  if (name == "simplex") return MeanLayout::kSimplex;
  if (name == "circle") return MeanLayout::kCircle;
  throw std::invalid_argument("unknown layout '" + std::string(name) + "' (expected simplex or circle)");
}

const char* layout_name(MeanLayout layout) { return layout == MeanLayout::kSimplex ? "simplex" : "circle"; }

PdaDataset generate_synthetic_pda(const SyntheticConfig& cfg) {
  if (cfg.shared > cfg.classes) throw std::invalid_argument("shared exceeds classes");
  if (cfg.shared < 3) throw std::invalid_argument("shared must be at least 3");
  if (cfg.dim < 2) throw std::invalid_argument("dim must be at least 2");
  if (cfg.per_class == 0) throw std::invalid_argument("per_class must be positive");

  auto rng = make_rng(cfg.seed, Stream::kGenerator);
  std::normal_distribution<double> noise(0.0, 1.0);
  if (cfg.layout == MeanLayout::kSimplex && cfg.dim < cfg.classes) {
    throw std::invalid_argument("simplex layout needs dim >= classes");
  }
  const std::size_t stride = class_stride(cfg.classes);
  auto draw = [&](std::size_t k, std::span<double> row) {
    for (double& v : row) v = noise(rng);
    if (cfg.layout == MeanLayout::kSimplex) {
      row[cfg.classes - 1 - k] += cfg.radius;
      return;
    }
    const double slot = static_cast<double>((k * stride) % cfg.classes);
    const double angle = 2.0 * std::numbers::pi * slot / static_cast<double>(cfg.classes);
    row[0] += cfg.radius * std::cos(angle);
    row[1] += cfg.radius * std::sin(angle);
  };

  PdaDataset ds;
  ds.view.classes = cfg.classes;
  ds.view.source_x = Tensor2(cfg.classes * cfg.per_class, cfg.dim);
  for (std::size_t k = 0, r = 0; k < cfg.classes; ++k) {
    for (std::size_t i = 0; i < cfg.per_class; ++i, ++r) {
      draw(k, ds.view.source_x.row(r));
      ds.view.source_y.push_back(k);
    }
  }

  const double cr = std::cos(cfg.rotation), sr = std::sin(cfg.rotation);
  ds.view.target_x = Tensor2(cfg.shared * cfg.per_class, cfg.dim);
  std::vector<std::size_t> target_y;
  for (std::size_t k = 0, r = 0; k < cfg.shared; ++k) {
    for (std::size_t i = 0; i < cfg.per_class; ++i, ++r) {
      auto row = ds.view.target_x.row(r);
      draw(k, row);
      const double x = row[0], y = row[1];
      row[0] = cr * x - sr * y + cfg.shift;
      row[1] = sr * x + cr * y;
      target_y.push_back(k);
    }
  }
  ds.target_labels = SealedLabels(std::move(target_y), cfg.classes);
  ds.shared_classes.resize(cfg.shared);
  std::iota(ds.shared_classes.begin(), ds.shared_classes.end(), std::size_t{0});
  ds.validate();
  return ds;
}

// ---- CSV ------------------------------------------------------------------------

DomainFile parse_feature_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  DomainFile out;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto cells = split_commas(body);
    if (!have_header) {
      if (cells.size() != 2) throw CsvParseError(line_no, "header must read d=<int>,C=<int>");
      out.dim = parse_header_field(cells[0], "d");
      out.classes = parse_header_field(cells[1], "C");
      have_header = true;
      continue;
    }
    if (cells.size() != out.dim + 1) {
      throw CsvParseError(line_no, "expected " + std::to_string(out.dim + 1) + " cells, found " +
                                       std::to_string(cells.size()));
    }
    FeatureSample s;
    s.features.resize(out.dim);
    for (std::size_t c = 0; c < out.dim; ++c) {
      if (!parse_number(cells[c], s.features[c]) || !std::isfinite(s.features[c])) {
        throw CsvParseError(line_no, "cell " + std::to_string(c + 1) + " is not a finite number");
      }
    }
    long long label = 0;
    if (!parse_number(cells[out.dim], label)) throw CsvParseError(line_no, "label is not an integer");
    if (label < -1 || (label >= 0 && static_cast<std::size_t>(label) >= out.classes)) {
      throw CsvParseError(line_no, "label " + std::to_string(label) + " out of range for C=" +
                                       std::to_string(out.classes));
    }
    if (label >= 0) s.label = static_cast<std::size_t>(label);
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw CsvParseError(0, "no samples");
  return out;
}

DomainFile load_feature_csv(const std::filesystem::path& path) {
  try {
    return parse_feature_csv(read_file(path));
  } catch (const CsvParseError& e) {
    throw CsvParseError(e.line(), e.detail(), path.string());
  }
}

std::string format_feature_csv(const DomainFile& domain) {
  std::string text = "d=" + std::to_string(domain.dim) + ",C=" + std::to_string(domain.classes) + "\n";
  for (const auto& s : domain.samples) {
    for (double v : s.features) {
      append_double(text, v);
      text += ',';
    }
    text += s.label ? std::to_string(*s.label) : "-1";
    text += '\n';
  }
  return text;
}

void write_feature_csv(const std::filesystem::path& path, const DomainFile& domain) {
  write_file(path, format_feature_csv(domain));
}

DomainFile source_domain_file(const PdaDataset& ds) {
  DomainFile f{ds.view.dim(), ds.view.classes, {}};
  for (std::size_t r = 0; r < ds.view.source_x.rows(); ++r) {
    auto row = ds.view.source_x.row(r);
    f.samples.push_back({{row.begin(), row.end()}, ds.view.source_y[r]});
  }
  return f;
}

DomainFile target_domain_file(const PdaDataset& ds) {
  DomainFile f{ds.view.dim(), ds.view.classes, {}};
  for (std::size_t r = 0; r < ds.view.target_x.rows(); ++r) {
    auto row = ds.view.target_x.row(r);
    f.samples.push_back({{row.begin(), row.end()}, std::nullopt});
  }
  return f;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_fingerprint(const std::filesystem::path& path) { return hex64(fnv1a64(read_file(path))); }

// ---- sampler -----------------------------------------------------------------------

BatchSampler::BatchSampler(std::size_t n_source, std::size_t n_target, std::size_t batch,
                           std::uint64_t seed)
    : n_source_(n_source), n_target_(n_target), batch_(batch), seed_(seed) {
  if (n_source == 0 || n_target == 0) throw std::invalid_argument("BatchSampler: empty domain");
  if (batch == 0) throw std::invalid_argument("BatchSampler: batch must be positive");
}

const std::vector<std::size_t>& BatchSampler::epoch_order(int domain, std::uint64_t epoch) {
  const auto key = std::pair{domain, epoch};
  auto it = orders_.find(key);
  if (it != orders_.end()) return it->second;
  // Keep at most the previous epoch per domain around.
  std::erase_if(orders_, [&](const auto& kv) {
    return kv.first.first == domain && kv.first.second + 1 < epoch;
  });
  const std::size_t n = domain == kSourceDomain ? n_source_ : n_target_;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed_, domain == kSourceDomain ? Stream::kShuffleSource : Stream::kShuffleTarget, epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return orders_.emplace(key, std::move(order)).first->second;
}

std::vector<std::size_t> BatchSampler::take(std::uint64_t iteration, std::size_t n, int domain) {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  const std::uint64_t start = iteration * batch_;
  for (std::uint64_t pos = start; pos < start + batch_; ++pos) {
    out.push_back(epoch_order(domain, pos / n)[pos % n]);
  }
  return out;
}

BatchIndices BatchSampler::draw(std::uint64_t iteration, double rho) {
  BatchIndices b;
  b.source = take(iteration, n_source_, kSourceDomain);
  b.target = take(iteration, n_target_, kTargetDomain);
  const std::size_t n_aug = static_cast<std::size_t>(std::floor(rho * static_cast<double>(batch_)));
  if (n_aug > 0) {
    auto rng = make_rng(seed_, Stream::kAugment, iteration);
    std::uniform_int_distribution<std::size_t> pick(0, n_source_ - 1);
    for (std::size_t i = 0; i < n_aug; ++i) b.augment.push_back(pick(rng));
  }
  return b;
}

}  // namespace pda
