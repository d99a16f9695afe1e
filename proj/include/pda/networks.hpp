#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pda/autodiff.hpp"
#include "pda/tensor.hpp"

namespace pda {

enum class HiddenActivation { kRelu, kTanh };
enum class OutputActivation { kNone, kSoftmax, kSigmoid };

/// Domain-classifier outputs are clamped into [kProbEps, 1 - kProbEps];
/// entropies and logs clamp probabilities to [kProbEps, 1].
inline constexpr double kProbEps = 1e-12;

struct MlpSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output
  HiddenActivation hidden = HiddenActivation::kRelu;
  OutputActivation output = OutputActivation::kNone;

  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  /// Throws std::invalid_argument unless there is at least one layer and all widths are positive.
  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct DenseLayer {
  Tensor2 weight;  // fan_in x fan_out
  Tensor2 bias;    // 1 x fan_out
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Mlp {
  MlpSpec spec;
  std::vector<DenseLayer> layers;
  std::size_t parameter_count() const;
  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Feature extractor F, label classifier G, domain discriminator D, and
/// the SGD momentum buffers (same layout as the parameters).
struct ModelState {
  Mlp feature;
  Mlp classifier;
  Mlp discriminator;
  std::vector<DenseLayer> feature_velocity;
  std::vector<DenseLayer> classifier_velocity;
  std::vector<DenseLayer> discriminator_velocity;
  std::uint64_t step_count = 0;

  std::size_t num_classes() const { return classifier.spec.output_width(); }
  std::size_t input_width() const { return feature.spec.input_width(); }
  std::size_t parameter_count() const;
  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Default desk-scale shapes: F = [input, 64, 32] relu, G = [32, C] softmax,
/// D = [32, 32, 1] relu then sigmoid.
MlpSpec default_feature_spec(std::size_t input_width);
MlpSpec default_classifier_spec(std::size_t num_classes);
MlpSpec default_discriminator_spec();

/// Xavier-uniform weights, zero biases. Deterministic in `seed`.
ModelState init_model(const MlpSpec& f, const MlpSpec& g, const MlpSpec& d, std::uint64_t seed);

/// Xavier-uniform bound sqrt(6 / (fan_in + fan_out)).
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

/// Parameter nodes of one network registered in a graph.
struct MlpNodes {
  const MlpSpec* spec = nullptr;
  std::vector<NodeId> weights;
  std::vector<NodeId> biases;
};

/// Registers the network's parameters as "<prefix>.<layer>.weight/bias".
MlpNodes bind_parameters(Graph& graph, const Mlp& mlp, const std::string& prefix);
/// Applies the network to x, including its output activation (sigmoid
/// outputs are clamped to [kProbEps, 1 - kProbEps]).
NodeId apply_mlp(Graph& graph, const MlpNodes& net, NodeId x);

/// Per-class probabilities G(F(x)); one row per input row.
Tensor2 classify(const ModelState& model, const Tensor2& x);
/// Source-domain probability D(F(x)), batch x 1.
Tensor2 discriminate(const ModelState& model, const Tensor2& x);
/// Feature matrix F(x).
Tensor2 extract_features(const ModelState& model, const Tensor2& x);

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.9;
  double head_lr_multiplier = 10.0;  // applied to G and D
};

/// v <- momentum * v + grad; theta <- theta - lr_eff * v. `grads` must hold
/// every parameter under its bind_parameters() name ("F.*", "G.*", "D.*").
ModelState sgd_step(const ModelState& model, const GradientMap& grads, const SgdOptions& opts);

/// Checkpoint document (JSON) with a format version, the three specs and
/// row-major parameter arrays. Momentum buffers are included.
inline constexpr int kCheckpointFormatVersion = 1;
void save_checkpoint(const ModelState& model, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace pda
